#pragma once

#include <Eigen/Core>
#include <vector>

#include "quarks/sensor_batch.hpp"

namespace quarks {

/// Unstructured VAR model on the lifted channel vector: one dense
/// channels x channels coefficient matrix per lag.
struct DenseVarModel {
  int order = 0;
  Eigen::Index channels = 0;
  std::vector<Eigen::MatrixXd> coefficients;  // [lag-1]

  /// One-step prediction from the last `order` lifted frames, most recent
  /// last.
  Eigen::VectorXd predict_one(const std::vector<Eigen::VectorXd>& history) const;
};

/// Lifted data blocks of the least-squares VAR problem: `future` columns are
/// vec(S_k) for k = order+1..size, `past` stacks the corresponding lag
/// vectors vec(S_{k-1}); ...; vec(S_{k-order}).
struct LiftedData {
  Eigen::MatrixXd future;  // channels x (size-order)
  Eigen::MatrixXd past;    // channels*order x (size-order)
};

LiftedData build_lifted_blocks(const SensorBatch& batch, int order);

/// Exact least-squares VAR estimate through the normal equations of the
/// lifted blocks. Requires enough samples for a unique solution and a full
/// row rank past block; a rank-deficient system raises a diagnostic with the
/// numerical rank.
DenseVarModel fit_dense_var(const SensorBatch& batch, int order);

struct SparseFitResult {
  DenseVarModel model;
  bool converged = false;
  int iterations = 0;
  std::vector<double> objective_trace;
};

/// l1-penalized least-squares VAR solved by monotone accelerated proximal
/// gradient with backtracking: data term as in fit_dense_var plus
/// tau * sum_i ||vec(A_i)||_1. tau = 0 reproduces the dense estimate. When
/// the iteration cap is reached before the relative objective change drops
/// below rel_tol the best iterate is returned with converged = false.
SparseFitResult fit_sparse_var(const SensorBatch& batch, int order, double tau,
                               int max_iterations = 5000,
                               double rel_tol = 1e-8);

/// Max-magnitude gradient of the data term at zero; any tau at or above this
/// yields the all-zero solution.
double sparse_tau_max(const SensorBatch& batch, int order);

}  // namespace quarks
