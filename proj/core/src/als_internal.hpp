#pragma once

// Shared machinery of the alternating least-squares updates. The left and
// right half-steps are the same problem in transposed coordinates: solving
// for right factors B in S_k ~ sum A_ij S_{k-i} B_ij with A fixed, and the
// transposed batch with fixed B^T in place of A recovers A^T. Both penalties
// are invariant under that transposition, so one solver serves both steps.

#include <Eigen/Core>
#include <string>
#include <vector>

#include "quarks/regularizers.hpp"

namespace quarks::detail {

using FactorGrid = std::vector<std::vector<Eigen::MatrixXd>>;

FactorGrid transpose_grid(const FactorGrid& g);

/// Stacked column norms of a factor grid: column c of the result of stacking
/// all factors vertically (lag outer, term inner).
Eigen::VectorXd stacked_column_norms(const FactorGrid& g);

struct HalfStepOptions {
  int threads = 1;
  /// Solve rank-deficient systems with a pivoted factorization instead of
  /// failing (used with explicit initializers and degenerate iterates).
  bool allow_deficient = false;
  bool fast_gram = false;
  double deficiency_tol = 1e-12;
};

struct HalfStepResult {
  FactorGrid factors;            // solved factors, cols x cols per (lag,term)
  double cost = 0.0;             // data fit + penalties at the solution
  double min_singular_value = 0.0;
  bool deficient = false;        // regressor numerically rank-deficient
  bool used_fallback = false;    // pivoted path taken
  std::string deficient_block;   // (lag,term,column) of the first dead column
};

/// Solves the per-column least squares for the factors applied on the
/// column side, with the row-side factors fixed: targets[k] is matched by
/// sum_ij fixed[i][j] * regressors[k-i] * X[i][j] for k >= order. The
/// output-only fit passes the same series twice. reg carries mu/lambda and
/// the kernel hyperparameters.
HalfStepResult solve_column_factors(
    const std::vector<Eigen::MatrixXd>& targets,
    const std::vector<Eigen::MatrixXd>& regressors, int order, int rank,
    const FactorGrid& fixed, const RegularizationConfig& reg,
    const HalfStepOptions& opts);

}  // namespace quarks::detail
