#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "quarks/kron.hpp"
#include "quarks/sensor_batch.hpp"

namespace quarks {

/// Vector-autoregressive model whose lag coefficient matrices are sums of
/// Kronecker products of small factor matrices. A frame S evolves as
///   S_k = sum_i sum_j left[i][j] * S_{k-i} * right[i][j] + noise,
/// equivalently vec(S_k) = sum_i A_i vec(S_{k-i}) with
/// A_i = sum_j right[i][j]^T (x) left[i][j]. Left factors act on frame rows,
/// right factors on frame columns; the number of terms is the same for every
/// lag.
struct QuarksModel {
  Eigen::Index frame_rows = 0;
  Eigen::Index frame_cols = 0;
  int order = 0;  // temporal lags p
  int rank = 0;   // Kronecker terms per lag r
  std::vector<std::vector<Eigen::MatrixXd>> left;   // [lag][term], rows x rows
  std::vector<std::vector<Eigen::MatrixXd>> right;  // [lag][term], cols x cols

  static QuarksModel zero(Eigen::Index rows, Eigen::Index cols, int order,
                          int rank);

  /// Checks shapes and that every entry is finite.
  void validate() const;

  /// One-step prediction from the last `order` frames, most recent last.
  Eigen::MatrixXd predict_one(const std::vector<Eigen::MatrixXd>& history) const;

  /// Lag coefficient matrix right^T (x) left as a KronSum (lag is 1-based).
  KronSum coefficient(int lag) const;
  Eigen::MatrixXd coefficient_dense(int lag) const;

  Eigen::Index parameter_count() const {
    return Eigen::Index(order) * rank *
           (frame_rows * frame_rows + frame_cols * frame_cols);
  }
};

struct SimulationResult {
  SensorBatch batch;
  bool truncated = false;       // stopped early on a non-finite state
  Eigen::Index steps_completed = 0;
};

/// Iterates the recursion from `initial` (exactly model.order frames) for
/// `horizon` further steps, adding i.i.d. Gaussian noise of the given
/// standard deviation to every channel. The returned batch contains the
/// initial frames followed by the generated ones. A non-finite state
/// truncates the run and sets the flag.
SimulationResult simulate(const QuarksModel& model,
                          const std::vector<Eigen::MatrixXd>& initial,
                          Eigen::Index horizon, double noise_std,
                          std::uint64_t seed);

}  // namespace quarks
