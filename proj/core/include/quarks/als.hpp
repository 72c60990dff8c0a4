#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "quarks/quarks_model.hpp"
#include "quarks/regularizers.hpp"
#include "quarks/sensor_batch.hpp"

namespace quarks {

struct AlsOptions {
  int max_iterations = 100;
  /// Stop once |c(l) - c(l-1)| <= tolerance held for `patience` iterations.
  double tolerance = 1e-5;
  int patience = 3;
  /// Per-column norms to rescale the stacked right-factor matrix to after
  /// each update. Enables the normalized variant of the algorithm; requires
  /// frame_cols entries, all positive.
  std::optional<Eigen::VectorXd> column_norm_targets;
  std::uint64_t seed = 0;
  int threads = 0;  // 0: QUARKS_THREADS env, else 1
  /// Explicit initial left factors [lag][term]. Disables the random
  /// initializer and its rank-deficiency redraws; a deficient regressor then
  /// falls back to a rank-revealing solve instead of erroring, which lets a
  /// degenerate start converge to the lower-rank solution it spans.
  std::optional<std::vector<std::vector<Eigen::MatrixXd>>> initial_left;
  /// Solve the per-column problems through the cached Gramian (normal
  /// equations) instead of QR when the condition estimate stays below 1e8.
  bool fast_gram = false;
};

enum class Termination { converged, max_iterations };

struct AlsReport {
  std::vector<double> cost_trace;  // value of the regularized cost per iteration
  int iterations = 0;
  Termination termination = Termination::max_iterations;
  double wall_seconds = 0.0;
  /// Tracked only when normalization is off; true when the trace never
  /// increased beyond arithmetic slack.
  bool cost_monotone = true;
  /// Smallest singular value of the final stacked regressor (data rows plus
  /// temporal penalty rows); positive with margin when excitation holds.
  double min_singular_value = 0.0;
  int initializer_redraws = 0;
  bool rank_deficient_fallback = false;
};

struct AlsFit {
  QuarksModel model;
  AlsReport report;
};

/// Target and regressor layouts of the stacked least-squares form of the
/// data-fitting term. stacked_targets has frame_rows blocks of (size-order)
/// rows, block a holding the time series of sensor row a; column b is sensor
/// column b. lag_regressors[i-1] row t is frame (order+t-i) flattened
/// row-major.
struct DataBlocks {
  Eigen::MatrixXd stacked_targets;
  std::vector<Eigen::MatrixXd> lag_regressors;
};

DataBlocks build_data_blocks(const SensorBatch& batch, int order);

/// Numerical column ranks of the per-lag regressors (persistency-of-
/// excitation diagnostic).
std::vector<Eigen::Index> excitation_ranks(const SensorBatch& batch, int order,
                                           double tol = 1e-10);

/// Alternating least squares for the Kronecker-structured VAR model:
/// alternates exact per-column least-squares updates of the right and left
/// factor sets under the regularized cost, with optional column
/// normalization, and fixes the sign of each lag by the leading right-factor
/// entry on exit.
AlsFit als_fit(const SensorBatch& batch, int order, int rank,
               const AlsOptions& options = {},
               const RegularizationConfig& reg = {});

/// Same alternation with an exogenous regressor series: targets[k] is fitted
/// by sum_ij left[i][j] * regressors[k-i] * right[i][j]. Both series must be
/// aligned in time and share frame dimensions. The output-only overload is
/// this call with the batch passed on both sides.
AlsFit als_fit(const SensorBatch& targets, const SensorBatch& regressors,
               int order, int rank, const AlsOptions& options = {},
               const RegularizationConfig& reg = {});

/// Regularized identification cost of a model on a batch: squared data-fit
/// residual over frames order+1..size plus the weighted temporal and spatial
/// penalties.
double model_cost(const QuarksModel& model, const SensorBatch& batch,
                  const RegularizationConfig& reg = {});

/// Cost against an exogenous regressor series.
double model_cost(const QuarksModel& model, const SensorBatch& targets,
                  const SensorBatch& regressors,
                  const RegularizationConfig& reg = {});

}  // namespace quarks
