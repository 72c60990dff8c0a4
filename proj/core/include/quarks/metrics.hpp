#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "quarks/baselines.hpp"
#include "quarks/quarks_model.hpp"
#include "quarks/sensor_batch.hpp"

namespace quarks {

/// Variance accounted for, in percent:
/// max(0, (1 - mean||s - s_hat||^2 / mean||s||^2) * 100). Columns are time
/// samples. An all-zero actual signal has no defined ratio and errors.
double vaf(const Eigen::MatrixXd& actual, const Eigen::MatrixXd& predicted);
double vaf(const SensorBatch& actual, const SensorBatch& predicted);

/// One-step-ahead predictions of a model over a batch; the first `order`
/// frames have no prediction and are skipped. Returns (actual, predicted)
/// as channel x time matrices aligned in time.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> one_step_predictions(
    const QuarksModel& model, const SensorBatch& batch);
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> one_step_predictions(
    const DenseVarModel& model, const SensorBatch& batch);

/// Parameter count of the structured model: every factor entry counts, no
/// truncation.
Eigen::Index model_complexity(const QuarksModel& model);

/// Nonzero count of a dense model: entries below `truncation` times the
/// per-matrix max magnitude are dropped.
Eigen::Index model_complexity(const DenseVarModel& model,
                              double truncation = 0.01);

struct BenchRecord {
  std::string method;
  int n = 0;               // grid side
  Eigen::Index samples = 0;
  int order = 0;
  int rank = 0;
  double seconds = 0.0;    // median fit wall time
  double vaf_percent = 0.0;
  Eigen::Index nonzeros = 0;
  int threads = 1;
};

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stddev = 0.0;
};

/// Ordinary least squares of log10(time) on log10(size); slope_stddev is the
/// standard error of the slope estimate.
SlopeFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points);

/// Median wall time of fn over `repetitions` runs after one discarded
/// warm-up. Runs too short for the clock are repeated in an inner loop until
/// the measured span exceeds min_seconds, and the average per run is used.
double time_median(const std::function<void()>& fn, int repetitions,
                   double min_seconds = 1e-3);

struct ScalingOptions {
  std::vector<int> sizes;
  int repetitions = 3;
  int order = 4;
  int rank = 2;
  std::uint64_t seed = 1;
  int threads = 1;       // measurements default to single-threaded
  double noise_std = 1.0;
  int max_iterations = 10;  // fixed iteration budget for comparable timings
};

struct ScalingResult {
  std::vector<BenchRecord> records;
  std::map<std::string, SlopeFit> slopes;
};

/// Timing sweep over grid sizes for the built-in methods "quarks"
/// (structured ALS, sample count 10*order*rank*n) and "dense"
/// (unstructured least squares, sample count 50*n^2). Data generation and
/// validation are outside the timed region.
ScalingResult scaling_bench(const std::vector<std::string>& methods,
                            const ScalingOptions& options);

/// Same harness with a caller-supplied timed body (used to check the slope
/// machinery against known workloads).
ScalingResult scaling_bench_custom(const std::string& name,
                                   const std::function<void(int)>& work,
                                   const ScalingOptions& options);

}  // namespace quarks
