#pragma once

#include <Eigen/Core>
#include <vector>

#include "quarks/als.hpp"
#include "quarks/quarks_model.hpp"
#include "quarks/sensor_batch.hpp"

namespace quarks {

/// Time-constant set of failed sensor channels, indexed over the lifted
/// channel vector (column-stacked frame, zero based).
class MissingMask {
 public:
  MissingMask() = default;
  MissingMask(Eigen::Index channels, std::vector<Eigen::Index> missing);

  Eigen::Index channels() const { return channels_; }
  const std::vector<Eigen::Index>& missing() const { return missing_; }
  std::vector<Eigen::Index> known() const;
  Eigen::Index missing_count() const {
    return static_cast<Eigen::Index>(missing_.size());
  }
  bool empty() const { return missing_.empty(); }
  double ratio() const {
    return channels_ == 0 ? 0.0 : double(missing_.size()) / double(channels_);
  }

 private:
  Eigen::Index channels_ = 0;
  std::vector<Eigen::Index> missing_;  // sorted, unique
};

/// Estimates the values of the missing channels over the whole batch with
/// the model held fixed: one coupled ridge least squares over the unknown
/// sequence, every model equation row included (so an unknown at time t
/// couples to the residuals at t..t+order), each (channel, time) value
/// parameterized exactly once. The ridge weight multiplies each unknown by
/// the number of equation windows it appears in, matching the stacked
/// per-window form. Returns the completed batch.
SensorBatch impute_given_model(const QuarksModel& model,
                               const SensorBatch& observed,
                               const MissingMask& mask, double ridge);

struct MissingFit {
  QuarksModel model;
  SensorBatch completed;
  AlsReport report;
};

/// Joint estimation of factors and missing channels: inserts the imputation
/// solve after each pair of factor updates and applies the usual stopping
/// rule to the full cost (equation residuals on completed data + penalties +
/// ridge). With an empty mask this dispatches to als_fit unchanged.
/// Converges to a stationary point of the joint cost; no global claim.
MissingFit fit_with_missing(const SensorBatch& batch, const MissingMask& mask,
                            int order, int rank, const AlsOptions& options = {},
                            const RegularizationConfig& reg = {});

}  // namespace quarks
