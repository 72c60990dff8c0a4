#pragma once

#include <string>
#include <variant>
#include <vector>

#include "quarks/als.hpp"
#include "quarks/baselines.hpp"
#include "quarks/metrics.hpp"
#include "quarks/missing_data.hpp"
#include "quarks/quarks_model.hpp"
#include "quarks/sensor_batch.hpp"

namespace quarks {

/// Batch file format: UTF-8 CSV whose first line is
///   # quarks-batch v1 N=<frame rows> channels=<c> Nt=<t>
/// followed by one row per time sample, channels in lifted (column-stacked
/// frame) order, printed with 17 significant digits so doubles round-trip
/// bit-faithfully.
void write_batch_csv(const std::string& path, const SensorBatch& batch);
SensorBatch read_batch_csv(const std::string& path);

/// Model container: JSON with format tag "quarks-model", version 1, a kind
/// of "quarks" or "dense", dimensions, and row-major factor/coefficient
/// entries. Numbers are printed shortest-round-trip.
void write_model_json(const std::string& path, const QuarksModel& model);
void write_model_json(const std::string& path, const DenseVarModel& model);
using AnyModel = std::variant<QuarksModel, DenseVarModel>;
AnyModel read_model_json(const std::string& path);

/// Mask file: CSV of zero-based lifted channel indices that are missing
/// (newlines and commas both accepted as separators).
MissingMask read_mask_csv(const std::string& path, Eigen::Index channels);
void write_mask_csv(const std::string& path, const MissingMask& mask);

/// Debug export of one dense lag coefficient matrix; refuses more than
/// 4096 channels.
void write_coefficient_csv(const std::string& path, const QuarksModel& model,
                           int lag);

std::string report_json(const AlsReport& report);

void write_bench_csv(const std::string& path,
                     const std::vector<BenchRecord>& records);

}  // namespace quarks
