#include "quarks/sensor_batch.hpp"

#include <utility>

#include "quarks/errors.hpp"

namespace quarks {

SensorBatch::SensorBatch(std::vector<Eigen::MatrixXd> frames)
    : frames_(std::move(frames)) {
  if (frames_.empty()) throw ConfigError("SensorBatch: no frames");
  rows_ = frames_.front().rows();
  cols_ = frames_.front().cols();
  if (rows_ < 2 || cols_ < 2)
    throw ConfigError("SensorBatch: frames must be at least 2x2 (degenerate "
                      "grids are not supported)");
  for (const auto& f : frames_) check_frame(f);
}

void SensorBatch::check_frame(const Eigen::MatrixXd& f) const {
  if (f.rows() != rows_ || f.cols() != cols_)
    throw ConfigError("SensorBatch: mixed frame shapes");
}

SensorBatch SensorBatch::zeros(Eigen::Index rows, Eigen::Index cols,
                               Eigen::Index count) {
  std::vector<Eigen::MatrixXd> frames(count, Eigen::MatrixXd::Zero(rows, cols));
  return SensorBatch(std::move(frames));
}

SensorBatch SensorBatch::from_lifted(const Eigen::MatrixXd& m,
                                     Eigen::Index frame_rows) {
  if (frame_rows <= 0 || m.rows() % frame_rows != 0)
    throw ConfigError("SensorBatch::from_lifted: channel count not divisible "
                      "by frame rows");
  Eigen::Index cols = m.rows() / frame_rows;
  std::vector<Eigen::MatrixXd> frames;
  frames.reserve(m.cols());
  for (Eigen::Index k = 0; k < m.cols(); ++k)
    frames.push_back(
        Eigen::Map<const Eigen::MatrixXd>(m.col(k).data(), frame_rows, cols));
  return SensorBatch(std::move(frames));
}

Eigen::VectorXd SensorBatch::lifted(Eigen::Index k) const {
  const auto& f = frames_.at(k);
  return Eigen::Map<const Eigen::VectorXd>(f.data(), f.size());
}

Eigen::MatrixXd SensorBatch::lifted_all() const {
  Eigen::MatrixXd out(channels(), size());
  for (Eigen::Index k = 0; k < size(); ++k) out.col(k) = lifted(k);
  return out;
}

void SensorBatch::append(Eigen::MatrixXd frame) {
  if (frames_.empty()) {
    rows_ = frame.rows();
    cols_ = frame.cols();
    if (rows_ < 2 || cols_ < 2)
      throw ConfigError("SensorBatch: frames must be at least 2x2");
  } else {
    check_frame(frame);
  }
  frames_.push_back(std::move(frame));
}

SensorBatch SensorBatch::slice(Eigen::Index begin, Eigen::Index count) const {
  if (begin < 0 || count <= 0 || begin + count > size())
    throw ConfigError("SensorBatch::slice: range out of bounds");
  std::vector<Eigen::MatrixXd> frames(frames_.begin() + begin,
                                      frames_.begin() + begin + count);
  return SensorBatch(std::move(frames));
}

SensorBatch SensorBatch::transposed() const {
  std::vector<Eigen::MatrixXd> frames;
  frames.reserve(frames_.size());
  for (const auto& f : frames_) frames.push_back(f.transpose());
  return SensorBatch(std::move(frames));
}

}  // namespace quarks
