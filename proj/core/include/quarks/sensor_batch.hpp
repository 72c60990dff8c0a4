#pragma once

#include <Eigen/Core>
#include <vector>

namespace quarks {

/// Time-ordered sequence of sensor frames, all of identical shape. For a
/// square N x N node grid a frame holds one reading per node; arrays whose
/// nodes emit several outputs store the output planes side by side (an
/// N x 2N frame for two outputs per node), so the column-stacked frame is
/// the lifted channel vector.
class SensorBatch {
 public:
  SensorBatch() = default;
  explicit SensorBatch(std::vector<Eigen::MatrixXd> frames);

  static SensorBatch zeros(Eigen::Index rows, Eigen::Index cols,
                           Eigen::Index count);
  /// Columns of `channels_by_time` are lifted frames (column-stacked) of the
  /// given row count.
  static SensorBatch from_lifted(const Eigen::MatrixXd& channels_by_time,
                                 Eigen::Index frame_rows);

  Eigen::Index size() const { return static_cast<Eigen::Index>(frames_.size()); }
  Eigen::Index frame_rows() const { return rows_; }
  Eigen::Index frame_cols() const { return cols_; }
  Eigen::Index channels() const { return rows_ * cols_; }

  const Eigen::MatrixXd& frame(Eigen::Index k) const { return frames_.at(k); }
  Eigen::MatrixXd& frame(Eigen::Index k) { return frames_.at(k); }
  const std::vector<Eigen::MatrixXd>& frames() const { return frames_; }

  Eigen::VectorXd lifted(Eigen::Index k) const;
  /// channels x size matrix of lifted frames.
  Eigen::MatrixXd lifted_all() const;

  void append(Eigen::MatrixXd frame);
  SensorBatch slice(Eigen::Index begin, Eigen::Index count) const;
  SensorBatch transposed() const;

 private:
  void check_frame(const Eigen::MatrixXd& f) const;
  std::vector<Eigen::MatrixXd> frames_;
  Eigen::Index rows_ = 0;
  Eigen::Index cols_ = 0;
};

}  // namespace quarks
