#include "quarks/quarks_model.hpp"

#include <random>
#include <string>

#include "quarks/errors.hpp"

namespace quarks {

QuarksModel QuarksModel::zero(Eigen::Index rows, Eigen::Index cols, int order,
                              int rank) {
  if (rows < 2 || cols < 2)
    throw ConfigError("QuarksModel: factor sizes must be at least 2");
  if (order < 1 || rank < 1)
    throw ConfigError("QuarksModel: order and rank must be at least 1");
  QuarksModel m;
  m.frame_rows = rows;
  m.frame_cols = cols;
  m.order = order;
  m.rank = rank;
  m.left.assign(order, std::vector<Eigen::MatrixXd>(
                           rank, Eigen::MatrixXd::Zero(rows, rows)));
  m.right.assign(order, std::vector<Eigen::MatrixXd>(
                            rank, Eigen::MatrixXd::Zero(cols, cols)));
  return m;
}

void QuarksModel::validate() const {
  if (order < 1 || rank < 1 || frame_rows < 2 || frame_cols < 2)
    throw ConfigError("QuarksModel: invalid dimensions");
  if (static_cast<int>(left.size()) != order ||
      static_cast<int>(right.size()) != order)
    throw ConfigError("QuarksModel: factor grid does not match order");
  for (int i = 0; i < order; ++i) {
    if (static_cast<int>(left[i].size()) != rank ||
        static_cast<int>(right[i].size()) != rank)
      throw ConfigError("QuarksModel: factor grid does not match rank");
    for (int j = 0; j < rank; ++j) {
      if (left[i][j].rows() != frame_rows || left[i][j].cols() != frame_rows ||
          right[i][j].rows() != frame_cols || right[i][j].cols() != frame_cols)
        throw ConfigError("QuarksModel: factor shape mismatch at lag " +
                          std::to_string(i + 1));
      if (!left[i][j].allFinite() || !right[i][j].allFinite())
        throw NumericalError("QuarksModel: non-finite factor entries at lag " +
                             std::to_string(i + 1));
    }
  }
}

Eigen::MatrixXd QuarksModel::predict_one(
    const std::vector<Eigen::MatrixXd>& history) const {
  if (static_cast<int>(history.size()) != order)
    throw ConfigError("predict_one: history must hold exactly " +
                      std::to_string(order) + " frames");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(frame_rows, frame_cols);
  for (int i = 1; i <= order; ++i) {
    const Eigen::MatrixXd& past = history[order - i];  // S_{k-i}
    for (int j = 0; j < rank; ++j)
      out.noalias() += left[i - 1][j] * past * right[i - 1][j];
  }
  return out;
}

KronSum QuarksModel::coefficient(int lag) const {
  if (lag < 1 || lag > order)
    throw ConfigError("coefficient: lag out of range");
  std::vector<KronSum::Term> terms;
  for (int j = 0; j < rank; ++j)
    terms.push_back(
        KronSum::Term{right[lag - 1][j].transpose(), left[lag - 1][j]});
  return KronSum(std::move(terms),
                 BlockPartition(frame_cols, frame_cols, frame_rows, frame_rows));
}

Eigen::MatrixXd QuarksModel::coefficient_dense(int lag) const {
  return coefficient(lag).dense();
}

SimulationResult simulate(const QuarksModel& model,
                          const std::vector<Eigen::MatrixXd>& initial,
                          Eigen::Index horizon, double noise_std,
                          std::uint64_t seed) {
  if (static_cast<int>(initial.size()) != model.order)
    throw ConfigError("simulate: need exactly `order` initial frames");
  if (noise_std < 0.0) throw ConfigError("simulate: negative noise std");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  SimulationResult res;
  std::vector<Eigen::MatrixXd> window = initial;
  for (const auto& f : initial) res.batch.append(f);

  for (Eigen::Index k = 0; k < horizon; ++k) {
    Eigen::MatrixXd next = model.predict_one(window);
    if (noise_std > 0.0)
      for (Eigen::Index c = 0; c < next.cols(); ++c)
        for (Eigen::Index r = 0; r < next.rows(); ++r)
          next(r, c) += noise_std * gauss(rng);
    if (!next.allFinite()) {
      res.truncated = true;
      break;
    }
    res.batch.append(next);
    window.erase(window.begin());
    window.push_back(res.batch.frame(res.batch.size() - 1));
    ++res.steps_completed;
  }
  return res;
}

}  // namespace quarks
