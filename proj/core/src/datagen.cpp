#include "quarks/datagen.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>
#include <set>
#include <string>

#include "quarks/errors.hpp"

namespace quarks {

namespace {

Eigen::MatrixXd random_toeplitz(Eigen::Index n, double decay,
                                std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  // one draw per diagonal offset, damped away from the main diagonal
  Eigen::VectorXd band(2 * n - 1);
  for (Eigen::Index o = 0; o < 2 * n - 1; ++o) {
    double offset = double(o) - double(n - 1);
    band(o) = gauss(rng) * std::exp(-decay * std::abs(offset));
  }
  Eigen::MatrixXd t(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) t(i, j) = band(j - i + n - 1);
  return t;
}

}  // namespace

double companion_spectral_radius(const QuarksModel& model) {
  const Eigen::Index c = model.frame_rows * model.frame_cols;
  const int p = model.order;
  if (p * c <= 800) {
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p * c, p * c);
    for (int i = 1; i <= p; ++i)
      companion.block(0, (i - 1) * c, c, c) = model.coefficient_dense(i);
    if (p > 1)
      companion.block(c, 0, (p - 1) * c, (p - 1) * c)
          .diagonal()
          .setOnes();
    return companion.eigenvalues().cwiseAbs().maxCoeff();
  }
  // power iteration on the companion recursion; the growth rate of the
  // state norm converges to the dominant eigenvalue modulus
  std::mt19937_64 rng(12345);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Eigen::MatrixXd> state(p);  // state[0] most recent
  for (auto& s : state) {
    s.resize(model.frame_rows, model.frame_cols);
    for (Eigen::Index cc = 0; cc < s.cols(); ++cc)
      for (Eigen::Index rr = 0; rr < s.rows(); ++rr) s(rr, cc) = gauss(rng);
  }
  auto state_norm = [&] {
    double sq = 0.0;
    for (const auto& s : state) sq += s.squaredNorm();
    return std::sqrt(sq);
  };
  double norm = state_norm();
  for (auto& s : state) s /= norm;

  const int iters = 300, tail = 60;
  double log_growth = 0.0;
  for (int it = 0; it < iters; ++it) {
    Eigen::MatrixXd top = model.predict_one(
        std::vector<Eigen::MatrixXd>(state.rbegin(), state.rend()));
    for (int i = p - 1; i > 0; --i) state[i] = state[i - 1];
    state[0] = top;
    double g = state_norm();
    if (g == 0.0) return 0.0;
    if (it >= iters - tail) log_growth += std::log(g);
    for (auto& s : state) s /= g;
  }
  return std::exp(log_growth / double(tail));
}

QuarksModel random_quarks_model(Eigen::Index n, int order, int rank,
                                std::uint64_t seed, double decay,
                                double spectral_target) {
  if (n < 2) throw ConfigError("random_quarks_model: grid side must be > 1");
  if (order < 1 || rank < 1)
    throw ConfigError("random_quarks_model: order and rank must be >= 1");
  if (spectral_target <= 0.0)
    throw ConfigError("random_quarks_model: spectral target must be positive");

  std::mt19937_64 rng(seed);
  QuarksModel m = QuarksModel::zero(n, n, order, rank);
  for (int l = 0; l < order; ++l)
    for (int j = 0; j < rank; ++j) {
      m.left[l][j] = random_toeplitz(n, decay, rng);
      m.right[l][j] = random_toeplitz(n, decay, rng);
    }

  double radius = companion_spectral_radius(m);
  if (radius > spectral_target) {
    double c = spectral_target / radius;  // lag i scales by c^i, roots by c
    for (int l = 0; l < order; ++l) {
      double s = std::pow(c, 0.5 * double(l + 1));
      for (int j = 0; j < rank; ++j) {
        m.left[l][j] *= s;
        m.right[l][j] *= s;
      }
    }
  }
  return m;
}

SensorBatch white_noise_batch(Eigen::Index rows, Eigen::Index cols,
                              Eigen::Index count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  SensorBatch out;
  for (Eigen::Index k = 0; k < count; ++k) {
    Eigen::MatrixXd f(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
      for (Eigen::Index r = 0; r < rows; ++r) f(r, c) = gauss(rng);
    out.append(std::move(f));
  }
  return out;
}

SensorBatch lagged_response(const QuarksModel& model, const SensorBatch& inputs,
                            double noise_std, std::uint64_t seed) {
  if (inputs.frame_rows() != model.frame_rows ||
      inputs.frame_cols() != model.frame_cols)
    throw ConfigError("lagged_response: input frames do not match the model");
  if (inputs.size() <= model.order)
    throw ConfigError("lagged_response: need more inputs than lags");
  if (noise_std < 0.0) throw ConfigError("lagged_response: negative noise std");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  SensorBatch out;
  for (int k = 0; k < model.order; ++k)
    out.append(Eigen::MatrixXd::Zero(model.frame_rows, model.frame_cols));
  std::vector<Eigen::MatrixXd> window(
      inputs.frames().begin(), inputs.frames().begin() + model.order);
  for (Eigen::Index k = model.order; k < inputs.size(); ++k) {
    Eigen::MatrixXd frame = model.predict_one(window);
    if (noise_std > 0.0)
      for (Eigen::Index c = 0; c < frame.cols(); ++c)
        for (Eigen::Index r = 0; r < frame.rows(); ++r)
          frame(r, c) += noise_std * gauss(rng);
    out.append(std::move(frame));
    window.erase(window.begin());
    window.push_back(inputs.frame(k));
  }
  return out;
}

Eigen::MatrixXd grid_embed(const std::vector<GridNode>& nodes, Eigen::Index n) {
  if (n < 1) throw ConfigError("grid_embed: grid side must be positive");
  Eigen::MatrixXd frame = Eigen::MatrixXd::Zero(n, n);
  std::set<std::pair<Eigen::Index, Eigen::Index>> seen;
  for (const auto& node : nodes) {
    if (node.row < 0 || node.row >= n || node.col < 0 || node.col >= n)
      throw ConfigError("grid_embed: node (" + std::to_string(node.row) + "," +
                        std::to_string(node.col) + ") outside the " +
                        std::to_string(n) + "x" + std::to_string(n) + " box");
    if (!seen.insert({node.row, node.col}).second)
      throw ConfigError("grid_embed: duplicate node cell");
    frame(node.row, node.col) = node.value;
  }
  return frame;
}

std::vector<std::pair<Eigen::Index, Eigen::Index>> circular_mask_nodes(
    Eigen::Index n, double radius) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> nodes;
  double c = 0.5 * double(n - 1);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      double dr = double(i) - c, dc = double(j) - c;
      if (dr * dr + dc * dc <= radius * radius) nodes.emplace_back(i, j);
    }
  return nodes;
}

std::vector<HexNode> hex_rings(int rings) {
  if (rings < 0) throw ConfigError("hex_rings: rings must be nonnegative");
  std::vector<HexNode> nodes;
  for (int q = -rings; q <= rings; ++q)
    for (int r = -rings; r <= rings; ++r)
      if (std::abs(q + r) <= rings) nodes.push_back(HexNode{q, r, 0.0});
  return nodes;
}

std::vector<GridNode> hex_to_grid(const std::vector<HexNode>& nodes) {
  if (nodes.empty()) return {};
  int qmin = nodes.front().q, rmin = nodes.front().r;
  for (const auto& h : nodes) {
    qmin = std::min(qmin, h.q);
    rmin = std::min(rmin, h.r);
  }
  std::vector<GridNode> out;
  out.reserve(nodes.size());
  for (const auto& h : nodes)
    out.push_back(GridNode{h.q - qmin, h.r - rmin, h.value});
  return out;
}

Eigen::MatrixXd rect_grid(Eigen::Index n) {
  if (n < 1) throw ConfigError("rect_grid: side must be positive");
  Eigen::MatrixXd pts(n * n, 2);
  double h = n > 1 ? 1.0 / double(n - 1) : 0.0;
  for (Eigen::Index c = 0; c < n; ++c)
    for (Eigen::Index r = 0; r < n; ++r) {
      pts(c * n + r, 0) = double(r) * h;
      pts(c * n + r, 1) = double(c) * h;
    }
  return pts;
}

Eigen::MatrixXd random_grid(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Eigen::MatrixXd pts(n * n, 2);
  for (Eigen::Index i = 0; i < n * n; ++i) {
    pts(i, 0) = uni(rng);
    pts(i, 1) = uni(rng);
  }
  return pts;
}

Eigen::VectorXd separability_spectrum(
    const std::function<double(double, double, double, double)>& kernel,
    const Eigen::MatrixXd& input_grid, const Eigen::MatrixXd& output_grid) {
  if (input_grid.rows() != output_grid.rows() || input_grid.cols() != 2 ||
      output_grid.cols() != 2)
    throw ConfigError("separability_spectrum: grids must be n^2 x 2 and equal");
  Eigen::Index n2 = input_grid.rows();
  auto n = Eigen::Index(std::llround(std::sqrt(double(n2))));
  if (n * n != n2)
    throw ConfigError("separability_spectrum: point count must be a square");
  if (n > 32)
    throw ConfigError("separability_spectrum: n > 32 would materialize an "
                      "oversized dense map");

  Eigen::MatrixXd map(n2, n2);
  for (Eigen::Index i = 0; i < n2; ++i)
    for (Eigen::Index j = 0; j < n2; ++j)
      map(i, j) = kernel(output_grid(i, 0), output_grid(i, 1), input_grid(j, 0),
                         input_grid(j, 1));
  Eigen::MatrixXd shuffled = reshuffle(map, BlockPartition(n, n, n, n));
  return Eigen::JacobiSVD<Eigen::MatrixXd>(shuffled).singularValues();
}

}  // namespace quarks
