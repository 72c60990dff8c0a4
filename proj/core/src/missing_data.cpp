#include "quarks/missing_data.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <utility>

#include "als_internal.hpp"
#include "quarks/errors.hpp"
#include "quarks/parallel.hpp"

namespace quarks {

MissingMask::MissingMask(Eigen::Index channels,
                         std::vector<Eigen::Index> missing)
    : channels_(channels), missing_(std::move(missing)) {
  if (channels_ <= 0) throw ConfigError("MissingMask: channel count must be positive");
  std::sort(missing_.begin(), missing_.end());
  missing_.erase(std::unique(missing_.begin(), missing_.end()), missing_.end());
  for (Eigen::Index idx : missing_)
    if (idx < 0 || idx >= channels_)
      throw ConfigError("MissingMask: channel index " + std::to_string(idx) +
                        " out of range [0," + std::to_string(channels_) + ")");
  if (static_cast<Eigen::Index>(missing_.size()) >= channels_)
    throw ConfigError("MissingMask: all channels missing");
}

std::vector<Eigen::Index> MissingMask::known() const {
  std::vector<Eigen::Index> out;
  out.reserve(channels_ - missing_.size());
  std::size_t j = 0;
  for (Eigen::Index c = 0; c < channels_; ++c) {
    if (j < missing_.size() && missing_[j] == c) {
      ++j;
      continue;
    }
    out.push_back(c);
  }
  return out;
}

namespace {

// Frames with missing channels zeroed.
std::vector<Eigen::MatrixXd> zero_filled(const SensorBatch& batch,
                                         const MissingMask& mask) {
  std::vector<Eigen::MatrixXd> frames = batch.frames();
  const Eigen::Index rows = batch.frame_rows();
  for (auto& f : frames)
    for (Eigen::Index c : mask.missing()) f(c % rows, c / rows) = 0.0;
  return frames;
}

// Number of stacked equation windows each time index appears in.
double window_multiplicity(Eigen::Index t, Eigen::Index size, int order) {
  Eigen::Index lo = std::max<Eigen::Index>(order, t);
  Eigen::Index hi = std::min<Eigen::Index>(size - 1, t + order);
  return double(hi - lo + 1);
}

}  // namespace

SensorBatch impute_given_model(const QuarksModel& model,
                               const SensorBatch& observed,
                               const MissingMask& mask, double ridge) {
  if (ridge < 0.0) throw ConfigError("impute_given_model: ridge must be >= 0");
  if (mask.channels() != observed.channels())
    throw ConfigError("impute_given_model: mask does not match batch channels");
  if (mask.empty()) return observed;

  const Eigen::Index nt = observed.size();
  const int p = model.order;
  if (nt <= p) throw ConfigError("impute_given_model: need more frames than lags");
  const Eigen::Index nc = observed.channels();
  const Eigen::Index q = mask.missing_count();
  const Eigen::Index rows = observed.frame_rows();

  // Dense lag coefficients; desk-scale channel counts keep this small.
  std::vector<Eigen::MatrixXd> coeff;
  for (int i = 1; i <= p; ++i) coeff.push_back(model.coefficient_dense(i));

  // Columns of each residual-jacobian block: unknowns at offset d couple
  // into the window residual through E (d = 0) or -A_d E (d = 1..p).
  std::vector<Eigen::MatrixXd> jac(p + 1);
  jac[0] = Eigen::MatrixXd::Zero(nc, q);
  for (Eigen::Index j = 0; j < q; ++j) jac[0](mask.missing()[j], j) = 1.0;
  for (int d = 1; d <= p; ++d) {
    jac[d].resize(nc, q);
    for (Eigen::Index j = 0; j < q; ++j)
      jac[d].col(j) = -coeff[d - 1].col(mask.missing()[j]);
  }
  std::vector<std::vector<Eigen::MatrixXd>> cross(p + 1);
  for (int a = 0; a <= p; ++a) {
    cross[a].resize(p + 1);
    for (int b = a; b <= p; ++b) cross[a][b] = jac[a].transpose() * jac[b];
  }

  // Window constants from the zero-filled knowns.
  std::vector<Eigen::MatrixXd> filled = zero_filled(observed, mask);
  std::vector<Eigen::VectorXd> base(nt - p);
  for (Eigen::Index k = p; k < nt; ++k) {
    Eigen::VectorXd b =
        Eigen::Map<const Eigen::VectorXd>(filled[k].data(), nc);
    for (int i = 1; i <= p; ++i)
      b.noalias() -= coeff[i - 1] *
                     Eigen::Map<const Eigen::VectorXd>(filled[k - i].data(), nc);
    base[k - p] = b;
  }

  // Block-banded normal equations over unknowns u_t, bandwidth p blocks.
  using Trip = Eigen::Triplet<double>;
  std::vector<Trip> trips;
  trips.reserve(std::size_t(nt) * (2 * p + 1) * q * q);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nt * q);

  for (Eigen::Index t = 0; t < nt; ++t) {
    for (Eigen::Index u = t; u <= std::min(nt - 1, t + p); ++u) {
      Eigen::MatrixXd block = Eigen::MatrixXd::Zero(q, q);
      // windows k covering both t and u: k-t and k-u in [0,p]
      Eigen::Index klo = std::max<Eigen::Index>(p, u);
      Eigen::Index khi = std::min(nt - 1, t + p);
      for (Eigen::Index k = klo; k <= khi; ++k)
        block += cross[k - u][k - t].transpose();  // (J_{k,t})^T J_{k,u}
      if (t == u)
        block.diagonal().array() +=
            ridge * window_multiplicity(t, nt, p);
      for (Eigen::Index a = 0; a < q; ++a)
        for (Eigen::Index b = 0; b < q; ++b) {
          if (block(a, b) == 0.0) continue;
          trips.emplace_back(t * q + a, u * q + b, block(a, b));
          if (u != t) trips.emplace_back(u * q + b, t * q + a, block(a, b));
        }
    }
    Eigen::Index klo = std::max<Eigen::Index>(p, t);
    Eigen::Index khi = std::min(nt - 1, t + p);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(q);
    for (Eigen::Index k = klo; k <= khi; ++k)
      g.noalias() -= jac[k - t].transpose() * base[k - p];
    rhs.segment(t * q, q) = g;
  }

  Eigen::SparseMatrix<double> h(nt * q, nt * q);
  h.setFromTriplets(trips.begin(), trips.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(h);
  if (solver.info() != Eigen::Success)
    throw NumericalError(
        "impute_given_model: imputation system is singular; a positive ridge "
        "(beta > 0) is required at this missing ratio");
  Eigen::VectorXd u = solver.solve(rhs);
  if (!u.allFinite())
    throw NumericalError(
        "impute_given_model: imputation produced non-finite values; consider "
        "a positive ridge (beta > 0)");

  SensorBatch completed = observed;
  for (Eigen::Index t = 0; t < nt; ++t)
    for (Eigen::Index j = 0; j < q; ++j) {
      Eigen::Index c = mask.missing()[j];
      completed.frame(t)(c % rows, c / rows) = u(t * q + j);
    }
  return completed;
}

namespace {

double ridge_value(const SensorBatch& completed, const MissingMask& mask,
                   int order, double ridge) {
  if (ridge == 0.0 || mask.empty()) return 0.0;
  const Eigen::Index rows = completed.frame_rows();
  double total = 0.0;
  for (Eigen::Index t = 0; t < completed.size(); ++t) {
    double sq = 0.0;
    for (Eigen::Index c : mask.missing()) {
      double v = completed.frame(t)(c % rows, c / rows);
      sq += v * v;
    }
    total += window_multiplicity(t, completed.size(), order) * sq;
  }
  return ridge * total;
}

}  // namespace

MissingFit fit_with_missing(const SensorBatch& batch, const MissingMask& mask,
                            int order, int rank, const AlsOptions& options,
                            const RegularizationConfig& reg) {
  if (mask.channels() != batch.channels())
    throw ConfigError("fit_with_missing: mask does not match batch channels");
  if (mask.empty()) {
    AlsFit fit = als_fit(batch, order, rank, options, reg);
    return MissingFit{std::move(fit.model), batch, std::move(fit.report)};
  }
  if (options.column_norm_targets)
    throw ConfigError("fit_with_missing: normalization is not supported in "
                      "the missing-data loop");

  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();

  const Eigen::Index rd = batch.frame_rows();
  const Eigen::Index cd = batch.frame_cols();

  detail::HalfStepOptions hopts;
  hopts.threads = options.threads > 0 ? options.threads : default_thread_count();
  hopts.fast_gram = options.fast_gram;

  // Missing entries start at zero.
  SensorBatch completed(zero_filled(batch, mask));

  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  detail::FactorGrid left(order);
  for (int l = 0; l < order; ++l)
    for (int j = 0; j < rank; ++j) {
      Eigen::MatrixXd f(rd, rd);
      for (Eigen::Index c = 0; c < rd; ++c)
        for (Eigen::Index r = 0; r < rd; ++r) f(r, c) = gauss(rng);
      left[l].push_back(std::move(f));
    }

  QuarksModel model = QuarksModel::zero(rd, cd, order, rank);
  AlsReport report;
  double prev_cost = std::numeric_limits<double>::infinity();
  int calm = 0;
  int iter = 0;

  while (true) {
    const std::vector<Eigen::MatrixXd>& frames = completed.frames();
    std::vector<Eigen::MatrixXd> frames_t;
    frames_t.reserve(frames.size());
    for (const auto& f : frames) frames_t.push_back(f.transpose());

    auto bres = detail::solve_column_factors(frames, frames, order, rank, left,
                                             reg, hopts);
    report.rank_deficient_fallback |= bres.used_fallback;
    detail::FactorGrid right = std::move(bres.factors);

    auto ares = detail::solve_column_factors(
        frames_t, frames_t, order, rank, detail::transpose_grid(right), reg,
        hopts);
    report.rank_deficient_fallback |= ares.used_fallback;
    left = detail::transpose_grid(ares.factors);
    report.min_singular_value = ares.min_singular_value;

    model.left = left;
    model.right = right;
    completed = impute_given_model(model, completed, mask, reg.ridge);

    double cost = model_cost(model, completed, reg) +
                  ridge_value(completed, mask, order, reg.ridge);
    if (!std::isfinite(cost))
      throw NumericalError("fit_with_missing: non-finite cost at iteration " +
                           std::to_string(iter + 1));
    if (!report.cost_trace.empty() &&
        cost > prev_cost + 1e-12 * std::max(1.0, prev_cost))
      report.cost_monotone = false;
    report.cost_trace.push_back(cost);

    calm = std::abs(cost - prev_cost) <= options.tolerance ? calm + 1 : 0;
    prev_cost = cost;
    ++iter;
    if (calm >= options.patience || iter >= options.max_iterations) break;
  }

  report.iterations = iter;
  report.termination = calm >= options.patience ? Termination::converged
                                                : Termination::max_iterations;
  report.wall_seconds =
      std::chrono::duration<double>(clock::now() - t0).count();
  model.validate();
  return MissingFit{std::move(model), std::move(completed), std::move(report)};
}

}  // namespace quarks
