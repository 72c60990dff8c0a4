#include "quarks/als.hpp"

#include <Eigen/Dense>
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

namespace detail {

FactorGrid transpose_grid(const FactorGrid& g) {
  FactorGrid out(g.size());
  for (std::size_t l = 0; l < g.size(); ++l) {
    out[l].reserve(g[l].size());
    for (const auto& f : g[l]) out[l].push_back(f.transpose());
  }
  return out;
}

Eigen::VectorXd stacked_column_norms(const FactorGrid& g) {
  Eigen::Index cols = g.front().front().cols();
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(cols);
  for (const auto& lag : g)
    for (const auto& f : lag) sq += f.colwise().squaredNorm().transpose();
  return sq.cwiseSqrt();
}

namespace {

std::string block_name(Eigen::Index flat, int rank, Eigen::Index free_dim) {
  Eigen::Index lj = flat / free_dim;
  return "lag " + std::to_string(lj / rank + 1) + ", term " +
         std::to_string(lj % rank + 1) + ", column " +
         std::to_string(flat % free_dim + 1);
}

}  // namespace

HalfStepResult solve_column_factors(
    const std::vector<Eigen::MatrixXd>& targets,
    const std::vector<Eigen::MatrixXd>& regressors, int order, int rank,
    const FactorGrid& fixed, const RegularizationConfig& reg,
    const HalfStepOptions& opts) {
  const Eigen::Index row_dim = targets.front().rows();
  const Eigen::Index col_dim = targets.front().cols();
  const Eigen::Index steps = static_cast<Eigen::Index>(targets.size()) - order;
  const Eigen::Index m = steps * row_dim;
  const Eigen::Index n = col_dim * order * rank;

  TemporalKernelConfig tk{order, reg.xi, reg.eta, reg.temporal_weight};
  TemporalPenalty temporal(fixed, tk);
  SpatialWeightConfig fixed_cfg{row_dim, reg.zeta, reg.spatial_weight};
  SpatialWeightConfig free_cfg{col_dim, reg.zeta, reg.spatial_weight};
  SpatialPenalty spatial;
  if (reg.spatial_weight != 0.0)
    spatial = SpatialPenalty(fixed, fixed_cfg, free_cfg);

  const Eigen::Index rows = m + (temporal.active() ? n : 0);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, n);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(rows, col_dim);

  for (int l = 0; l < order; ++l)
    for (int j = 0; j < rank; ++j) {
      const Eigen::Index col_block = (Eigen::Index(l) * rank + j) * col_dim;
      const Eigen::MatrixXd& f = fixed[l][j];
      parallel_for(steps, opts.threads, [&](Eigen::Index k) {
        a.block(k * row_dim, col_block, row_dim, col_dim).noalias() =
            f * regressors[order + k - l - 1];
      });
    }
  for (Eigen::Index k = 0; k < steps; ++k)
    y.block(k * row_dim, 0, row_dim, col_dim) = targets[order + k];
  if (temporal.active()) a.bottomRows(n) = temporal.stacked_rows(col_dim);

  HalfStepResult res;
  res.factors.assign(order, std::vector<Eigen::MatrixXd>(
                                rank, Eigen::MatrixXd::Zero(col_dim, col_dim)));
  Eigen::MatrixXd x(n, col_dim);
  Eigen::VectorXd column_cost = Eigen::VectorXd::Zero(col_dim);

  bool solved = false;
  if (opts.fast_gram) {
    // Gramian path: one rank update, cheap per-column solves. Falls through
    // to QR whenever conditioning is in doubt.
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(a.transpose());
    Eigen::MatrixXd g0 = gram.selfadjointView<Eigen::Lower>();
    Eigen::MatrixXd rhs = a.transpose() * y;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g0);
    double emin = es.eigenvalues().minCoeff();
    double emax = es.eigenvalues().maxCoeff();
    if (emin > 0.0 && emax / emin < 1e16) {
      parallel_for(col_dim, opts.threads, [&](Eigen::Index c) {
        if (spatial.active()) {
          Eigen::VectorXd scales = spatial.column_scales(c);
          Eigen::MatrixXd g = g0;
          g.diagonal() += scales.cwiseProduct(scales);
          x.col(c) = g.llt().solve(rhs.col(c));
          column_cost(c) += scales.cwiseProduct(x.col(c)).squaredNorm();
        } else {
          x.col(c) = g0.llt().solve(rhs.col(c));
        }
      });
      Eigen::MatrixXd resid = a * x - y;
      for (Eigen::Index c = 0; c < col_dim; ++c)
        column_cost(c) += resid.col(c).squaredNorm();
      res.min_singular_value = std::sqrt(std::max(0.0, emin));
      solved = true;
    }
  }

  if (!solved) {
    Eigen::HouseholderQR<Eigen::Ref<Eigen::MatrixXd>> qr(a);
    y.applyOnTheLeft(qr.householderQ().adjoint());
    Eigen::MatrixXd r0 =
        qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();

    double dmax = r0.diagonal().cwiseAbs().maxCoeff();
    Eigen::Index dead = -1;
    for (Eigen::Index i = 0; i < n; ++i)
      if (std::abs(r0(i, i)) <= opts.deficiency_tol * dmax) {
        dead = i;
        break;
      }
    res.deficient = dead >= 0;
    if (res.deficient) res.deficient_block = block_name(dead, rank, col_dim);

    {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(r0);
      res.min_singular_value = svd.singularValues().minCoeff();
    }

    parallel_for(col_dim, opts.threads, [&](Eigen::Index c) {
      double tail = y.col(c).segment(n, rows - n).squaredNorm();
      Eigen::VectorXd head = y.col(c).head(n);
      Eigen::VectorXd sol;
      double top = 0.0;
      if (spatial.active()) {
        Eigen::VectorXd scales = spatial.column_scales(c);
        Eigen::MatrixXd small(2 * n, n);
        small.topRows(n) = r0;
        small.bottomRows(n) = scales.asDiagonal();
        Eigen::VectorXd srhs(2 * n);
        srhs.head(n) = head;
        srhs.tail(n).setZero();
        if (res.deficient) {
          Eigen::ColPivHouseholderQR<Eigen::MatrixXd> cpqr(small);
          sol = cpqr.solve(srhs);
          res.used_fallback = true;
        } else {
          sol = small.householderQr().solve(srhs);
        }
        top = (small * sol - srhs).squaredNorm();
      } else if (res.deficient) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> cpqr(r0);
        sol = cpqr.solve(head);
        res.used_fallback = true;
        top = (r0 * sol - head).squaredNorm();
      } else {
        sol = r0.triangularView<Eigen::Upper>().solve(head);
      }
      x.col(c) = sol;
      column_cost(c) = tail + top;
    });
  }

  if (!x.allFinite())
    throw NumericalError("ALS update produced non-finite factors");

  for (int l = 0; l < order; ++l)
    for (int j = 0; j < rank; ++j) {
      const Eigen::Index off = (Eigen::Index(l) * rank + j) * col_dim;
      for (Eigen::Index c = 0; c < col_dim; ++c)
        res.factors[l][j].col(c) = x.col(c).segment(off, col_dim);
    }
  res.cost = column_cost.sum();
  return res;
}

}  // namespace detail

DataBlocks build_data_blocks(const SensorBatch& batch, int order) {
  if (order < 1) throw ConfigError("build_data_blocks: order must be >= 1");
  if (batch.size() <= order)
    throw ConfigError("build_data_blocks: need more frames than lags");
  const Eigen::Index rd = batch.frame_rows();
  const Eigen::Index cd = batch.frame_cols();
  const Eigen::Index steps = batch.size() - order;

  DataBlocks out;
  out.stacked_targets.resize(rd * steps, cd);
  for (Eigen::Index alpha = 0; alpha < rd; ++alpha)
    for (Eigen::Index t = 0; t < steps; ++t)
      out.stacked_targets.row(alpha * steps + t) =
          batch.frame(order + t).row(alpha);

  out.lag_regressors.reserve(order);
  for (int i = 1; i <= order; ++i) {
    Eigen::MatrixXd u(steps, rd * cd);
    for (Eigen::Index t = 0; t < steps; ++t) {
      const Eigen::MatrixXd& f = batch.frame(order + t - i);
      for (Eigen::Index row = 0; row < rd; ++row)
        u.row(t).segment(row * cd, cd) = f.row(row);
    }
    out.lag_regressors.push_back(std::move(u));
  }
  return out;
}

std::vector<Eigen::Index> excitation_ranks(const SensorBatch& batch, int order,
                                           double tol) {
  DataBlocks blocks = build_data_blocks(batch, order);
  std::vector<Eigen::Index> ranks;
  for (const auto& u : blocks.lag_regressors) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(u);
    qr.setThreshold(tol);
    ranks.push_back(qr.rank());
  }
  return ranks;
}

namespace {

detail::FactorGrid random_left_factors(Eigen::Index dim, int order, int rank,
                                       std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  detail::FactorGrid g(order);
  for (int l = 0; l < order; ++l) {
    g[l].reserve(rank);
    for (int j = 0; j < rank; ++j) {
      Eigen::MatrixXd f(dim, dim);
      for (Eigen::Index c = 0; c < dim; ++c)
        for (Eigen::Index r = 0; r < dim; ++r) f(r, c) = gauss(rng);
      g[l].push_back(std::move(f));
    }
  }
  return g;
}

void rescale_columns(detail::FactorGrid& right, const Eigen::VectorXd& targets) {
  Eigen::VectorXd norms = detail::stacked_column_norms(right);
  for (Eigen::Index c = 0; c < norms.size(); ++c) {
    if (norms(c) == 0.0) continue;
    double s = targets(c) / norms(c);
    for (auto& lag : right)
      for (auto& f : lag) f.col(c) *= s;
  }
}

void fix_signs(detail::FactorGrid& left, detail::FactorGrid& right) {
  for (std::size_t l = 0; l < right.size(); ++l) {
    double lead = right[l][0](0, 0);
    double s = lead < 0.0 ? -1.0 : 1.0;  // sign(0) taken as +1
    if (s == 1.0) continue;
    for (auto& f : right[l]) f *= s;
    for (auto& f : left[l]) f *= s;
  }
}

}  // namespace

AlsFit als_fit(const SensorBatch& batch, int order, int rank,
               const AlsOptions& options, const RegularizationConfig& reg) {
  return als_fit(batch, batch, order, rank, options, reg);
}

AlsFit als_fit(const SensorBatch& batch, const SensorBatch& regressor_batch,
               int order, int rank, const AlsOptions& options,
               const RegularizationConfig& reg) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();

  if (order < 1 || rank < 1)
    throw ConfigError("als_fit: order and rank must be >= 1");
  if (batch.size() <= order)
    throw ConfigError("als_fit: need more frames than lags");
  if (regressor_batch.size() != batch.size() ||
      regressor_batch.frame_rows() != batch.frame_rows() ||
      regressor_batch.frame_cols() != batch.frame_cols())
    throw ConfigError("als_fit: regressor series must align with the targets");
  if (options.max_iterations < 1 || options.tolerance <= 0.0 ||
      options.patience < 1)
    throw ConfigError("als_fit: invalid stopping parameters");

  const Eigen::Index rd = batch.frame_rows();
  const Eigen::Index cd = batch.frame_cols();
  const Eigen::Index steps = batch.size() - order;
  if (reg.temporal_weight == 0.0 && reg.spatial_weight == 0.0 &&
      rd * steps < cd * order * rank)
    throw ConfigError(
        "als_fit: too few samples for a unique unregularized solution");

  const bool normalize = options.column_norm_targets.has_value();
  if (normalize) {
    if (options.column_norm_targets->size() != cd)
      throw ConfigError("als_fit: normalization targets must have one entry "
                        "per frame column");
    if ((options.column_norm_targets->array() <= 0.0).any())
      throw ConfigError("als_fit: normalization targets must be positive");
  }

  detail::HalfStepOptions hopts;
  hopts.threads = options.threads > 0 ? options.threads : default_thread_count();
  hopts.fast_gram = options.fast_gram;

  const std::vector<Eigen::MatrixXd>& frames = batch.frames();
  const std::vector<Eigen::MatrixXd>& reg_frames = regressor_batch.frames();
  std::vector<Eigen::MatrixXd> frames_t, reg_frames_t;
  frames_t.reserve(frames.size());
  reg_frames_t.reserve(frames.size());
  for (const auto& f : frames) frames_t.push_back(f.transpose());
  for (const auto& f : reg_frames) reg_frames_t.push_back(f.transpose());

  std::mt19937_64 rng(options.seed);
  detail::FactorGrid left;
  if (options.initial_left) {
    left = *options.initial_left;
    if (static_cast<int>(left.size()) != order ||
        static_cast<int>(left.front().size()) != rank)
      throw ConfigError("als_fit: initial_left grid does not match order/rank");
  } else {
    left = random_left_factors(rd, order, rank, rng);
  }

  AlsReport report;

  // First right-factor update, redrawing a degenerate random initializer.
  detail::HalfStepResult bres = detail::solve_column_factors(
      frames, reg_frames, order, rank, left, reg, hopts);
  if (!options.initial_left) {
    int attempt = 0;
    while (bres.deficient && ++attempt <= 5) {
      left = random_left_factors(rd, order, rank, rng);
      ++report.initializer_redraws;
      bres = detail::solve_column_factors(frames, reg_frames, order, rank,
                                          left, reg, hopts);
    }
    if (bres.deficient)
      throw NumericalError(
          "als_fit: stacked regressor is rank deficient (excitation "
          "assumption violated) at " +
          bres.deficient_block);
  }

  detail::FactorGrid right;
  double prev_cost = std::numeric_limits<double>::infinity();
  int calm = 0;
  int iter = 0;
  while (true) {
    report.rank_deficient_fallback |= bres.used_fallback;
    right = std::move(bres.factors);
    if (normalize) rescale_columns(right, *options.column_norm_targets);

    detail::HalfStepResult ares = detail::solve_column_factors(
        frames_t, reg_frames_t, order, rank, detail::transpose_grid(right),
        reg, hopts);
    report.rank_deficient_fallback |= ares.used_fallback;
    left = detail::transpose_grid(ares.factors);

    double cost = ares.cost;
    if (!std::isfinite(cost))
      throw NumericalError("als_fit: non-finite cost at iteration " +
                           std::to_string(iter + 1));
    if (!normalize && !report.cost_trace.empty() &&
        cost > prev_cost + 1e-12 * std::max(1.0, prev_cost))
      report.cost_monotone = false;
    report.cost_trace.push_back(cost);
    report.min_singular_value = ares.min_singular_value;

    calm = std::abs(cost - prev_cost) <= options.tolerance ? calm + 1 : 0;
    prev_cost = cost;
    ++iter;
    if (calm >= options.patience || iter >= options.max_iterations) break;

    bres = detail::solve_column_factors(frames, reg_frames, order, rank, left,
                                        reg, hopts);
  }

  fix_signs(left, right);

  report.iterations = iter;
  report.termination = calm >= options.patience ? Termination::converged
                                                : Termination::max_iterations;
  report.wall_seconds =
      std::chrono::duration<double>(clock::now() - t0).count();

  AlsFit fit;
  fit.model.frame_rows = rd;
  fit.model.frame_cols = cd;
  fit.model.order = order;
  fit.model.rank = rank;
  fit.model.left = std::move(left);
  fit.model.right = std::move(right);
  fit.model.validate();
  fit.report = std::move(report);
  return fit;
}

double model_cost(const QuarksModel& model, const SensorBatch& batch,
                  const RegularizationConfig& reg) {
  return model_cost(model, batch, batch, reg);
}

double model_cost(const QuarksModel& model, const SensorBatch& batch,
                  const SensorBatch& regressors,
                  const RegularizationConfig& reg) {
  if (batch.size() <= model.order)
    throw ConfigError("model_cost: need more frames than lags");
  if (regressors.size() != batch.size())
    throw ConfigError("model_cost: regressor series must align with targets");
  double fit = 0.0;
  std::vector<Eigen::MatrixXd> window(
      regressors.frames().begin(),
      regressors.frames().begin() + model.order);
  for (Eigen::Index k = model.order; k < batch.size(); ++k) {
    fit += (batch.frame(k) - model.predict_one(window)).squaredNorm();
    window.erase(window.begin());
    window.push_back(regressors.frame(k));
  }
  TemporalKernelConfig tk{model.order, reg.xi, reg.eta, reg.temporal_weight};
  double rt = temporal_penalty_value(model.left, model.right, tk);
  SpatialWeightConfig sl{model.frame_rows, reg.zeta, reg.spatial_weight};
  SpatialWeightConfig sr{model.frame_cols, reg.zeta, reg.spatial_weight};
  double rs = spatial_penalty_value(model.left, model.right, sl, sr);
  return fit + rt + rs;
}

}  // namespace quarks
