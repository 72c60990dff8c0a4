#include "quarks/baselines.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "quarks/errors.hpp"

namespace quarks {

Eigen::VectorXd DenseVarModel::predict_one(
    const std::vector<Eigen::VectorXd>& history) const {
  if (static_cast<int>(history.size()) != order)
    throw ConfigError("DenseVarModel::predict_one: history must hold exactly " +
                      std::to_string(order) + " vectors");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(channels);
  for (int i = 1; i <= order; ++i)
    out.noalias() += coefficients[i - 1] * history[order - i];
  return out;
}

LiftedData build_lifted_blocks(const SensorBatch& batch, int order) {
  if (order < 1) throw ConfigError("build_lifted_blocks: order must be >= 1");
  if (batch.size() <= order)
    throw ConfigError("build_lifted_blocks: need more frames than lags");
  const Eigen::Index c = batch.channels();
  const Eigen::Index steps = batch.size() - order;
  LiftedData out;
  out.future.resize(c, steps);
  out.past.resize(c * order, steps);
  for (Eigen::Index t = 0; t < steps; ++t) {
    out.future.col(t) = batch.lifted(order + t);
    for (int i = 1; i <= order; ++i)
      out.past.col(t).segment((i - 1) * c, c) = batch.lifted(order + t - i);
  }
  return out;
}

namespace {

DenseVarModel split_coefficients(const Eigen::MatrixXd& stacked, int order,
                                 Eigen::Index channels) {
  DenseVarModel m;
  m.order = order;
  m.channels = channels;
  for (int i = 0; i < order; ++i)
    m.coefficients.push_back(stacked.middleCols(i * channels, channels));
  return m;
}

}  // namespace

DenseVarModel fit_dense_var(const SensorBatch& batch, int order) {
  LiftedData d = build_lifted_blocks(batch, order);
  const Eigen::Index c = batch.channels();
  const Eigen::Index n = d.past.rows();
  if (d.past.cols() < n)
    throw ConfigError("fit_dense_var: need at least channels*order samples "
                      "after the warm-up window (" +
                      std::to_string(n) + ", got " +
                      std::to_string(d.past.cols()) + ")");

  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(d.past);
  Eigen::MatrixXd g = gram.selfadjointView<Eigen::Lower>();
  Eigen::MatrixXd cross = d.future * d.past.transpose();  // c x n

  Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
  Eigen::MatrixXd coeffs;
  bool bad = ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-14;
  if (!bad) {
    coeffs = ldlt.solve(cross.transpose()).transpose();
    bad = !coeffs.allFinite();
  }
  if (!bad) {
    // residual must be orthogonal to the regressors at the exact solution
    double denom = g.norm() * std::max(1.0, cross.norm());
    double ortho = (coeffs * g - cross).norm();
    bad = ortho > 1e-8 * std::max(1.0, denom);
  }
  if (bad) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d.past.transpose());
    throw NumericalError(
        "fit_dense_var: past block is rank deficient (numerical rank " +
        std::to_string(qr.rank()) + " of " + std::to_string(n) + ")");
  }
  return split_coefficients(coeffs, order, c);
}

double sparse_tau_max(const SensorBatch& batch, int order) {
  LiftedData d = build_lifted_blocks(batch, order);
  return 2.0 * (d.future * d.past.transpose()).cwiseAbs().maxCoeff();
}

SparseFitResult fit_sparse_var(const SensorBatch& batch, int order, double tau,
                               int max_iterations, double rel_tol) {
  if (tau < 0.0) throw ConfigError("fit_sparse_var: tau must be nonnegative");
  LiftedData d = build_lifted_blocks(batch, order);
  const Eigen::Index c = batch.channels();
  const Eigen::Index n = d.past.rows();

  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(d.past);
  Eigen::MatrixXd g = gram.selfadjointView<Eigen::Lower>();
  Eigen::MatrixXd cross = d.future * d.past.transpose();
  const double yy = d.future.squaredNorm();

  auto smooth = [&](const Eigen::MatrixXd& a) {
    return (a * g).cwiseProduct(a).sum() - 2.0 * a.cwiseProduct(cross).sum() +
           yy;
  };
  auto grad = [&](const Eigen::MatrixXd& a) {
    return Eigen::MatrixXd(2.0 * (a * g - cross));
  };
  auto l1 = [&](const Eigen::MatrixXd& a) { return tau * a.lpNorm<1>(); };
  auto shrink = [&](const Eigen::MatrixXd& a, double t) {
    return Eigen::MatrixXd(
        a.array().sign() * (a.array().abs() - t * tau).max(0.0));
  };

  // Lipschitz seed from a few power iterations on the Gramian.
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n) / std::sqrt(double(n));
  for (int i = 0; i < 12; ++i) {
    v = g * v;
    double nv = v.norm();
    if (nv == 0.0) break;
    v /= nv;
  }
  double lip = std::max(2.0 * v.dot(g * v), 1e-12);

  Eigen::MatrixXd best = Eigen::MatrixXd::Zero(c, n);
  double best_obj = smooth(best) + l1(best);
  Eigen::MatrixXd iterate = best;   // monotone sequence
  Eigen::MatrixXd momentum = best;  // extrapolated point
  double tk = 1.0;

  SparseFitResult res;
  res.objective_trace.push_back(best_obj);

  int it = 0;
  int calm = 0;
  for (; it < max_iterations; ++it) {
    Eigen::MatrixXd gm = grad(momentum);
    double fm = smooth(momentum);
    Eigen::MatrixXd cand;
    // backtracking on the quadratic model around the extrapolated point
    for (int bt = 0; bt < 60; ++bt) {
      cand = shrink(momentum - gm / lip, 1.0 / lip);
      Eigen::MatrixXd diff = cand - momentum;
      double quad = fm + gm.cwiseProduct(diff).sum() +
                    0.5 * lip * diff.squaredNorm();
      if (smooth(cand) <= quad + 1e-12 * std::abs(quad)) break;
      lip *= 2.0;
    }
    double cand_obj = smooth(cand) + l1(cand);

    // monotone acceleration: keep the best iterate, restart momentum on it
    double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
    double change;
    if (cand_obj <= best_obj) {
      momentum = cand + ((tk - 1.0) / t_next) * (cand - iterate);
      iterate = cand;
      change = best_obj - cand_obj;
      best_obj = cand_obj;
      best = cand;
    } else {
      momentum = iterate + (tk / t_next) * (cand - iterate);
      change = 0.0;
    }
    res.objective_trace.push_back(best_obj);
    tk = t_next;
    // momentum phases can stall the best iterate briefly, so require the
    // objective to stay flat for a stretch before declaring convergence
    calm = change <= rel_tol * std::max(1.0, std::abs(best_obj)) ? calm + 1 : 0;
    if (calm >= 25) {
      res.converged = true;
      ++it;
      break;
    }
  }
  res.iterations = it;
  res.model = split_coefficients(best, order, c);
  return res;
}

}  // namespace quarks
