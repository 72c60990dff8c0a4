#include "quarks/regularizers.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "quarks/errors.hpp"

namespace quarks {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

// Frobenius inner products of one term's factors across lags.
Eigen::MatrixXd lag_gram(const std::vector<std::vector<Eigen::MatrixXd>>& f,
                         int term) {
  int p = static_cast<int>(f.size());
  Eigen::MatrixXd g(p, p);
  for (int l = 0; l < p; ++l)
    for (int m = l; m < p; ++m) {
      g(l, m) = f[l][term].cwiseProduct(f[m][term]).sum();
      g(m, l) = g(l, m);
    }
  return g;
}

// Symmetric PSD square root via eigendecomposition, clamping tiny negative
// eigenvalues from roundoff.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

Eigen::MatrixXd dc_kernel(const TemporalKernelConfig& cfg) {
  require(cfg.order >= 1, "dc_kernel: order must be at least 1");
  require(cfg.xi >= 0.0 && cfg.xi < 1.0, "dc_kernel: xi must lie in [0,1)");
  require(cfg.eta >= -1.0 && cfg.eta <= 1.0,
          "dc_kernel: eta must lie in [-1,1]");
  int p = cfg.order;
  Eigen::MatrixXd k(p, p);
  for (int i = 1; i <= p; ++i)
    for (int j = 1; j <= p; ++j)
      k(i - 1, j - 1) =
          std::pow(cfg.xi, 0.5 * (i + j)) * std::pow(cfg.eta, std::abs(i - j));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
  double min_eig = es.eigenvalues().minCoeff();
  if (!(min_eig > 0.0))
    throw NumericalError(
        "dc_kernel: kernel is not positive definite at (xi=" +
        std::to_string(cfg.xi) + ", eta=" + std::to_string(cfg.eta) +
        "); smallest eigenvalue " + std::to_string(min_eig));
  return k;
}

Eigen::MatrixXd dc_kernel_sqrt_inverse(const Eigen::MatrixXd& kernel) {
  require(kernel.rows() == kernel.cols(),
          "dc_kernel_sqrt_inverse: kernel must be square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(kernel);
  double min_eig = es.eigenvalues().minCoeff();
  double max_eig = es.eigenvalues().maxCoeff();
  if (!(min_eig > 0.0) || max_eig / min_eig > 1e12)
    throw NumericalError(
        "dc_kernel_sqrt_inverse: kernel near singular (condition estimate " +
        std::to_string(min_eig > 0.0 ? max_eig / min_eig : -1.0) + ")");
  // W = L^-1 from kernel = L L^T, so W^T W = kernel^-1
  Eigen::LLT<Eigen::MatrixXd> llt(kernel);
  Eigen::MatrixXd l = llt.matrixL();
  return l.triangularView<Eigen::Lower>().solve(
      Eigen::MatrixXd::Identity(kernel.rows(), kernel.rows()));
}

Eigen::VectorXd diag_reshape(const Eigen::MatrixXd& x) {
  require(x.rows() == x.cols(), "diag_reshape: matrix must be square");
  Eigen::Index n = x.rows();
  Eigen::VectorXd out(n * n);
  Eigen::Index pos = 0;
  for (Eigen::Index i = 0; i < n; ++i) out(pos++) = x(i, i);
  for (Eigen::Index o = 1; o < n; ++o) {
    for (Eigen::Index i = 0; i < n - o; ++i) out(pos++) = x(i, i + o);
    for (Eigen::Index i = 0; i < n - o; ++i) out(pos++) = x(i + o, i);
  }
  return out;
}

Eigen::MatrixXd inverse_diag_reshape(const Eigen::VectorXd& v, Eigen::Index n) {
  require(v.size() == n * n, "inverse_diag_reshape: length must be n^2");
  Eigen::MatrixXd x(n, n);
  Eigen::Index pos = 0;
  for (Eigen::Index i = 0; i < n; ++i) x(i, i) = v(pos++);
  for (Eigen::Index o = 1; o < n; ++o) {
    for (Eigen::Index i = 0; i < n - o; ++i) x(i, i + o) = v(pos++);
    for (Eigen::Index i = 0; i < n - o; ++i) x(i + o, i) = v(pos++);
  }
  return x;
}

Eigen::VectorXd spatial_weights(const SpatialWeightConfig& cfg) {
  require(cfg.n >= 1, "spatial_weights: n must be positive");
  require(cfg.zeta >= 0.0, "spatial_weights: zeta must be nonnegative");
  Eigen::VectorXd w(cfg.n * cfg.n);
  Eigen::Index pos = 0;
  w.segment(pos, cfg.n).setConstant(std::exp(cfg.zeta));
  pos += cfg.n;
  for (Eigen::Index o = 1; o < cfg.n; ++o) {
    Eigen::Index len = 2 * (cfg.n - o);
    w.segment(pos, len).setConstant(std::exp(cfg.zeta * double(o + 1)));
    pos += len;
  }
  return w;
}

Eigen::MatrixXd spatial_entry_weights(const SpatialWeightConfig& cfg) {
  Eigen::MatrixXd w(cfg.n, cfg.n);
  for (Eigen::Index r = 0; r < cfg.n; ++r)
    for (Eigen::Index c = 0; c < cfg.n; ++c)
      w(r, c) = std::exp(cfg.zeta * double(std::abs(r - c) + 1));
  return w;
}

std::vector<Eigen::MatrixXd> spatial_penalty_weights_for_factor(
    const std::vector<Eigen::MatrixXd>& fixed_factors,
    const SpatialWeightConfig& fixed_cfg, const SpatialWeightConfig& free_cfg) {
  Eigen::VectorXd kf = spatial_weights(fixed_cfg);
  Eigen::MatrixXd kfree = spatial_entry_weights(free_cfg);
  Eigen::MatrixXd kfree2 = kfree.cwiseProduct(kfree);
  std::vector<Eigen::MatrixXd> out;
  out.reserve(fixed_factors.size());
  for (const auto& f : fixed_factors) {
    double c = kf.cwiseProduct(diag_reshape(f)).squaredNorm();
    out.push_back(free_cfg.weight * c * kfree2);
  }
  return out;
}

std::vector<Eigen::MatrixXd> spatial_penalty_weights_for_factor(
    const std::vector<Eigen::MatrixXd>& fixed_factors,
    const SpatialWeightConfig& cfg) {
  return spatial_penalty_weights_for_factor(fixed_factors, cfg, cfg);
}

TemporalPenalty::TemporalPenalty(
    const std::vector<std::vector<Eigen::MatrixXd>>& fixed,
    const TemporalKernelConfig& cfg) {
  if (cfg.weight == 0.0) return;
  order_ = static_cast<int>(fixed.size());
  terms_ = static_cast<int>(fixed.front().size());
  require(order_ == cfg.order, "TemporalPenalty: lag count does not match cfg");
  Eigen::MatrixXd kernel = dc_kernel(cfg);
  Eigen::MatrixXd kinv = kernel.llt().solve(
      Eigen::MatrixXd::Identity(cfg.order, cfg.order));
  for (int j = 0; j < terms_; ++j) {
    Eigen::MatrixXd form = cfg.weight * kinv.cwiseProduct(lag_gram(fixed, j));
    forms_.push_back(form);
    sqrt_forms_.push_back(psd_sqrt(form));
  }
  active_ = true;
}

Eigen::MatrixXd TemporalPenalty::stacked_rows(Eigen::Index free_dim) const {
  Eigen::Index n = Eigen::Index(order_) * terms_ * free_dim;
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(n, n);
  if (!active_) return rows;
  // unknown index: (lag*terms + term)*free_dim + row; one p x p form per
  // (term, row), scattered with stride terms_*free_dim
  Eigen::Index row_out = 0;
  for (int j = 0; j < terms_; ++j) {
    const Eigen::MatrixXd& c = sqrt_forms_[j];
    for (Eigen::Index rr = 0; rr < free_dim; ++rr) {
      for (int lo = 0; lo < order_; ++lo) {
        for (int li = 0; li < order_; ++li)
          rows(row_out, (Eigen::Index(li) * terms_ + j) * free_dim + rr) =
              c(lo, li);
        ++row_out;
      }
    }
  }
  return rows;
}

double TemporalPenalty::value(
    const std::vector<std::vector<Eigen::MatrixXd>>& free) const {
  if (!active_) return 0.0;
  double total = 0.0;
  for (int j = 0; j < terms_; ++j)
    total += forms_[j].cwiseProduct(lag_gram(free, j)).sum();
  return total;
}

SpatialPenalty::SpatialPenalty(
    const std::vector<std::vector<Eigen::MatrixXd>>& fixed,
    const SpatialWeightConfig& fixed_cfg, const SpatialWeightConfig& free_cfg) {
  if (free_cfg.weight == 0.0) return;
  order_ = static_cast<int>(fixed.size());
  terms_ = static_cast<int>(fixed.front().size());
  free_dim_ = free_cfg.n;
  Eigen::VectorXd kf = spatial_weights(fixed_cfg);
  fixed_norms_.resize(Eigen::Index(order_) * terms_);
  for (int l = 0; l < order_; ++l)
    for (int j = 0; j < terms_; ++j)
      fixed_norms_(Eigen::Index(l) * terms_ + j) =
          free_cfg.weight *
          kf.cwiseProduct(diag_reshape(fixed[l][j])).squaredNorm();
  Eigen::MatrixXd k = spatial_entry_weights(free_cfg);
  free_weights_ = k.cwiseProduct(k);
  active_ = true;
}

Eigen::VectorXd SpatialPenalty::column_scales(Eigen::Index col) const {
  if (!active_) return Eigen::VectorXd();
  Eigen::VectorXd s(Eigen::Index(order_) * terms_ * free_dim_);
  Eigen::Index pos = 0;
  for (Eigen::Index lj = 0; lj < Eigen::Index(order_) * terms_; ++lj)
    for (Eigen::Index rr = 0; rr < free_dim_; ++rr)
      s(pos++) = std::sqrt(fixed_norms_(lj) * free_weights_(rr, col));
  return s;
}

double SpatialPenalty::value(
    const std::vector<std::vector<Eigen::MatrixXd>>& free) const {
  if (!active_) return 0.0;
  double total = 0.0;
  for (int l = 0; l < order_; ++l)
    for (int j = 0; j < terms_; ++j)
      total += fixed_norms_(Eigen::Index(l) * terms_ + j) *
               free_weights_.cwiseProduct(free[l][j].cwiseProduct(free[l][j]))
                   .sum();
  return total;
}

double temporal_penalty_value(
    const std::vector<std::vector<Eigen::MatrixXd>>& left,
    const std::vector<std::vector<Eigen::MatrixXd>>& right,
    const TemporalKernelConfig& cfg) {
  if (cfg.weight == 0.0) return 0.0;
  TemporalPenalty pen(left, cfg);
  return pen.value(right);
}

double spatial_penalty_value(
    const std::vector<std::vector<Eigen::MatrixXd>>& left,
    const std::vector<std::vector<Eigen::MatrixXd>>& right,
    const SpatialWeightConfig& left_cfg, const SpatialWeightConfig& right_cfg) {
  // one lambda for the whole term, taken from the left config
  double w = left_cfg.weight;
  if (w == 0.0) return 0.0;
  Eigen::VectorXd kl = spatial_weights(left_cfg);
  Eigen::VectorXd kr = spatial_weights(right_cfg);
  double total = 0.0;
  int p = static_cast<int>(left.size());
  int r = static_cast<int>(left.front().size());
  for (int l = 0; l < p; ++l)
    for (int j = 0; j < r; ++j)
      total += kl.cwiseProduct(diag_reshape(left[l][j])).squaredNorm() *
               kr.cwiseProduct(diag_reshape(right[l][j])).squaredNorm();
  return w * total;
}

}  // namespace quarks
