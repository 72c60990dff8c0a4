#pragma once

#include <Eigen/Core>
#include <vector>

namespace quarks {

/// Hyperparameters of the diagonal-correlated temporal kernel. xi in [0,1)
/// controls decay over lags, eta in [-1,1] the correlation between lags,
/// weight is the multiplier applied to the penalty.
struct TemporalKernelConfig {
  int order = 1;      // number of lags the kernel spans
  double xi = 0.8;
  double eta = 0.5;
  double weight = 0.0;
};

/// order x order kernel matrix with entry (i,j) = xi^((i+j)/2) * eta^|i-j|
/// (1-based i,j). Symmetric by construction; positive definiteness is
/// verified and a failure reports the smallest eigenvalue.
Eigen::MatrixXd dc_kernel(const TemporalKernelConfig& cfg);

/// A square root W of kernel^-1 with W^T W = kernel^-1 (triangular factor).
/// Fails when the kernel is near singular (condition estimate above 1e12).
Eigen::MatrixXd dc_kernel_sqrt_inverse(const Eigen::MatrixXd& kernel);

/// Reshapes a square matrix diagonal-wise into a vector: main diagonal first,
/// then for each offset o = 1..n-1 the superdiagonal o followed by the
/// subdiagonal -o. A pure permutation of the entries.
Eigen::VectorXd diag_reshape(const Eigen::MatrixXd& x);

/// Inverse permutation of diag_reshape.
Eigen::MatrixXd inverse_diag_reshape(const Eigen::VectorXd& v, Eigen::Index n);

/// Spatial decay weights. Entries on diagonal offset o of an n x n factor are
/// weighted by exp(zeta*(o+1)); zeta > 0 penalizes entries away from the main
/// diagonal progressively harder, zeta = 0 weights everything equally.
struct SpatialWeightConfig {
  Eigen::Index n = 0;
  double zeta = 0.1;
  double weight = 0.0;
};

/// Diagonal of the weight matrix applied to diag_reshape output: n entries of
/// exp(zeta*1), then 2(n-1) of exp(zeta*2), ..., down to 2 of exp(zeta*n).
Eigen::VectorXd spatial_weights(const SpatialWeightConfig& cfg);

/// n x n map of the spatial weight each matrix entry receives, i.e.
/// exp(zeta*(|row-col|+1)).
Eigen::MatrixXd spatial_entry_weights(const SpatialWeightConfig& cfg);

/// Entry-wise quadratic weights the spatial penalty induces on a free factor
/// when the listed factors are held fixed. For fixed factor F with
/// c = ||K D(F)||^2, the free factor paired with it contributes
/// sum_entries weight * entry^2 where weight = lambda * c * k(entry)^2
/// (rank-one Frobenius identity). One weight matrix per fixed factor, in
/// order. lambda and the free-side weights come from free_cfg.
std::vector<Eigen::MatrixXd> spatial_penalty_weights_for_factor(
    const std::vector<Eigen::MatrixXd>& fixed_factors,
    const SpatialWeightConfig& fixed_cfg, const SpatialWeightConfig& free_cfg);

/// Square-grid convenience overload: one config for both sides.
std::vector<Eigen::MatrixXd> spatial_penalty_weights_for_factor(
    const std::vector<Eigen::MatrixXd>& fixed_factors,
    const SpatialWeightConfig& cfg);

/// All regularization hyperparameters of the identification cost in one
/// place. Weights of zero disable the corresponding term.
struct RegularizationConfig {
  double temporal_weight = 0.0;  // mu
  double xi = 0.8;
  double eta = 0.5;
  double spatial_weight = 0.0;   // lambda
  double zeta = 0.1;
  double ridge = 0.0;            // beta, used by the missing-data solver
};

/// Temporal penalty with one factor set fixed, in the form consumed by the
/// per-column least-squares updates. For fixed factors F[lag][term] the
/// penalty on free factors X[lag][term] is
///   weight * sum_term sum_{l,m} (P^-1)(l,m) <F_l,F_m>_F <X_l,X_m>_F,
/// a quadratic form that is block diagonal over terms and identical for
/// every column of the free factor stack.
class TemporalPenalty {
 public:
  TemporalPenalty() = default;

  /// fixed is indexed [lag][term]; cfg.weight scales the penalty.
  TemporalPenalty(const std::vector<std::vector<Eigen::MatrixXd>>& fixed,
                  const TemporalKernelConfig& cfg);

  bool active() const { return active_; }
  int order() const { return order_; }
  int term_count() const { return terms_; }

  /// Rows to stack under the data block of one per-column solve. The unknown
  /// ordering is (lag outer, term middle, factor row inner), dimension
  /// order*terms*free_dim; the block is square of that size.
  Eigen::MatrixXd stacked_rows(Eigen::Index free_dim) const;

  /// Penalty value (weight included) at the given free factors.
  double value(const std::vector<std::vector<Eigen::MatrixXd>>& free) const;

 private:
  bool active_ = false;
  int order_ = 0;
  int terms_ = 0;
  std::vector<Eigen::MatrixXd> sqrt_forms_;  // per term: C with C^T C = w*(P^-1 o Gram)
  std::vector<Eigen::MatrixXd> forms_;       // per term: w*(P^-1 o Gram)
};

/// Spatial penalty with one factor set fixed, reduced to per-entry diagonal
/// weights on the free side via the rank-one Frobenius identity.
class SpatialPenalty {
 public:
  SpatialPenalty() = default;

  /// fixed is indexed [lag][term]; free_dim is the free factor size.
  SpatialPenalty(const std::vector<std::vector<Eigen::MatrixXd>>& fixed,
                 const SpatialWeightConfig& fixed_cfg,
                 const SpatialWeightConfig& free_cfg);

  bool active() const { return active_; }

  /// sqrt of the per-unknown weights for solve column `col`, ordered
  /// (lag outer, term middle, factor row inner).
  Eigen::VectorXd column_scales(Eigen::Index col) const;

  /// Penalty value (weight included) at the given free factors.
  double value(const std::vector<std::vector<Eigen::MatrixXd>>& free) const;

 private:
  bool active_ = false;
  int order_ = 0;
  int terms_ = 0;
  Eigen::Index free_dim_ = 0;
  Eigen::VectorXd fixed_norms_;      // lambda * ||K D(fixed)||^2 per (lag,term)
  Eigen::MatrixXd free_weights_;     // k(entry)^2 over the free factor grid
};

/// Temporal regularizer value for a full factor pair (both sides known);
/// cfg.weight included.
double temporal_penalty_value(
    const std::vector<std::vector<Eigen::MatrixXd>>& left,
    const std::vector<std::vector<Eigen::MatrixXd>>& right,
    const TemporalKernelConfig& cfg);

/// Spatial regularizer value for a full factor pair; weight included.
double spatial_penalty_value(
    const std::vector<std::vector<Eigen::MatrixXd>>& left,
    const std::vector<std::vector<Eigen::MatrixXd>>& right,
    const SpatialWeightConfig& left_cfg, const SpatialWeightConfig& right_cfg);

}  // namespace quarks
