#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "quarks/regularizers.hpp"

namespace testutil {

using FactorGrid = std::vector<std::vector<Eigen::MatrixXd>>;

inline Eigen::MatrixXd random_matrix(Eigen::Index rows, Eigen::Index cols,
                                     std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = gauss(rng);
  return m;
}

inline FactorGrid random_grid_of(Eigen::Index dim, int order, int rank,
                                 std::mt19937_64& rng) {
  FactorGrid g(order);
  for (int l = 0; l < order; ++l)
    for (int j = 0; j < rank; ++j) g[l].push_back(random_matrix(dim, dim, rng));
  return g;
}

inline Eigen::MatrixXd dense_kron(const Eigen::MatrixXd& a,
                                  const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline Eigen::VectorXd vec_of(const Eigen::MatrixXd& m) {
  return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

// Temporal regularizer straight from its definition: stack the rank-one
// blocks vec(left_l) vec(right_l)^T over lags, hit them with any square root
// of the kernel inverse, and take squared Frobenius norms. The square root
// here comes from an eigendecomposition, a different factor than the library
// uses; the value only depends on W^T W.
inline double temporal_oracle(const FactorGrid& left, const FactorGrid& right,
                              const quarks::TemporalKernelConfig& cfg) {
  int p = static_cast<int>(left.size());
  int r = static_cast<int>(left.front().size());
  Eigen::MatrixXd kernel = quarks::dc_kernel(cfg);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(kernel);
  Eigen::MatrixXd w = es.operatorInverseSqrt();  // symmetric root of P^-1

  Eigen::Index nl = left.front().front().size();
  Eigen::Index nr = right.front().front().size();
  double total = 0.0;
  for (int j = 0; j < r; ++j) {
    for (int i = 0; i < p; ++i) {
      Eigen::MatrixXd row_block = Eigen::MatrixXd::Zero(nl, nr);
      for (int l = 0; l < p; ++l)
        row_block +=
            w(i, l) * vec_of(left[l][j]) * vec_of(right[l][j]).transpose();
      total += row_block.squaredNorm();
    }
  }
  return cfg.weight * total;
}

// Spatial regularizer from its definition: weighted diagonal-reshaped outer
// products, one dense matrix per (lag, term).
inline double spatial_oracle(const FactorGrid& left, const FactorGrid& right,
                             double zeta, double lambda) {
  quarks::SpatialWeightConfig cl{left.front().front().rows(), zeta, lambda};
  quarks::SpatialWeightConfig cr{right.front().front().rows(), zeta, lambda};
  Eigen::VectorXd kl = quarks::spatial_weights(cl);
  Eigen::VectorXd kr = quarks::spatial_weights(cr);
  double total = 0.0;
  for (std::size_t l = 0; l < left.size(); ++l)
    for (std::size_t j = 0; j < left[l].size(); ++j) {
      Eigen::VectorXd u = kl.cwiseProduct(quarks::diag_reshape(left[l][j]));
      Eigen::VectorXd v = kr.cwiseProduct(quarks::diag_reshape(right[l][j]));
      total += (u * v.transpose()).squaredNorm();
    }
  return lambda * total;
}

}  // namespace testutil
