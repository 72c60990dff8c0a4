#pragma once

#include <Eigen/Core>
#include <vector>

namespace quarks {

/// Relative singular-value threshold used by numerical Kronecker-rank queries.
inline constexpr double kDefaultRankTol = 1e-10;

/// Block layout of a structured matrix: a grid_rows x grid_cols grid of
/// blocks, each block_rows x block_cols. The full matrix has
/// grid_rows*block_rows rows and grid_cols*block_cols columns.
struct BlockPartition {
  Eigen::Index grid_rows = 0;
  Eigen::Index grid_cols = 0;
  Eigen::Index block_rows = 0;
  Eigen::Index block_cols = 0;

  BlockPartition(Eigen::Index grid_rows, Eigen::Index grid_cols,
                 Eigen::Index block_rows, Eigen::Index block_cols);

  Eigen::Index rows() const { return grid_rows * block_rows; }
  Eigen::Index cols() const { return grid_cols * block_cols; }
  Eigen::Index reshuffled_rows() const { return grid_rows * grid_cols; }
  Eigen::Index reshuffled_cols() const { return block_rows * block_cols; }
};

/// Permutes a block matrix so that row (j*grid_rows + i) of the result holds
/// vec(block(i,j))^T, blocks enumerated column-major over the grid and vec
/// stacking columns. Kronecker structure in the input becomes low rank in the
/// output. Pure permutation, no arithmetic.
Eigen::MatrixXd reshuffle(const Eigen::MatrixXd& x, const BlockPartition& part);

/// Inverse of reshuffle: reshuffle(inverse_reshuffle(y, p), p) == y exactly.
Eigen::MatrixXd inverse_reshuffle(const Eigen::MatrixXd& y,
                                  const BlockPartition& part);

/// Column-stacking of a matrix into a vector.
Eigen::VectorXd vec(const Eigen::MatrixXd& x);

/// Reshapes a column-stacked vector back into a rows x cols matrix.
Eigen::MatrixXd unvec(const Eigen::VectorXd& v, Eigen::Index rows,
                      Eigen::Index cols);

/// A matrix held implicitly as a sum of Kronecker products
/// sum_j left_j (x) right_j with left_j of grid dimensions and right_j of
/// block dimensions. Terms are kept as given; nothing is merged or
/// re-orthogonalized so the cheap structured operations stay cheap.
class KronSum {
 public:
  struct Term {
    Eigen::MatrixXd left;
    Eigen::MatrixXd right;
  };

  KronSum(std::vector<Term> terms, const BlockPartition& part);

  /// Single-term sum; the partition is taken from the factor shapes.
  KronSum(Eigen::MatrixXd left, Eigen::MatrixXd right);

  const BlockPartition& partition() const { return part_; }
  const std::vector<Term>& terms() const { return terms_; }
  Eigen::Index term_count() const {
    return static_cast<Eigen::Index>(terms_.size());
  }
  Eigen::Index rows() const { return part_.rows(); }
  Eigen::Index cols() const { return part_.cols(); }

  /// Materializes the represented matrix. Quadratic memory; intended for
  /// small sizes and oracle checks.
  Eigen::MatrixXd dense() const;

 private:
  std::vector<Term> terms_;
  BlockPartition part_;
};

/// Truncated-SVD decomposition of x into a KronSum under the given partition.
/// Singular values are split evenly (sqrt into each factor). rank < 0 keeps
/// every singular value above tol * sigma_1; an explicit rank keeps exactly
/// that many terms. The Frobenius reconstruction error equals the
/// root-sum-square of the discarded singular values.
KronSum kron_decompose(const Eigen::MatrixXd& x, const BlockPartition& part,
                       Eigen::Index rank = -1, double tol = kDefaultRankTol);

/// Numerical Kronecker rank: the rank of reshuffle(x) with threshold
/// tol * sigma_1.
Eigen::Index kron_rank(const Eigen::MatrixXd& x, const BlockPartition& part,
                       double tol = kDefaultRankTol);

/// y = m * x without materializing m: one small triple product per term.
Eigen::VectorXd kron_matvec(const KronSum& m, const Eigen::VectorXd& x);

/// Product of two sums via the mixed-product rule; the result has at most
/// a.term_count() * b.term_count() terms.
KronSum kron_matmat(const KronSum& a, const KronSum& b);

/// Inverse of a single-term sum with square factors: inverts each factor.
/// Refuses multi-term sums (no known structured inverse) and reports which
/// factor is singular or badly conditioned.
KronSum kron_inverse_rank1(const KronSum& m, double cond_limit = 1e12);

/// Pattern-plus-local-dynamics network matrix: classes of identical
/// subsystems with a shared interconnection pattern. A special case of
/// KronSum with two terms per class.
struct AlphaDecomposable {
  struct SubsystemClass {
    Eigen::Index size = 0;           // number of nodes in the class
    Eigen::MatrixXd local;           // dynamics of each node in the class
    Eigen::MatrixXd neighbor;        // influence received through the pattern
  };

  Eigen::MatrixXd pattern;           // adjacency over the node grid
  std::vector<SubsystemClass> classes;

  /// Class sizes must sum to pattern.rows(); throws otherwise.
  KronSum to_kron_sum() const;
};

}  // namespace quarks
