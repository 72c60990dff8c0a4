#include "quarks/kron.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>
#include <utility>

#include "quarks/errors.hpp"

namespace quarks {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

std::string shape_str(const Eigen::MatrixXd& x) {
  std::ostringstream os;
  os << x.rows() << "x" << x.cols();
  return os.str();
}

}  // namespace

BlockPartition::BlockPartition(Eigen::Index gr, Eigen::Index gc,
                               Eigen::Index br, Eigen::Index bc)
    : grid_rows(gr), grid_cols(gc), block_rows(br), block_cols(bc) {
  require(gr > 0 && gc > 0 && br > 0 && bc > 0,
          "BlockPartition: all dimensions must be strictly positive");
}

Eigen::MatrixXd reshuffle(const Eigen::MatrixXd& x, const BlockPartition& p) {
  require(x.rows() == p.rows() && x.cols() == p.cols(),
          "reshuffle: matrix is " + shape_str(x) + ", partition expects " +
              std::to_string(p.rows()) + "x" + std::to_string(p.cols()));
  Eigen::MatrixXd out(p.reshuffled_rows(), p.reshuffled_cols());
  for (Eigen::Index j = 0; j < p.grid_cols; ++j) {
    for (Eigen::Index i = 0; i < p.grid_rows; ++i) {
      const auto block =
          x.block(i * p.block_rows, j * p.block_cols, p.block_rows, p.block_cols);
      // vec(block)^T: source column v fills a contiguous run of the row
      Eigen::Index row = j * p.grid_rows + i;
      for (Eigen::Index v = 0; v < p.block_cols; ++v)
        out.row(row).segment(v * p.block_rows, p.block_rows) =
            block.col(v).transpose();
    }
  }
  return out;
}

Eigen::MatrixXd inverse_reshuffle(const Eigen::MatrixXd& y,
                                  const BlockPartition& p) {
  require(y.rows() == p.reshuffled_rows() && y.cols() == p.reshuffled_cols(),
          "inverse_reshuffle: matrix is " + shape_str(y) + ", expected " +
              std::to_string(p.reshuffled_rows()) + "x" +
              std::to_string(p.reshuffled_cols()));
  Eigen::MatrixXd out(p.rows(), p.cols());
  for (Eigen::Index j = 0; j < p.grid_cols; ++j) {
    for (Eigen::Index i = 0; i < p.grid_rows; ++i) {
      Eigen::Index row = j * p.grid_rows + i;
      auto block =
          out.block(i * p.block_rows, j * p.block_cols, p.block_rows, p.block_cols);
      for (Eigen::Index v = 0; v < p.block_cols; ++v)
        block.col(v) = y.row(row).segment(v * p.block_rows, p.block_rows);
    }
  }
  return out;
}

Eigen::VectorXd vec(const Eigen::MatrixXd& x) {
  return Eigen::Map<const Eigen::VectorXd>(x.data(), x.size());
}

Eigen::MatrixXd unvec(const Eigen::VectorXd& v, Eigen::Index rows,
                      Eigen::Index cols) {
  require(v.size() == rows * cols, "unvec: size mismatch");
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

KronSum::KronSum(std::vector<Term> terms, const BlockPartition& part)
    : terms_(std::move(terms)), part_(part) {
  require(!terms_.empty(), "KronSum: term list must be non-empty");
  for (const auto& t : terms_) {
    require(t.left.rows() == part_.grid_rows && t.left.cols() == part_.grid_cols,
            "KronSum: left factor is " + shape_str(t.left) + ", expected " +
                std::to_string(part_.grid_rows) + "x" +
                std::to_string(part_.grid_cols));
    require(t.right.rows() == part_.block_rows &&
                t.right.cols() == part_.block_cols,
            "KronSum: right factor is " + shape_str(t.right) + ", expected " +
                std::to_string(part_.block_rows) + "x" +
                std::to_string(part_.block_cols));
  }
}

KronSum::KronSum(Eigen::MatrixXd left, Eigen::MatrixXd right)
    : part_(left.rows(), left.cols(), right.rows(), right.cols()) {
  terms_.push_back(Term{std::move(left), std::move(right)});
}

Eigen::MatrixXd KronSum::dense() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rows(), cols());
  for (const auto& t : terms_) {
    for (Eigen::Index j = 0; j < part_.grid_cols; ++j)
      for (Eigen::Index i = 0; i < part_.grid_rows; ++i)
        out.block(i * part_.block_rows, j * part_.block_cols, part_.block_rows,
                  part_.block_cols) += t.left(i, j) * t.right;
  }
  return out;
}

KronSum kron_decompose(const Eigen::MatrixXd& x, const BlockPartition& part,
                       Eigen::Index rank, double tol) {
  Eigen::MatrixXd r = reshuffle(x, part);
  Eigen::Index max_rank = std::min(r.rows(), r.cols());
  require(rank <= max_rank, "kron_decompose: requested rank " +
                                std::to_string(rank) + " exceeds " +
                                std::to_string(max_rank));
  require(rank >= 0 || tol > 0, "kron_decompose: auto rank needs tol > 0");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      r, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();

  Eigen::Index keep;
  if (rank >= 0) {
    keep = rank;
  } else {
    keep = 0;
    while (keep < s.size() && s(keep) > tol * s(0)) ++keep;
  }

  std::vector<KronSum::Term> terms;
  for (Eigen::Index l = 0; l < keep; ++l) {
    double w = std::sqrt(s(l));
    terms.push_back(KronSum::Term{
        unvec(w * svd.matrixU().col(l), part.grid_rows, part.grid_cols),
        unvec(w * svd.matrixV().col(l), part.block_rows, part.block_cols)});
  }
  if (terms.empty())  // zero (or all-truncated) input: keep one zero term
    terms.push_back(KronSum::Term{
        Eigen::MatrixXd::Zero(part.grid_rows, part.grid_cols),
        Eigen::MatrixXd::Zero(part.block_rows, part.block_cols)});
  return KronSum(std::move(terms), part);
}

Eigen::Index kron_rank(const Eigen::MatrixXd& x, const BlockPartition& part,
                       double tol) {
  Eigen::MatrixXd r = reshuffle(x, part);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(r);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > tol * s(0)) ++rank;
  return rank;
}

Eigen::VectorXd kron_matvec(const KronSum& m, const Eigen::VectorXd& x) {
  const auto& p = m.partition();
  require(x.size() == p.cols(),
          "kron_matvec: vector length " + std::to_string(x.size()) +
              ", expected " + std::to_string(p.cols()));
  // (L (x) R) vec(Y) = vec(R Y L^T) with Y of block_cols x grid_cols
  Eigen::MatrixXd y = unvec(x, p.block_cols, p.grid_cols);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p.block_rows, p.grid_rows);
  for (const auto& t : m.terms()) acc.noalias() += t.right * y * t.left.transpose();
  return vec(acc);
}

KronSum kron_matmat(const KronSum& a, const KronSum& b) {
  const auto& pa = a.partition();
  const auto& pb = b.partition();
  require(pa.grid_cols == pb.grid_rows && pa.block_cols == pb.block_rows,
          "kron_matmat: factor dimensions do not conform");
  std::vector<KronSum::Term> terms;
  terms.reserve(a.terms().size() * b.terms().size());
  for (const auto& ta : a.terms())
    for (const auto& tb : b.terms())
      terms.push_back(KronSum::Term{ta.left * tb.left, ta.right * tb.right});
  return KronSum(std::move(terms),
                 BlockPartition(pa.grid_rows, pb.grid_cols, pa.block_rows,
                                pb.block_cols));
}

KronSum kron_inverse_rank1(const KronSum& m, double cond_limit) {
  if (m.term_count() != 1)
    throw ConfigError(
        "kron_inverse_rank1: structured inverses of multi-term sums are not "
        "available; got " +
        std::to_string(m.term_count()) + " terms");
  const auto& t = m.terms().front();
  require(t.left.rows() == t.left.cols() && t.right.rows() == t.right.cols(),
          "kron_inverse_rank1: factors must be square");

  auto invert = [&](const Eigen::MatrixXd& f, const char* which) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(
        f, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    double smin = s(s.size() - 1);
    if (smin <= 0.0 || s(0) / smin > cond_limit)
      throw NumericalError(std::string("kron_inverse_rank1: ") + which +
                           " factor is singular or badly conditioned "
                           "(condition estimate " +
                           (smin > 0.0 ? std::to_string(s(0) / smin)
                                       : std::string("inf")) +
                           ")");
    return Eigen::MatrixXd(svd.matrixV() * s.cwiseInverse().asDiagonal() *
                           svd.matrixU().transpose());
  };
  return KronSum(invert(t.left, "left"), invert(t.right, "right"));
}

KronSum AlphaDecomposable::to_kron_sum() const {
  Eigen::Index n = pattern.rows();
  require(pattern.cols() == n, "AlphaDecomposable: pattern must be square");
  Eigen::Index total = 0;
  for (const auto& c : classes) total += c.size;
  require(total == n, "AlphaDecomposable: class sizes must sum to the node count");

  std::vector<KronSum::Term> terms;
  Eigen::Index offset = 0;
  for (const auto& c : classes) {
    Eigen::Index bs = c.local.rows();
    require(c.local.rows() == bs && c.local.cols() == bs &&
                c.neighbor.rows() == bs && c.neighbor.cols() == bs,
            "AlphaDecomposable: local/neighbor blocks must be square and equal");
    Eigen::MatrixXd sel = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < c.size; ++i) sel(offset + i, offset + i) = 1.0;
    terms.push_back(KronSum::Term{sel, c.local});
    terms.push_back(KronSum::Term{sel * pattern, c.neighbor});
    offset += c.size;
  }
  Eigen::Index bs = classes.front().local.rows();
  return KronSum(std::move(terms), BlockPartition(n, n, bs, bs));
}

}  // namespace quarks
