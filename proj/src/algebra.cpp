#include "trolink/algebra.hpp"

#include <algorithm>

#include "trolink/hilbert_module.hpp"

namespace trolink {

FdAlgebra::FdAlgebra(std::vector<Index> block_dims) : dims_(std::move(block_dims)) {
  offsets_.reserve(dims_.size() + 1);
  Index off = 0;
  for (Index n : dims_) {
    if (n < 1) throw structural_error("FdAlgebra: every block dimension must be >= 1");
    offsets_.push_back(off);
    off += n * n;
  }
  total_ = off;
}

AlgElement::AlgElement(FdAlgebra algebra, std::vector<Mat> blocks)
    : algebra_(std::move(algebra)), blocks_(std::move(blocks)) {
  if (static_cast<Index>(blocks_.size()) != algebra_.block_count())
    throw structural_error("AlgElement: wrong number of blocks");
  for (Index k = 0; k < algebra_.block_count(); ++k) {
    const Index n = algebra_.block_dim(k);
    if (blocks_[static_cast<size_t>(k)].rows() != n ||
        blocks_[static_cast<size_t>(k)].cols() != n)
      throw structural_error("AlgElement: block " + std::to_string(k) + " has wrong shape");
  }
}

AlgElement AlgElement::zero(const FdAlgebra& a) {
  std::vector<Mat> blocks;
  blocks.reserve(static_cast<size_t>(a.block_count()));
  for (Index k = 0; k < a.block_count(); ++k)
    blocks.push_back(Mat::Zero(a.block_dim(k), a.block_dim(k)));
  return AlgElement(a, std::move(blocks));
}

AlgElement AlgElement::unit(const FdAlgebra& a) {
  std::vector<Mat> blocks;
  blocks.reserve(static_cast<size_t>(a.block_count()));
  for (Index k = 0; k < a.block_count(); ++k)
    blocks.push_back(Mat::Identity(a.block_dim(k), a.block_dim(k)));
  return AlgElement(a, std::move(blocks));
}

AlgElement AlgElement::matrix_unit(const FdAlgebra& a, Index k, Index i, Index j) {
  AlgElement e = zero(a);
  e.block(k)(i, j) = cplx(1, 0);
  return e;
}

AlgElement AlgElement::from_flat(const FdAlgebra& a, const Vec& coords) {
  if (coords.size() != a.dim()) throw structural_error("from_flat: wrong length");
  AlgElement e = zero(a);
  for (Index k = 0; k < a.block_count(); ++k) {
    const Index n = a.block_dim(k);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) e.block(k)(i, j) = coords(a.coord(k, i, j));
  }
  return e;
}

Vec AlgElement::flatten() const {
  Vec v(algebra_.dim());
  for (Index k = 0; k < algebra_.block_count(); ++k) {
    const Index n = algebra_.block_dim(k);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) v(algebra_.coord(k, i, j)) = block(k)(i, j);
  }
  return v;
}

double AlgElement::coeff_norm() const {
  double s = 0;
  for (const Mat& b : blocks_) s += b.squaredNorm();
  return std::sqrt(s);
}

AlgElement& AlgElement::operator+=(const AlgElement& rhs) {
  if (!(algebra_ == rhs.algebra_)) throw structural_error("AlgElement +: parent mismatch");
  for (size_t k = 0; k < blocks_.size(); ++k) blocks_[k] += rhs.blocks_[k];
  return *this;
}

AlgElement& AlgElement::operator-=(const AlgElement& rhs) {
  if (!(algebra_ == rhs.algebra_)) throw structural_error("AlgElement -: parent mismatch");
  for (size_t k = 0; k < blocks_.size(); ++k) blocks_[k] -= rhs.blocks_[k];
  return *this;
}

AlgElement& AlgElement::operator*=(cplx scalar) {
  for (Mat& b : blocks_) b *= scalar;
  return *this;
}

AlgElement operator+(AlgElement lhs, const AlgElement& rhs) { return lhs += rhs; }
AlgElement operator-(AlgElement lhs, const AlgElement& rhs) { return lhs -= rhs; }
AlgElement operator*(cplx scalar, AlgElement rhs) { return rhs *= scalar; }

AlgElement alg_mul(const AlgElement& a, const AlgElement& b) {
  if (!(a.algebra() == b.algebra())) throw structural_error("alg_mul: parent mismatch");
  AlgElement c = AlgElement::zero(a.algebra());
  for (Index k = 0; k < a.algebra().block_count(); ++k) c.block(k) = a.block(k) * b.block(k);
  return c;
}

AlgElement alg_adjoint(const AlgElement& a) {
  AlgElement c = AlgElement::zero(a.algebra());
  for (Index k = 0; k < a.algebra().block_count(); ++k) c.block(k) = a.block(k).adjoint();
  return c;
}

double alg_norm(const AlgElement& a) {
  double best = 0.0;
  for (Index k = 0; k < a.algebra().block_count(); ++k)
    best = std::max(best, spectral_norm(a.block(k)));
  return best;
}

BlockIdeal::BlockIdeal(FdAlgebra algebra, std::vector<char> mask)
    : algebra_(std::move(algebra)), mask_(std::move(mask)) {
  if (static_cast<Index>(mask_.size()) != algebra_.block_count())
    throw structural_error("BlockIdeal: mask length mismatch");
  for (char& c : mask_) c = c ? 1 : 0;
}

BlockIdeal BlockIdeal::zero(const FdAlgebra& a) {
  return BlockIdeal(a, std::vector<char>(static_cast<size_t>(a.block_count()), 0));
}

BlockIdeal BlockIdeal::full(const FdAlgebra& a) {
  return BlockIdeal(a, std::vector<char>(static_cast<size_t>(a.block_count()), 1));
}

BlockIdeal BlockIdeal::from_blocks(const FdAlgebra& a, const std::vector<Index>& blocks) {
  std::vector<char> mask(static_cast<size_t>(a.block_count()), 0);
  for (Index k : blocks) {
    if (k < 0 || k >= a.block_count())
      throw structural_error("BlockIdeal: block index out of range");
    mask[static_cast<size_t>(k)] = 1;
  }
  return BlockIdeal(a, std::move(mask));
}

std::vector<Index> BlockIdeal::blocks() const {
  std::vector<Index> out;
  for (Index k = 0; k < algebra_.block_count(); ++k)
    if (contains_block(k)) out.push_back(k);
  return out;
}

Index BlockIdeal::block_count() const {
  return static_cast<Index>(blocks().size());
}

Index BlockIdeal::subspace_dim() const {
  Index d = 0;
  for (Index k = 0; k < algebra_.block_count(); ++k)
    if (contains_block(k)) d += algebra_.block_dim(k) * algebra_.block_dim(k);
  return d;
}

BlockIdeal BlockIdeal::meet(const BlockIdeal& other) const {
  if (!(algebra_ == other.algebra_)) throw structural_error("meet: parent mismatch");
  std::vector<char> m(mask_);
  for (size_t k = 0; k < m.size(); ++k) m[k] = m[k] && other.mask_[k];
  return BlockIdeal(algebra_, std::move(m));
}

BlockIdeal BlockIdeal::join(const BlockIdeal& other) const {
  if (!(algebra_ == other.algebra_)) throw structural_error("join: parent mismatch");
  std::vector<char> m(mask_);
  for (size_t k = 0; k < m.size(); ++k) m[k] = m[k] || other.mask_[k];
  return BlockIdeal(algebra_, std::move(m));
}

BlockIdeal BlockIdeal::complement() const {
  std::vector<char> m(mask_);
  for (char& c : m) c = c ? 0 : 1;
  return BlockIdeal(algebra_, std::move(m));
}

bool BlockIdeal::subset_of(const BlockIdeal& other) const {
  if (!(algebra_ == other.algebra_)) throw structural_error("subset_of: parent mismatch");
  for (size_t k = 0; k < mask_.size(); ++k)
    if (mask_[k] && !other.mask_[k]) return false;
  return true;
}

ClassifyIdealResult classify_ideal(const Subspace& v) {
  if (!v.parent().is_algebra())
    throw structural_error("classify_ideal: subspace must live in an algebra");
  const FdAlgebra& a = v.parent().algebra();
  const double tol = v.tol();

  if (a.dim() == 0 || v.dim() == 0)
    return {BlockIdeal::zero(a), std::nullopt};

  // Block support, with an ambiguity window around the cutoff.
  std::vector<double> support(static_cast<size_t>(a.block_count()), 0.0);
  for (Index c = 0; c < v.dim(); ++c) {
    const AlgElement e = AlgElement::from_flat(a, v.onb().col(c));
    for (Index k = 0; k < a.block_count(); ++k)
      support[static_cast<size_t>(k)] =
          std::max(support[static_cast<size_t>(k)], e.block(k).norm());
  }
  std::vector<char> mask(static_cast<size_t>(a.block_count()), 0);
  for (Index k = 0; k < a.block_count(); ++k) {
    const double s = support[static_cast<size_t>(k)];
    if (s >= 4.0 * tol) {
      mask[static_cast<size_t>(k)] = 1;
    } else if (s > 0.25 * tol) {
      throw tolerance_error("classify_ideal: block support is ambiguous at the cutoff", s, tol);
    }
  }

  // Two-sided closure under multiplication by all matrix units.  By
  // bilinearity this is closure under the whole algebra, and a two-sided
  // closed subspace of a block algebra is exactly a block subset.
  std::vector<AlgElement> basis;
  basis.reserve(static_cast<size_t>(v.dim()));
  for (Index c = 0; c < v.dim(); ++c) basis.push_back(AlgElement::from_flat(a, v.onb().col(c)));

  Mat products(a.dim(), 2 * a.dim() * v.dim());
  Index col = 0;
  for (Index k = 0; k < a.block_count(); ++k) {
    const Index n = a.block_dim(k);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) {
        const AlgElement u = AlgElement::matrix_unit(a, k, i, j);
        for (const AlgElement& b : basis) {
          products.col(col++) = alg_mul(u, b).flatten();
          products.col(col++) = alg_mul(b, u).flatten();
        }
      }
  }
  const double escape = v.max_escape(products);
  if (escape > tol) {
    // Locate the worst product for the witness.
    EscapeWitness w;
    double worst = -1.0;
    for (Index k = 0; k < a.block_count(); ++k) {
      const Index n = a.block_dim(k);
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) {
          const AlgElement u = AlgElement::matrix_unit(a, k, i, j);
          for (Index bi = 0; bi < static_cast<Index>(basis.size()); ++bi) {
            const Vec left = alg_mul(u, basis[static_cast<size_t>(bi)]).flatten();
            const Vec right = alg_mul(basis[static_cast<size_t>(bi)], u).flatten();
            const double rl = v.contains(left).residual;
            const double rr = v.contains(right).residual;
            if (rl > worst) {
              worst = rl;
              w = EscapeWitness{"left", k, i, j, bi, rl, left};
            }
            if (rr > worst) {
              worst = rr;
              w = EscapeWitness{"right", k, i, j, bi, rr, right};
            }
          }
        }
    }
    return {std::nullopt, std::move(w)};
  }

  Index expected = 0;
  for (Index k = 0; k < a.block_count(); ++k)
    if (mask[static_cast<size_t>(k)]) expected += a.block_dim(k) * a.block_dim(k);
  if (expected != v.dim())
    throw tolerance_error(
        "classify_ideal: closed under products but dimension does not match block support",
        static_cast<double>(v.dim()) - static_cast<double>(expected), tol);

  return {BlockIdeal(a, std::move(mask)), std::nullopt};
}

std::vector<BlockIdeal> enumerate_ideals(const FdAlgebra& b, Index max_blocks) {
  const Index r = b.block_count();
  if (r > max_blocks)
    throw structural_error("enumerate_ideals: " + std::to_string(r) +
                           " blocks exceeds the enumeration bound " + std::to_string(max_blocks));
  std::vector<BlockIdeal> out;
  out.reserve(static_cast<size_t>(1) << r);
  for (std::uint64_t m = 0; m < (static_cast<std::uint64_t>(1) << r); ++m) {
    std::vector<char> mask(static_cast<size_t>(r), 0);
    for (Index k = 0; k < r; ++k) mask[static_cast<size_t>(k)] = (m >> k) & 1 ? 1 : 0;
    out.emplace_back(b, std::move(mask));
  }
  return out;
}

AlgElement AlgHom::apply(const AlgElement& a) const {
  if (!(a.algebra() == source)) throw structural_error("AlgHom: element not in source");
  return AlgElement::from_flat(target, mat * a.flatten());
}

HomCheck check_alg_hom(const AlgHom& h, double tol) {
  const FdAlgebra& a = h.source;
  if (h.mat.rows() != h.target.dim() || h.mat.cols() != a.dim())
    throw structural_error("check_alg_hom: matrix shape mismatch");

  // Coordinate decode of every flat index of the source.
  struct Unit { Index k, i, j; };
  std::vector<Unit> units;
  units.reserve(static_cast<size_t>(a.dim()));
  for (Index k = 0; k < a.block_count(); ++k) {
    const Index n = a.block_dim(k);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) units.push_back(Unit{k, i, j});
  }

  std::vector<AlgElement> img;
  img.reserve(static_cast<size_t>(a.dim()));
  for (Index c = 0; c < a.dim(); ++c)
    img.push_back(AlgElement::from_flat(h.target, h.mat.col(c)));

  // Multiplicativity on all unit pairs: e_{ij}^{(k)} e_{pq}^{(l)} is
  // delta_{kl} delta_{jp} e_{iq}^{(k)}, so the expected image is a column
  // lookup or zero.  *-preservation: e_{ij}^* = e_{ji}.
  double mult = 0.0, star = 0.0;
  const Vec zero = Vec::Zero(h.target.dim());
  for (Index c1 = 0; c1 < a.dim(); ++c1) {
    const Unit& u1 = units[static_cast<size_t>(c1)];
    star = std::max(star, (alg_adjoint(img[static_cast<size_t>(c1)]).flatten() -
                           h.mat.col(a.coord(u1.k, u1.j, u1.i)))
                              .norm());
    for (Index c2 = 0; c2 < a.dim(); ++c2) {
      const Unit& u2 = units[static_cast<size_t>(c2)];
      const Vec got =
          alg_mul(img[static_cast<size_t>(c1)], img[static_cast<size_t>(c2)]).flatten();
      if (u1.k == u2.k && u1.j == u2.i)
        mult = std::max(mult, (got - h.mat.col(a.coord(u1.k, u1.i, u2.j))).norm());
      else
        mult = std::max(mult, (got - zero).norm());
    }
  }
  HomCheck out;
  out.mult_residual = mult;
  out.star_residual = star;
  out.multiplicative = mult <= tol * 10;
  out.star_preserving = star <= tol * 10;
  return out;
}

QuotientAlgebra quotient_algebra(const FdAlgebra& b, const BlockIdeal& ideal) {
  if (!(ideal.algebra() == b)) throw structural_error("quotient_algebra: ideal of a different algebra");
  std::vector<Index> kept_dims;
  for (Index k = 0; k < b.block_count(); ++k)
    if (!ideal.contains_block(k)) kept_dims.push_back(b.block_dim(k));
  FdAlgebra q(kept_dims);

  Mat proj = Mat::Zero(q.dim(), b.dim());
  Index kq = 0;
  for (Index k = 0; k < b.block_count(); ++k) {
    if (ideal.contains_block(k)) continue;
    const Index n = b.block_dim(k);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) proj(q.coord(kq, i, j), b.coord(k, i, j)) = cplx(1, 0);
    ++kq;
  }
  return QuotientAlgebra{q, AlgHom{b, q, std::move(proj)}};
}

}  // namespace trolink
