#pragma once

#include <optional>
#include <string>
#include <vector>

#include "trolink/numeric.hpp"

namespace trolink {

class Subspace;  // hilbert_module.hpp

/// Finite-dimensional C*-algebra in canonical form: an ordered direct sum of
/// full complex matrix blocks M_{n_1} + ... + M_{n_r}.  r = 0 encodes the
/// zero algebra, which arises as a quotient and as the base of the zero
/// module.  Every block dimension is at least 1.
class FdAlgebra {
 public:
  FdAlgebra() = default;
  explicit FdAlgebra(std::vector<Index> block_dims);

  Index block_count() const { return static_cast<Index>(dims_.size()); }
  Index block_dim(Index k) const { return dims_[static_cast<size_t>(k)]; }
  const std::vector<Index>& block_dims() const { return dims_; }

  /// Vector-space dimension: sum of n_k^2.
  Index dim() const { return total_; }
  Index block_offset(Index k) const { return offsets_[static_cast<size_t>(k)]; }

  /// Flat coordinate of entry (i, j) of block k (row-major within a block).
  Index coord(Index k, Index i, Index j) const {
    return block_offset(k) + i * block_dim(k) + j;
  }
  bool is_zero_algebra() const { return dims_.empty(); }

  bool operator==(const FdAlgebra&) const = default;

 private:
  std::vector<Index> dims_;
  std::vector<Index> offsets_;
  Index total_ = 0;
};

/// Element of an FdAlgebra: one complex n_k x n_k matrix per block.
class AlgElement {
 public:
  AlgElement(FdAlgebra algebra, std::vector<Mat> blocks);

  static AlgElement zero(const FdAlgebra& a);
  static AlgElement unit(const FdAlgebra& a);
  static AlgElement matrix_unit(const FdAlgebra& a, Index k, Index i, Index j);
  static AlgElement from_flat(const FdAlgebra& a, const Vec& coords);

  const FdAlgebra& algebra() const { return algebra_; }
  const Mat& block(Index k) const { return blocks_[static_cast<size_t>(k)]; }
  Mat& block(Index k) { return blocks_[static_cast<size_t>(k)]; }

  /// Flattened coordinates: blocks in order, row-major within a block.
  Vec flatten() const;
  double coeff_norm() const;

  AlgElement& operator+=(const AlgElement& rhs);
  AlgElement& operator-=(const AlgElement& rhs);
  AlgElement& operator*=(cplx scalar);

 private:
  FdAlgebra algebra_;
  std::vector<Mat> blocks_;
};

AlgElement operator+(AlgElement lhs, const AlgElement& rhs);
AlgElement operator-(AlgElement lhs, const AlgElement& rhs);
AlgElement operator*(cplx scalar, AlgElement rhs);

/// Blockwise product; bilinear and associative.
AlgElement alg_mul(const AlgElement& a, const AlgElement& b);

/// Blockwise conjugate transpose.
AlgElement alg_adjoint(const AlgElement& a);

/// C*-norm: the largest singular value over all blocks; 0 on the zero
/// algebra.
double alg_norm(const AlgElement& a);

/// Closed two-sided ideal of a block algebra: a subset of the blocks.
class BlockIdeal {
 public:
  BlockIdeal(FdAlgebra algebra, std::vector<char> mask);
  static BlockIdeal zero(const FdAlgebra& a);
  static BlockIdeal full(const FdAlgebra& a);
  static BlockIdeal from_blocks(const FdAlgebra& a, const std::vector<Index>& blocks);

  const FdAlgebra& algebra() const { return algebra_; }
  bool contains_block(Index k) const { return mask_[static_cast<size_t>(k)] != 0; }
  const std::vector<char>& mask() const { return mask_; }
  std::vector<Index> blocks() const;
  Index block_count() const;

  /// Vector-space dimension of the ideal.
  Index subspace_dim() const;

  BlockIdeal meet(const BlockIdeal& other) const;
  BlockIdeal join(const BlockIdeal& other) const;
  BlockIdeal complement() const;
  bool subset_of(const BlockIdeal& other) const;

  bool operator==(const BlockIdeal&) const = default;

 private:
  FdAlgebra algebra_;
  std::vector<char> mask_;
};

/// A product with a basis multiplier that leaves a candidate subspace.
struct EscapeWitness {
  std::string side;  // "left" or "right"
  Index unit_block = 0, unit_row = 0, unit_col = 0;
  Index basis_index = 0;
  double residual = 0.0;
  Vec escaped;  // flattened offending product
};

struct ClassifyIdealResult {
  std::optional<BlockIdeal> ideal;
  std::optional<EscapeWitness> witness;
  bool ok() const { return ideal.has_value(); }
};

/// Decides whether a linear subspace of a block algebra is a closed
/// two-sided ideal, i.e. a direct sum of full blocks.  On success returns
/// the block subset; on failure returns a witness product that escapes.
/// Support or rank decisions inside the ambiguity window around the cutoff
/// raise tolerance_error with the borderline value.
ClassifyIdealResult classify_ideal(const Subspace& v);

/// All 2^r closed ideals, in ascending bitmask order.  Refuses r beyond the
/// bound (the listing is exponential by nature).
std::vector<BlockIdeal> enumerate_ideals(const FdAlgebra& b, Index max_blocks = 12);

/// Linear map between block algebras over flattened coordinates.
struct AlgHom {
  FdAlgebra source;
  FdAlgebra target;
  Mat mat;  // target.dim() x source.dim()

  AlgElement apply(const AlgElement& a) const;
};

struct HomCheck {
  bool multiplicative = false;
  bool star_preserving = false;
  double mult_residual = 0.0;
  double star_residual = 0.0;
  bool ok() const { return multiplicative && star_preserving; }
};

/// Verifies multiplicativity and *-preservation on all pairs of matrix
/// units of the source.
HomCheck check_alg_hom(const AlgHom& h, double tol = kDefaultTol);

struct QuotientAlgebra {
  FdAlgebra quotient;
  AlgHom projection;  // surjective; kernel is exactly the ideal
};

/// B/I for a block ideal I: drops the masked blocks.  The projection is
/// exact 0/1 arithmetic.
QuotientAlgebra quotient_algebra(const FdAlgebra& b, const BlockIdeal& ideal);

}  // namespace trolink
