#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "trolink/algebra.hpp"

namespace trolink {

/// Hilbert module over a block algebra in canonical form.  Block k consists
/// of complex m_k x n_k matrices, with inner product <x, y>_k = x_k^* y_k
/// and right action (x b)_k = x_k b_k.  m_k = 0 encodes an absent block; a
/// module with every m_k = 0 (or over the zero algebra) is the zero module.
///
/// Flattening convention, fixed project-wide: coordinates run block by block
/// in block order, row-major within a block, so entry (k, i, j) lands at
/// block_offset(k) + i * n_k + j.  Linear maps between modules and algebras
/// are dense matrices over these coordinates.
class HModule {
 public:
  HModule() = default;  // zero module over the zero algebra
  HModule(FdAlgebra base, std::vector<Index> multiplicities);

  const FdAlgebra& base() const { return base_; }
  Index block_count() const { return base_.block_count(); }
  Index mult(Index k) const { return mult_[static_cast<size_t>(k)]; }
  const std::vector<Index>& multiplicities() const { return mult_; }
  Index rows(Index k) const { return mult(k); }
  Index cols(Index k) const { return base_.block_dim(k); }

  Index dim() const { return total_; }
  Index block_offset(Index k) const { return offsets_[static_cast<size_t>(k)]; }
  Index coord(Index k, Index i, Index j) const {
    return block_offset(k) + i * cols(k) + j;
  }

  std::vector<Index> active_blocks() const;  // m_k > 0
  bool is_full() const;                      // every m_k > 0, so B_E = B
  bool is_zero() const { return total_ == 0; }

  bool operator==(const HModule&) const = default;

 private:
  FdAlgebra base_;
  std::vector<Index> mult_;
  std::vector<Index> offsets_;
  Index total_ = 0;
};

/// Element of an HModule: one complex m_k x n_k matrix per block.
class ModElement {
 public:
  ModElement(HModule module, std::vector<Mat> blocks);

  static ModElement zero(const HModule& m);
  static ModElement coordinate_unit(const HModule& m, Index k, Index i, Index j);
  static ModElement from_flat(const HModule& m, const Vec& coords);

  const HModule& module() const { return module_; }
  const Mat& block(Index k) const { return blocks_[static_cast<size_t>(k)]; }
  Mat& block(Index k) { return blocks_[static_cast<size_t>(k)]; }

  Vec flatten() const;
  double coeff_norm() const;

  ModElement& operator+=(const ModElement& rhs);
  ModElement& operator-=(const ModElement& rhs);
  ModElement& operator*=(cplx scalar);

 private:
  HModule module_;
  std::vector<Mat> blocks_;
};

ModElement operator+(ModElement lhs, const ModElement& rhs);
ModElement operator-(ModElement lhs, const ModElement& rhs);
ModElement operator*(cplx scalar, ModElement rhs);

/// Algebra-valued inner product <x, y> = x^* y, blockwise.
AlgElement inner(const ModElement& x, const ModElement& y);

/// Right action x b, blockwise.
ModElement act(const ModElement& x, const AlgElement& b);

/// Module norm |x| = sqrt(|<x, x>|) with the C*-norm on the base.
double mod_norm(const ModElement& x);

/// Parent space of a Subspace: a module or an algebra, compared
/// structurally.
class Ambient {
 public:
  Ambient(FdAlgebra a) : v_(std::move(a)) {}
  Ambient(HModule m) : v_(std::move(m)) {}

  bool is_algebra() const { return std::holds_alternative<FdAlgebra>(v_); }
  bool is_module() const { return std::holds_alternative<HModule>(v_); }
  const FdAlgebra& algebra() const;
  const HModule& module() const;
  Index dim() const;

  bool operator==(const Ambient&) const = default;

 private:
  std::variant<FdAlgebra, HModule> v_;
};

struct Containment {
  bool contained = false;
  double residual = 0.0;
};

/// Closed linear subspace of a module or algebra, stored as an orthonormal
/// basis of flattened coordinates.  The tolerance used to build the span is
/// carried along so downstream membership checks inherit it.
class Subspace {
 public:
  Subspace(Ambient parent, Mat onb, double tol);
  static Subspace zero(Ambient parent, double tol = kDefaultTol);
  static Subspace full(Ambient parent, double tol = kDefaultTol);

  const Ambient& parent() const { return parent_; }
  const Mat& onb() const { return onb_; }
  Index dim() const { return onb_.cols(); }
  double tol() const { return tol_; }

  Vec project(const Vec& x) const;
  Containment contains(const Vec& x) const;
  Containment contains(const Subspace& other) const;

  /// Largest membership residual over a batch of column vectors.
  double max_escape(const Mat& columns) const;

  /// Mutual containment with equal dimension.
  bool same_space(const Subspace& other) const;

 private:
  Ambient parent_;
  Mat onb_;
  double tol_;
};

/// Span of generator columns: near-zero columns are dropped, the rest are
/// normalized, and an orthonormal basis is extracted by SVD with the
/// relative cutoff tol * sigma_max.
Subspace span(const Ambient& parent, const Mat& generators, double tol = kDefaultTol);
Subspace span(const Ambient& parent, const std::vector<ModElement>& gens,
              double tol = kDefaultTol);
Subspace span(const Ambient& parent, const std::vector<AlgElement>& gens,
              double tol = kDefaultTol);
Subspace span_union(const Subspace& a, const Subspace& b);

/// The ideal as a coordinate subspace of its algebra (exact 0/1 basis).
Subspace ideal_subspace(const BlockIdeal& ideal, double tol = kDefaultTol);

/// Coordinate block subspace of a module: all blocks k with mask[k] != 0.
Subspace module_block_subspace(const HModule& m, const std::vector<char>& mask,
                               double tol = kDefaultTol);

enum class ProductKind { inner, action, ternary, rankone };

/// Span of all products of basis representatives.  By bilinearity this
/// equals the closed span of the set product:
///   inner   <A, B>        (A, B in the same module; result in the base)
///   action  A . B         (A in a module, B in its base; result in the module)
///   ternary A <B, C>      (all in the same module; result in the module)
///   rankone A . B^*       (A, B in the same module; result in K(E))
/// ternary is computed in two stages as A . span<B, C>, which spans the same
/// space as the all-triples product.
Subspace product_span(ProductKind kind, const Subspace& a, const Subspace& b,
                      const std::optional<Subspace>& c = std::nullopt);

/// Products within one algebra: span of a_i b_j over basis pairs.
Subspace alg_product_span(const Subspace& a, const Subspace& b);

/// Algebra derived from a module block by block, with the index map back to
/// module blocks.  Blocks with m_k = 0 do not appear.
struct BlockAlgebraView {
  FdAlgebra algebra;
  std::vector<Index> module_blocks;  // view block -> module block

  bool operator==(const BlockAlgebraView&) const = default;
};

/// B_E: dims n_k over the active blocks.
BlockAlgebraView range_algebra(const HModule& e);

/// K(E): dims m_k over the active blocks.  Spanned by rank-one operators
/// x y^*, acting by left multiplication.
BlockAlgebraView compacts_algebra(const HModule& e);

/// 0/1 selection matrix pulling view coordinates out of flat coordinates of
/// the algebra the view was derived from.
Mat view_selector(const BlockAlgebraView& view, const FdAlgebra& base);

/// Re-express a subspace of the full base algebra inside a view (support on
/// blocks outside the view must vanish; otherwise structural_error).
Subspace restrict_to_view(const Subspace& s, const BlockAlgebraView& view);

/// Range ideal of the whole module: the block ideal {k : m_k > 0} of the
/// base, which carries cls <E, E>.
BlockIdeal range_ideal(const HModule& e);

struct RangeIdealReport {
  Subspace algebra_span;  // cls <F, F> inside the base algebra
  bool is_subalgebra = false;
  bool is_ideal = false;
  std::optional<BlockIdeal> ideal;
  double residual = 0.0;
};

/// Range algebra of an arbitrary subspace: cls <F, F> with closure flags.
/// For a ternary subspace this is always a C*-subalgebra.
RangeIdealReport range_ideal(const Subspace& f);

/// Orthogonal complement in flattened coordinates.  When K is a ternary
/// ideal (a block subset) the complement is the complementary block subset,
/// hence again a ternary ideal.
Subspace ortho_complement(const Subspace& k);

}  // namespace trolink
