#pragma once

#include <array>
#include <optional>

#include "trolink/algebra.hpp"
#include "trolink/hilbert_module.hpp"

namespace trolink {

/// The four corners of a linking block, in the 2x2 picture
/// [[base, adjoint], [module, compacts]]: the base algebra sits top-left,
/// conjugated module vectors top-right, module vectors bottom-left, and the
/// rank-one operator algebra bottom-right.
enum class Corner { base = 0, adjoint = 1, module = 2, compacts = 3 };

/// Linking algebra of a module E over B: the block algebra whose k-th block
/// is M_{n_k + m_k}, carrying B (top-left n_k x n_k), E (bottom-left
/// m_k x n_k), E^* (top-right) and the rank-one operators K(E) (bottom-right
/// m_k x m_k) so that the carrier product realizes every pairing at once.
/// The reduced variant keeps only the blocks where the module is present
/// (m_k > 0); the full variant keeps every block of B.
class LinkingAlgebra {
 public:
  LinkingAlgebra() = default;

  const FdAlgebra& carrier() const { return carrier_; }
  const HModule& module() const { return module_; }
  bool reduced() const { return reduced_; }

  /// carrier block -> module block index.
  const std::vector<Index>& module_blocks() const { return to_module_; }
  Index base_dim(Index cb) const { return module_.base().block_dim(to_module_[static_cast<size_t>(cb)]); }
  Index mult(Index cb) const { return module_.mult(to_module_[static_cast<size_t>(cb)]); }

  /// Top-left corner as a standalone algebra: all of B for the full variant,
  /// dims n_k over the present blocks for the reduced one.
  const BlockAlgebraView& base_view() const { return base_view_; }
  /// Bottom-right corner as a standalone algebra (dims m_k, present blocks).
  const BlockAlgebraView& compacts_view() const { return compacts_view_; }

  /// 0/1 coordinate embeddings of each corner into the carrier.  Columns are
  /// indexed by flat coordinates of the corner's standalone space: base_view
  /// for `base`, the module for `module` and `adjoint`, compacts_view for
  /// `compacts`.  The adjoint embedding places x at position x^*, so applying
  /// it to a flattened module vector requires conjugating the vector first.
  const Mat& embedding(Corner c) const { return embed_[static_cast<size_t>(c)]; }

  /// Element-level embeddings and corner extraction.
  AlgElement embed_base(const AlgElement& b) const;
  AlgElement embed_module(const ModElement& x) const;
  AlgElement embed_module_adjoint(const ModElement& x) const;
  AlgElement embed_compact(const AlgElement& t) const;
  AlgElement corner_base(const AlgElement& a) const;      // into B, zero off-carrier
  ModElement corner_module(const AlgElement& a) const;
  ModElement corner_adjoint(const AlgElement& a) const;   // y with y^* = top-right corner
  AlgElement corner_compact(const AlgElement& a) const;   // into compacts_view

  /// Coordinate subspace of the carrier covered by one corner.
  Subspace corner_subspace(Corner c, double tol = kDefaultTol) const;

  /// Squared coefficient mass of a carrier element inside each corner.
  std::array<double, 4> corner_mass(const AlgElement& a) const;

 private:
  friend LinkingAlgebra build_linking(const HModule& e, bool reduced);

  HModule module_;
  bool reduced_ = true;
  FdAlgebra carrier_;
  std::vector<Index> to_module_;
  BlockAlgebraView base_view_;
  BlockAlgebraView compacts_view_;
  std::array<Mat, 4> embed_;
};

LinkingAlgebra build_linking(const HModule& e, bool reduced);

/// Span of the embedded corner matrix [[span<F,F>, F*], [F, span FF*]]
/// inside the carrier, for a subspace F of the linking algebra's module.
Subspace embedded_corner_span(const LinkingAlgebra& l, const Subspace& f);

/// Linear map between modules, flagged once the ternary product rule
/// v(x<y,z>) = (vx)<vy,vz> has been checked on every coordinate-unit triple.
/// Source and target may live over different base algebras.
struct TernaryHom {
  HModule source;
  HModule target;
  Mat mat;  // target.dim() x source.dim()
  bool verified = false;
  double residual = 0.0;

  ModElement apply(const ModElement& x) const;
};

struct TernaryCheck {
  bool holds = false;
  double residual = 0.0;
};

/// Checks the ternary product rule on all coordinate-unit triples of the
/// source.  Both sides are sesquilinear of the same type in each argument,
/// so the unit grid decides the identity exactly; residual is the largest
/// deviation found.
TernaryCheck is_ternary_hom(const HModule& source, const HModule& target, const Mat& m,
                            double tol = kDefaultTol);

/// Runs is_ternary_hom and packages the result.
TernaryHom make_ternary_hom(HModule source, HModule target, Mat m, double tol = kDefaultTol);

TernaryHom identity_hom(const HModule& e);

/// A module map together with its extension to a homomorphism of linking
/// algebras: phi on the base corner, u on the module corner, psi on the
/// compacts corner, and the assembled carrier map restricting to all four.
struct BlockwiseHom {
  LinkingAlgebra source;
  LinkingAlgebra target;
  TernaryHom u;
  AlgHom phi;  // base_view(source) -> base_view(target)
  AlgHom psi;  // compacts_view(source) -> compacts_view(target)
  AlgHom assembled;

  double phi_residual = 0.0;   // well-definedness of phi on its spanning grid
  double psi_residual = 0.0;   // well-definedness of psi on its spanning grid
  double mult_residual = 0.0;  // carrier multiplicativity over all unit pairs
  double star_residual = 0.0;
  double uniqueness_gap = 0.0;  // distance to an independently solved carrier map
  bool verified = false;
};

/// Extends a verified module map to a homomorphism between the linking
/// algebras (reduced ones when `reduced`; the full ones otherwise, which
/// requires the source module to be full, since only then does the inner
/// product span determine the base corner).  phi solves
/// phi(<x,y>) = <vx,vy> and psi solves psi(x y^*) = (vx)(vy)^* by least
/// squares over the unit grids; the assembled map is verified
/// multiplicative and *-preserving on all carrier unit pairs, and a second,
/// structurally different assembly (least squares over products of embedded
/// generators) bounds the uniqueness gap.
BlockwiseHom extend_to_blockwise(const TernaryHom& v, bool reduced, double tol = kDefaultTol);

struct CornerCheck {
  HomCheck hom;
  std::array<double, 4> corner_escape{};  // indexed by Corner
  bool corners_preserved = false;
  std::optional<Corner> violating_corner;

  bool ok() const { return hom.ok() && corners_preserved; }
};

/// Decides whether a linear map between linking-algebra carriers is a
/// homomorphism that maps each corner into the matching corner.
CornerCheck check_blockwise(const LinkingAlgebra& src, const LinkingAlgebra& tgt,
                            const Mat& carrier_map, double tol = kDefaultTol);

/// For a verified bijective module map, returns the invertible blockwise
/// extension between the reduced linking algebras; its phi is an algebra
/// isomorphism of the base corners, and the map itself is phi-unitary:
/// <wx, wy> = phi(<x, y>).
BlockwiseHom ternary_iso_to_generalized_unitary(const TernaryHom& w, double tol = kDefaultTol);

}  // namespace trolink
