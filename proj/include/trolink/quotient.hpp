#pragma once

#include <optional>

#include "trolink/ideals.hpp"
#include "trolink/linking.hpp"

namespace trolink {

/// Quotient of a module by a closed ternary ideal.  In block form every
/// ternary ideal is a coordinate submodule over a block subset, so the
/// quotient drops those blocks from both the module and its base and every
/// quotient law holds in exact arithmetic.
struct QuotientData {
  HModule quotient_module;  // over B/I
  TernaryHom v;             // block projection onto the quotient
  AlgHom phi;               // block projection B -> B/I
  BlockIdeal ideal;         // the I actually used
};

/// Quotients E by K using the minimal ideal I = span<K,E>.  K must classify
/// as a closed ternary ideal; anything weaker is refused, because no
/// base-valued inner product exists on the quotient without also
/// quotienting the base.
QuotientData module_quotient(const HModule& e, const Subspace& k);

/// Same construction with an explicitly chosen ideal.  The quotient base
/// depends on this choice; valid choices agree with span<K,E> on the blocks
/// where the module is present and may add absent blocks.
QuotientData module_quotient(const HModule& e, const Subspace& k, const BlockIdeal& chosen);

struct PhiIsometryCheck {
  bool holds = false;
  double residual = 0.0;
};

/// <v x, v y> = phi(<x, y>) on all coordinate-unit pairs of v's source.
PhiIsometryCheck is_phi_isometry(const TernaryHom& v, const AlgHom& phi,
                                 double tol = kDefaultTol);

struct GeneralizedIsometry {
  std::optional<AlgHom> phi;    // present when the system is consistent and a hom
  double solve_residual = 0.0;  // worst defect of phi(<x,y>) = <vx,vy>
  double hom_residual = 0.0;    // worst algebra-law defect of the candidate
};

/// Attempts to produce a homomorphism phi with <vx,vy> = phi(<x,y>): the
/// minimum-norm least-squares solution over the inner-product grid is zero
/// outside span<E,E> automatically, and is then verified as a
/// *-homomorphism.  Residuals are reported even when no phi exists.
GeneralizedIsometry is_generalized_isometry(const TernaryHom& v, double tol = kDefaultTol);

/// phi faithful on the range ideal of the source, which for a generalized
/// isometry is exactly norm preservation of the module map.
bool faithful_on_range(const AlgHom& phi, const HModule& source, double tol = kDefaultTol);

}  // namespace trolink
