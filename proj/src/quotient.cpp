#include "trolink/quotient.hpp"

#include <Eigen/QR>

#include <string>

namespace trolink {

namespace {

const char* yes_no(bool b) { return b ? "yes" : "no"; }

BlockIdeal checked_ideal(const HModule& e, const Subspace& k, const char* who) {
  if (!(k.parent() == Ambient(e)))
    throw structural_error(std::string(who) + ": subspace does not live in the module");
  const IdealClassification c = classify(k);
  if (!c.is_ideal())
    throw structural_error(
        std::string(who) + ": not a closed ternary ideal (action-closed=" +
        yes_no(c.is_submodule) + ", ternary=" + yes_no(c.is_ternary_ideal) +
        ", linking=" + yes_no(c.is_linking_ideal) +
        "); no base-valued inner product exists on the quotient unless the base is "
        "quotiented by a matching ideal, and no such ideal exists here");
  return *c.ideal_submodule;
}

QuotientData build_quotient(const HModule& e, const BlockIdeal& ideal, double tol) {
  const QuotientAlgebra qa = quotient_algebra(e.base(), ideal);
  std::vector<Index> mults;
  for (Index k = 0; k < e.block_count(); ++k)
    if (!ideal.contains_block(k)) mults.push_back(e.mult(k));
  const HModule qm(qa.quotient, mults);

  Mat vmat = Mat::Zero(qm.dim(), e.dim());
  Index kept = 0;
  for (Index k = 0; k < e.block_count(); ++k) {
    if (ideal.contains_block(k)) continue;
    for (Index i = 0; i < e.rows(k); ++i)
      for (Index j = 0; j < e.cols(k); ++j)
        vmat(qm.coord(kept, i, j), e.coord(k, i, j)) = 1.0;
    ++kept;
  }
  return QuotientData{qm, make_ternary_hom(e, qm, std::move(vmat), tol), qa.projection, ideal};
}

}  // namespace

QuotientData module_quotient(const HModule& e, const Subspace& k) {
  const BlockIdeal minimal = checked_ideal(e, k, "module_quotient");
  return build_quotient(e, minimal, k.tol());
}

QuotientData module_quotient(const HModule& e, const Subspace& k, const BlockIdeal& chosen) {
  const BlockIdeal minimal = checked_ideal(e, k, "module_quotient");
  if (!(chosen.algebra() == e.base()))
    throw structural_error("module_quotient: chosen ideal lives over a different algebra");
  for (Index bk = 0; bk < e.block_count(); ++bk)
    if (e.mult(bk) > 0 && chosen.contains_block(bk) != minimal.contains_block(bk))
      throw structural_error(
          "module_quotient: chosen ideal must agree with span<K,E> on every block where "
          "the module is present");
  return build_quotient(e, chosen, k.tol());
}

PhiIsometryCheck is_phi_isometry(const TernaryHom& v, const AlgHom& phi, double tol) {
  if (!(phi.source == v.source.base()) || !(phi.target == v.target.base()))
    throw structural_error("is_phi_isometry: phi must map the source base to the target base");
  const HModule& e = v.source;
  PhiIsometryCheck out;
  for (Index a = 0; a < e.dim(); ++a) {
    const ModElement va = v.apply(ModElement::from_flat(e, Vec(Vec::Unit(e.dim(), a))));
    for (Index b = 0; b < e.dim(); ++b) {
      const ModElement ea = ModElement::from_flat(e, Vec(Vec::Unit(e.dim(), a)));
      const ModElement eb = ModElement::from_flat(e, Vec(Vec::Unit(e.dim(), b)));
      const ModElement vb = v.apply(eb);
      const Vec lhs = inner(va, vb).flatten();
      const Vec rhs = phi.apply(inner(ea, eb)).flatten();
      out.residual = std::max(out.residual, (lhs - rhs).norm());
    }
  }
  const double s = spectral_norm(v.mat);
  out.holds = out.residual <= tol * std::max(1.0, s * s);
  return out;
}

GeneralizedIsometry is_generalized_isometry(const TernaryHom& v, double tol) {
  const HModule& e = v.source;
  const FdAlgebra& sb = e.base();
  const FdAlgebra& tb = v.target.base();
  const Index d = e.dim();

  GeneralizedIsometry out;
  Mat x;
  if (d == 0 || sb.dim() == 0) {
    x = Mat::Zero(tb.dim(), sb.dim());
  } else {
    Mat g(sb.dim(), d * d), t(tb.dim(), d * d);
    for (Index a = 0; a < d; ++a) {
      const ModElement ea = ModElement::from_flat(e, Vec(Vec::Unit(d, a)));
      const ModElement va = v.apply(ea);
      for (Index b = 0; b < d; ++b) {
        const ModElement eb = ModElement::from_flat(e, Vec(Vec::Unit(d, b)));
        g.col(a * d + b) = inner(ea, eb).flatten();
        t.col(a * d + b) = inner(va, v.apply(eb)).flatten();
      }
    }
    // minimum-norm least squares kills everything outside span<E,E>
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(g.transpose());
    x = cod.solve(t.transpose()).transpose();
    const Mat diff = x * g - t;
    for (Index c = 0; c < diff.cols(); ++c)
      out.solve_residual = std::max(out.solve_residual,
                                    diff.col(c).norm() / std::max(1.0, g.col(c).norm()));
  }

  const double s = spectral_norm(v.mat);
  if (out.solve_residual > tol * std::max(1.0, s * s)) return out;

  AlgHom candidate{sb, tb, std::move(x)};
  const HomCheck hc = check_alg_hom(candidate, tol);
  out.hom_residual = std::max(hc.mult_residual, hc.star_residual);
  if (hc.ok()) out.phi = std::move(candidate);
  return out;
}

bool faithful_on_range(const AlgHom& phi, const HModule& source, double tol) {
  if (!(phi.source == source.base()))
    throw structural_error("faithful_on_range: phi does not start at the module's base");
  std::vector<char> mask(static_cast<size_t>(source.block_count()), 0);
  for (Index k : source.active_blocks()) mask[static_cast<size_t>(k)] = 1;
  const Subspace range = ideal_subspace(BlockIdeal(source.base(), mask), tol);
  if (range.dim() == 0) return true;
  return numeric_rank(Mat(phi.mat * range.onb()), tol) == range.dim();
}

}  // namespace trolink
