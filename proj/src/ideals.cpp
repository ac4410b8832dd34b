#include "trolink/ideals.hpp"

#include <string>

namespace trolink {

namespace {

const HModule& parent_module(const Subspace& s, const char* who) {
  if (!s.parent().is_module())
    throw structural_error(std::string(who) + ": subspace must live in a module");
  return s.parent().module();
}

/// Every act(basis column, matrix unit) product, flattened.
Mat action_columns(const Subspace& k) {
  const HModule& e = k.parent().module();
  const FdAlgebra& b = e.base();
  Mat out(e.dim(), k.dim() * b.dim());
  Index col = 0;
  for (Index c = 0; c < k.dim(); ++c) {
    const ModElement x = ModElement::from_flat(e, k.onb().col(c));
    for (Index kb = 0; kb < b.block_count(); ++kb)
      for (Index p = 0; p < b.block_dim(kb); ++p)
        for (Index q = 0; q < b.block_dim(kb); ++q) {
          // x e_pq places column p of the block into column q
          Vec v = Vec::Zero(e.dim());
          for (Index i = 0; i < e.rows(kb); ++i) v(e.coord(kb, i, q)) = x.block(kb)(i, p);
          out.col(col++) = v;
        }
  }
  return out;
}

/// Exact block form of an algebra subspace: support mask plus dimension and
/// containment verification; nullopt when the subspace is not a coordinate
/// block sum.
std::optional<BlockIdeal> exact_block_form(const Subspace& s) {
  const FdAlgebra& a = s.parent().algebra();
  std::vector<char> mask(static_cast<size_t>(a.block_count()), 0);
  Index expected = 0;
  for (Index k = 0; k < a.block_count(); ++k) {
    double support = 0;
    for (Index i = 0; i < a.block_dim(k); ++i)
      for (Index j = 0; j < a.block_dim(k); ++j)
        support = std::max(support, s.onb().row(a.coord(k, i, j)).norm());
    if (support > s.tol()) {
      mask[static_cast<size_t>(k)] = 1;
      expected += a.block_dim(k) * a.block_dim(k);
    }
  }
  if (expected != s.dim()) return std::nullopt;
  BlockIdeal ideal(a, mask);
  if (s.dim() > 0 && !ideal_subspace(ideal, s.tol()).contains(s).contained) return std::nullopt;
  return ideal;
}

}  // namespace

ActionClosure is_submodule(const Subspace& k) {
  parent_module(k, "is_submodule");
  const double escape = k.max_escape(action_columns(k));
  return ActionClosure{escape <= k.tol(), escape};
}

ActionClosure is_ternary_subspace(const Subspace& f) {
  parent_module(f, "is_ternary_subspace");
  const Subspace triple = product_span(ProductKind::ternary, f, f, f);
  const Containment c = f.contains(triple);
  return ActionClosure{c.contained, c.residual};
}

TernaryIdealResult is_ternary_ideal(const Subspace& k) {
  const HModule& e = parent_module(k, "is_ternary_ideal");
  const Subspace full = Subspace::full(Ambient(e), k.tol());
  const Subspace products = product_span(ProductKind::ternary, full, k, full);
  const Containment c = k.contains(products);
  TernaryIdealResult out{c.contained, c.residual, std::nullopt};
  if (out.holds) return out;

  // locate the worst escaping unit triple x<kb,y>; in coordinates the
  // product collapses to a scalar multiple of one module unit
  TernaryEscape worst;
  for (Index c1 = 0; c1 < e.dim(); ++c1) {
    for (Index cb = 0; cb < k.dim(); ++cb) {
      const ModElement kb = ModElement::from_flat(e, k.onb().col(cb));
      for (Index c2 = 0; c2 < e.dim(); ++c2) {
        // decode the two unit coordinates
        Index kx = 0, ky = 0;
        while (c1 >= e.coord(kx, 0, 0) + e.rows(kx) * e.cols(kx)) ++kx;
        while (c2 >= e.coord(ky, 0, 0) + e.rows(ky) * e.cols(ky)) ++ky;
        if (kx != ky || e.rows(kx) == 0) continue;
        const Index lx = c1 - e.coord(kx, 0, 0), ly = c2 - e.coord(ky, 0, 0);
        const Index ix = lx / e.cols(kx), jx = lx % e.cols(kx);
        const Index iy = ly / e.cols(ky), jy = ly % e.cols(ky);
        // x<kb,y> = conj(kb(iy, jx)) * unit(kx, ix, jy)
        const cplx scale = std::conj(kb.block(kx)(iy, jx));
        if (std::abs(scale) <= k.tol()) continue;
        Vec prod = Vec::Zero(e.dim());
        prod(e.coord(kx, ix, jy)) = scale;
        const double r = (prod - k.project(prod)).norm();
        if (r > worst.residual) worst = TernaryEscape{c1, cb, c2, r, prod};
      }
    }
  }
  if (worst.residual > 0) out.witness = worst;
  return out;
}

IdealSubmoduleResult as_ideal_submodule(const Subspace& k) {
  const HModule& e = parent_module(k, "as_ideal_submodule");
  const Subspace full = Subspace::full(Ambient(e), k.tol());
  const Subspace inner_span = product_span(ProductKind::inner, k, full);
  const ClassifyIdealResult ci = classify_ideal(inner_span);
  IdealSubmoduleResult out;
  if (!ci.ok()) {
    out.span_witness = ci.witness;
    return out;
  }
  out.candidate = ci.ideal;
  const Subspace rebuilt =
      product_span(ProductKind::action, full, ideal_subspace(*ci.ideal, k.tol()));
  const Containment fwd = k.contains(rebuilt);
  const Containment bwd = rebuilt.contains(k);
  out.match_residual = std::max(fwd.residual, bwd.residual);
  if (fwd.contained && bwd.contained) out.ideal = ci.ideal;
  return out;
}

LinkingIdealResult is_linking_ideal(const Subspace& k) {
  const HModule& e = parent_module(k, "is_linking_ideal");
  const double tol = k.tol();
  const LinkingAlgebra L = build_linking(e, true);
  const FdAlgebra& carrier = L.carrier();
  LinkingIdealResult out{false, 0.0, embedded_corner_span(L, k), std::nullopt};

  // two-sided closure under every carrier matrix unit, via the orthogonal
  // complement projector: both e_pq v and v e_pq move one row/column slice
  const Mat& q = out.corner_space.onb();
  const Index D = carrier.dim();
  if (D > 0 && q.cols() > 0) {
    const Mat pperp = Mat::Identity(D, D) - q * q.adjoint();
    double escape = 0.0;
    for (Index cb = 0; cb < carrier.block_count(); ++cb) {
      const Index bd = carrier.block_dim(cb);
      Mat a(D, bd), b(bd, q.cols());
      for (Index p = 0; p < bd; ++p)
        for (Index r = 0; r < bd; ++r) {
          // left multiplication by e_pr
          for (Index j = 0; j < bd; ++j) {
            a.col(j) = pperp.col(carrier.coord(cb, p, j));
            b.row(j) = q.row(carrier.coord(cb, r, j));
          }
          Mat resid = a * b;
          for (Index c2 = 0; c2 < resid.cols(); ++c2)
            escape = std::max(escape, resid.col(c2).norm());
          // right multiplication by e_pr
          for (Index i = 0; i < bd; ++i) {
            a.col(i) = pperp.col(carrier.coord(cb, i, r));
            b.row(i) = q.row(carrier.coord(cb, i, p));
          }
          resid = a * b;
          for (Index c2 = 0; c2 < resid.cols(); ++c2)
            escape = std::max(escape, resid.col(c2).norm());
        }
    }
    out.escape = escape;
  }
  out.holds = out.escape <= tol;
  if (out.holds) {
    const Subspace& cs = out.corner_space;
    out.carrier_ideal = exact_block_form(cs);
  }
  return out;
}

OneSidedReport one_sided_conditions(const Subspace& k) {
  const HModule& e = parent_module(k, "one_sided_conditions");
  const Subspace full = Subspace::full(Ambient(e), k.tol());
  OneSidedReport out;
  const Containment left = k.contains(product_span(ProductKind::ternary, full, full, k));
  const Containment right = k.contains(product_span(ProductKind::ternary, k, full, full));
  out.left_products = left.contained;
  out.right_products = right.contained;
  out.left_escape = left.residual;
  out.right_escape = right.residual;
  out.ternary_ideal = is_ternary_ideal(k).holds;
  out.equivalence_holds = ((out.left_products && out.right_products) == out.ternary_ideal);
  return out;
}

IdealClassification classify(const Subspace& k) {
  IdealClassification out;
  out.is_submodule = is_submodule(k).holds;
  out.is_ternary_subspace = is_ternary_subspace(k).holds;

  const TernaryIdealResult t = is_ternary_ideal(k);
  out.is_ternary_ideal = t.holds;
  out.ternary_witness = t.witness;

  const LinkingIdealResult l = is_linking_ideal(k);
  out.is_linking_ideal = l.holds;

  const IdealSubmoduleResult s = as_ideal_submodule(k);
  out.ideal_submodule = s.ideal;
  out.minimal_ideal = s.candidate;
  out.submodule_witness = s.span_witness;

  out.one_sided = one_sided_conditions(k);

  if (out.is_ternary_ideal != out.is_linking_ideal || out.is_linking_ideal != s.ok())
    throw consistency_error(
        "ideal notions disagree (ternary=" + std::to_string(out.is_ternary_ideal) +
        ", linking=" + std::to_string(out.is_linking_ideal) +
        ", submodule-representation=" + std::to_string(s.ok()) + ")");
  if (!out.one_sided.equivalence_holds)
    throw consistency_error("one-sided absorption conditions disagree with the ternary flag");
  return out;
}

std::optional<std::vector<char>> as_module_block_mask(const Subspace& s) {
  const HModule& e = parent_module(s, "as_module_block_mask");
  std::vector<char> mask(static_cast<size_t>(e.block_count()), 0);
  Index expected = 0;
  for (Index k = 0; k < e.block_count(); ++k) {
    double support = 0;
    for (Index i = 0; i < e.rows(k); ++i)
      for (Index j = 0; j < e.cols(k); ++j)
        support = std::max(support, s.onb().row(e.coord(k, i, j)).norm());
    if (support > s.tol()) {
      mask[static_cast<size_t>(k)] = 1;
      expected += e.rows(k) * e.cols(k);
    }
  }
  if (expected != s.dim()) return std::nullopt;
  if (s.dim() > 0 && !module_block_subspace(e, mask, s.tol()).contains(s).contained)
    return std::nullopt;
  return mask;
}

CorrespondenceTable ideal_correspondences(const HModule& e, double tol, Index max_blocks) {
  CorrespondenceTable table{e, {}, true};
  const BlockAlgebraView bview = range_algebra(e);
  const BlockAlgebraView cview = compacts_algebra(e);
  const std::vector<BlockIdeal> view_ideals = enumerate_ideals(bview.algebra, max_blocks);
  const Subspace full = Subspace::full(Ambient(e), tol);
  const LinkingAlgebra L = build_linking(e, true);

  for (const BlockIdeal& vi : view_ideals) {
    CorrespondenceRow row;
    // lift to an ideal of the base supported on the present blocks
    std::vector<char> bmask(static_cast<size_t>(e.block_count()), 0);
    for (Index vb = 0; vb < bview.algebra.block_count(); ++vb)
      if (vi.contains_block(vb))
        bmask[static_cast<size_t>(bview.module_blocks[static_cast<size_t>(vb)])] = 1;
    const BlockIdeal ideal(e.base(), bmask);
    row.blocks = ideal.blocks();

    const Subspace k = product_span(ProductKind::action, full, ideal_subspace(ideal, tol));
    const auto kmask = as_module_block_mask(k);
    row.ideal_to_module_exact = kmask.has_value() && *kmask == bmask;

    const ClassifyIdealResult back = classify_ideal(product_span(ProductKind::inner, k, k));
    row.module_to_ideal_exact = back.ok() && *back.ideal == ideal;

    const Subspace j = product_span(ProductKind::rankone, k, k);
    std::vector<char> jmask(static_cast<size_t>(cview.algebra.block_count()), 0);
    for (Index vb = 0; vb < cview.algebra.block_count(); ++vb)
      if (bmask[static_cast<size_t>(cview.module_blocks[static_cast<size_t>(vb)])])
        jmask[static_cast<size_t>(vb)] = 1;
    const Subspace j_expect = ideal_subspace(BlockIdeal(cview.algebra, jmask), tol);
    row.module_to_compacts_exact = j.same_space(j_expect);

    // span(J K) = K, multiplying compacts basis elements onto module basis
    Mat jk(e.dim(), j.dim() * k.dim());
    Index col = 0;
    for (Index ja = 0; ja < j.dim(); ++ja) {
      const AlgElement jel = AlgElement::from_flat(cview.algebra, j.onb().col(ja));
      for (Index kb = 0; kb < k.dim(); ++kb) {
        const ModElement kel = ModElement::from_flat(e, k.onb().col(kb));
        ModElement prod = ModElement::zero(e);
        for (Index vb = 0; vb < cview.algebra.block_count(); ++vb) {
          const Index mk = cview.module_blocks[static_cast<size_t>(vb)];
          prod.block(mk) = jel.block(vb) * kel.block(mk);
        }
        jk.col(col++) = prod.flatten();
      }
    }
    row.compacts_to_module_exact = span(Ambient(e), jk, tol).same_space(k);

    // the carrier ideal and its corner projections
    const LinkingIdealResult li = is_linking_ideal(k);
    bool corners = li.holds && li.carrier_ideal.has_value();
    if (corners) {
      const Subspace cs = ideal_subspace(*li.carrier_ideal, tol);
      const Subspace p11 =
          span(Ambient(bview.algebra), Mat(L.embedding(Corner::base).adjoint() * cs.onb()), tol);
      const Subspace p21 =
          span(Ambient(e), Mat(L.embedding(Corner::module).adjoint() * cs.onb()), tol);
      const Subspace p22 =
          span(Ambient(cview.algebra), Mat(L.embedding(Corner::compacts).adjoint() * cs.onb()), tol);
      corners = p11.same_space(ideal_subspace(vi, tol)) && p21.same_space(k) &&
                p22.same_space(j_expect);
    }
    row.corner_projections_exact = corners;

    table.all_exact = table.all_exact && row.ideal_to_module_exact && row.module_to_ideal_exact &&
                      row.module_to_compacts_exact && row.compacts_to_module_exact &&
                      row.corner_projections_exact;
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace trolink
