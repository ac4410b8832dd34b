#include "trolink/linking.hpp"

#include <numeric>

namespace trolink {

namespace {

Index index_of(const std::vector<Index>& v, Index x) {
  for (size_t i = 0; i < v.size(); ++i)
    if (v[i] == x) return static_cast<Index>(i);
  return -1;
}

/// Flattened x y^* inside a compacts view.
Vec rank_one_flat(const BlockAlgebraView& view, const ModElement& x, const ModElement& y) {
  Vec out = Vec::Zero(view.algebra.dim());
  for (Index vb = 0; vb < view.algebra.block_count(); ++vb) {
    const Index k = view.module_blocks[static_cast<size_t>(vb)];
    const Mat p = x.block(k) * y.block(k).adjoint();
    for (Index i = 0; i < p.rows(); ++i)
      for (Index j = 0; j < p.cols(); ++j) out(view.algebra.coord(vb, i, j)) = p(i, j);
  }
  return out;
}

/// Minimum-norm least-squares solve of M g = t, with the worst per-column
/// consistency residual (relative to the column scale) reported.
Mat solve_on_grid(const Mat& g, const Mat& t, Index out_rows, Index out_cols, double* residual) {
  *residual = 0.0;
  if (g.cols() == 0 || out_rows == 0 || out_cols == 0) {
    if (t.size() > 0) *residual = t.cwiseAbs().maxCoeff();
    return Mat::Zero(out_rows, out_cols);
  }
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(Mat(g.transpose()));
  const Mat m = cod.solve(Mat(t.transpose())).transpose();
  const Mat diff = m * g - t;
  for (Index c = 0; c < diff.cols(); ++c)
    *residual = std::max(*residual, diff.col(c).norm() / std::max(1.0, g.col(c).norm()));
  return m;
}

}  // namespace

AlgElement LinkingAlgebra::embed_base(const AlgElement& b) const {
  if (!(b.algebra() == module_.base())) throw structural_error("embed_base: wrong algebra");
  const Mat sel = view_selector(base_view_, module_.base());
  return AlgElement::from_flat(carrier_, embedding(Corner::base) * (sel * b.flatten()));
}

AlgElement LinkingAlgebra::embed_module(const ModElement& x) const {
  if (!(x.module() == module_)) throw structural_error("embed_module: wrong module");
  return AlgElement::from_flat(carrier_, embedding(Corner::module) * x.flatten());
}

AlgElement LinkingAlgebra::embed_module_adjoint(const ModElement& x) const {
  if (!(x.module() == module_)) throw structural_error("embed_module_adjoint: wrong module");
  return AlgElement::from_flat(carrier_, embedding(Corner::adjoint) * x.flatten().conjugate());
}

AlgElement LinkingAlgebra::embed_compact(const AlgElement& t) const {
  if (!(t.algebra() == compacts_view_.algebra))
    throw structural_error("embed_compact: wrong algebra");
  return AlgElement::from_flat(carrier_, embedding(Corner::compacts) * t.flatten());
}

AlgElement LinkingAlgebra::corner_base(const AlgElement& a) const {
  if (!(a.algebra() == carrier_)) throw structural_error("corner_base: wrong algebra");
  const Mat sel = view_selector(base_view_, module_.base());
  return AlgElement::from_flat(module_.base(),
                               sel.transpose() * (embedding(Corner::base).adjoint() * a.flatten()));
}

ModElement LinkingAlgebra::corner_module(const AlgElement& a) const {
  if (!(a.algebra() == carrier_)) throw structural_error("corner_module: wrong algebra");
  return ModElement::from_flat(module_, embedding(Corner::module).adjoint() * a.flatten());
}

ModElement LinkingAlgebra::corner_adjoint(const AlgElement& a) const {
  if (!(a.algebra() == carrier_)) throw structural_error("corner_adjoint: wrong algebra");
  return ModElement::from_flat(
      module_, Vec(embedding(Corner::adjoint).adjoint() * a.flatten()).conjugate());
}

AlgElement LinkingAlgebra::corner_compact(const AlgElement& a) const {
  if (!(a.algebra() == carrier_)) throw structural_error("corner_compact: wrong algebra");
  return AlgElement::from_flat(compacts_view_.algebra,
                               embedding(Corner::compacts).adjoint() * a.flatten());
}

Subspace LinkingAlgebra::corner_subspace(Corner c, double tol) const {
  return Subspace(Ambient(carrier_), embed_[static_cast<size_t>(c)], tol);
}

std::array<double, 4> LinkingAlgebra::corner_mass(const AlgElement& a) const {
  if (!(a.algebra() == carrier_)) throw structural_error("corner_mass: wrong algebra");
  std::array<double, 4> mass{};
  for (Index cb = 0; cb < carrier_.block_count(); ++cb) {
    const Index n = base_dim(cb);
    const Mat& blk = a.block(cb);
    for (Index i = 0; i < blk.rows(); ++i)
      for (Index j = 0; j < blk.cols(); ++j) {
        const double w = std::norm(blk(i, j));
        if (i < n && j < n)
          mass[static_cast<size_t>(Corner::base)] += w;
        else if (i < n)
          mass[static_cast<size_t>(Corner::adjoint)] += w;
        else if (j < n)
          mass[static_cast<size_t>(Corner::module)] += w;
        else
          mass[static_cast<size_t>(Corner::compacts)] += w;
      }
  }
  return mass;
}

LinkingAlgebra build_linking(const HModule& e, bool reduced) {
  LinkingAlgebra L;
  L.module_ = e;
  L.reduced_ = reduced;
  std::vector<Index> dims;
  for (Index k = 0; k < e.block_count(); ++k) {
    if (reduced && e.mult(k) == 0) continue;
    dims.push_back(e.base().block_dim(k) + e.mult(k));
    L.to_module_.push_back(k);
  }
  L.carrier_ = FdAlgebra(dims);
  if (reduced) {
    L.base_view_ = range_algebra(e);
  } else {
    std::vector<Index> all(static_cast<size_t>(e.block_count()));
    std::iota(all.begin(), all.end(), Index{0});
    L.base_view_ = BlockAlgebraView{e.base(), std::move(all)};
  }
  L.compacts_view_ = compacts_algebra(e);

  const Index D = L.carrier_.dim();
  Mat e11 = Mat::Zero(D, L.base_view_.algebra.dim());
  Mat e12 = Mat::Zero(D, e.dim());
  Mat e21 = Mat::Zero(D, e.dim());
  Mat e22 = Mat::Zero(D, L.compacts_view_.algebra.dim());
  for (Index cb = 0; cb < L.carrier_.block_count(); ++cb) {
    const Index k = L.to_module_[static_cast<size_t>(cb)];
    const Index n = e.base().block_dim(k);
    const Index m = e.mult(k);
    const Index vb = index_of(L.base_view_.module_blocks, k);
    const Index wb = index_of(L.compacts_view_.module_blocks, k);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j)
        e11(L.carrier_.coord(cb, i, j), L.base_view_.algebra.coord(vb, i, j)) = 1;
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j < n; ++j) {
        e21(L.carrier_.coord(cb, n + i, j), e.coord(k, i, j)) = 1;
        e12(L.carrier_.coord(cb, j, n + i), e.coord(k, i, j)) = 1;
      }
    if (wb >= 0)
      for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < m; ++j)
          e22(L.carrier_.coord(cb, n + i, n + j), L.compacts_view_.algebra.coord(wb, i, j)) = 1;
  }
  L.embed_ = {std::move(e11), std::move(e12), std::move(e21), std::move(e22)};
  return L;
}

Subspace embedded_corner_span(const LinkingAlgebra& l, const Subspace& f) {
  if (!f.parent().is_module() || !(f.parent().module() == l.module()))
    throw structural_error("embedded_corner_span: subspace is not in the linking algebra's module");
  const HModule& e = l.module();
  const Index df = f.dim();
  std::vector<ModElement> basis;
  basis.reserve(static_cast<size_t>(df));
  for (Index c = 0; c < df; ++c) basis.push_back(ModElement::from_flat(e, f.onb().col(c)));

  Mat gens(l.carrier().dim(), 2 * df + 2 * df * df);
  Index col = 0;
  for (Index c = 0; c < df; ++c) {
    gens.col(col++) = l.embed_module(basis[static_cast<size_t>(c)]).flatten();
    gens.col(col++) = l.embed_module_adjoint(basis[static_cast<size_t>(c)]).flatten();
  }
  for (Index a = 0; a < df; ++a)
    for (Index b = 0; b < df; ++b) {
      const ModElement& xa = basis[static_cast<size_t>(a)];
      const ModElement& xb = basis[static_cast<size_t>(b)];
      gens.col(col++) = l.embed_base(inner(xa, xb)).flatten();
      AlgElement ro = AlgElement::zero(l.compacts_view().algebra);
      for (Index vb = 0; vb < l.compacts_view().algebra.block_count(); ++vb) {
        const Index mk = l.compacts_view().module_blocks[static_cast<size_t>(vb)];
        ro.block(vb) = xa.block(mk) * xb.block(mk).adjoint();
      }
      gens.col(col++) = l.embed_compact(ro).flatten();
    }
  return span(Ambient(l.carrier()), gens, f.tol());
}

ModElement TernaryHom::apply(const ModElement& x) const {
  if (!(x.module() == source)) throw structural_error("TernaryHom: wrong source module");
  return ModElement::from_flat(target, mat * x.flatten());
}

TernaryCheck is_ternary_hom(const HModule& source, const HModule& target, const Mat& m,
                            double tol) {
  if (m.rows() != target.dim() || m.cols() != source.dim())
    throw structural_error("is_ternary_hom: matrix shape mismatch");
  const Index d = source.dim();
  TernaryCheck out{true, 0.0};
  if (d == 0) return out;

  std::vector<ModElement> img;
  img.reserve(static_cast<size_t>(d));
  for (Index c = 0; c < d; ++c) img.push_back(ModElement::from_flat(target, m.col(c)));

  struct Unit {
    Index k, i, j;
  };
  std::vector<Unit> units(static_cast<size_t>(d));
  for (Index k = 0; k < source.block_count(); ++k)
    for (Index i = 0; i < source.rows(k); ++i)
      for (Index j = 0; j < source.cols(k); ++j)
        units[static_cast<size_t>(source.coord(k, i, j))] = {k, i, j};

  Mat rhs(target.dim(), d);
  for (Index c2 = 0; c2 < d; ++c2) {
    for (Index c3 = 0; c3 < d; ++c3) {
      const AlgElement g = inner(img[c2], img[c3]);
      // right multiplication by g applied to every image column at once: in
      // flat coordinates each row segment of a target block transforms by
      // the transpose of that block of g
      for (Index tk = 0; tk < target.block_count(); ++tk) {
        const Index tm = target.rows(tk);
        const Index tn = target.cols(tk);
        if (tm == 0 || tn == 0) continue;
        const Mat gt = g.block(tk).transpose();
        for (Index i = 0; i < tm; ++i) {
          const Index row0 = target.coord(tk, i, 0);
          rhs.middleRows(row0, tn) = gt * m.middleRows(row0, tn);
        }
      }
      const Unit& u2 = units[static_cast<size_t>(c2)];
      const Unit& u3 = units[static_cast<size_t>(c3)];
      const bool pair_live = (u2.k == u3.k) && (u2.i == u3.i);
      for (Index c1 = 0; c1 < d; ++c1) {
        const Unit& u1 = units[static_cast<size_t>(c1)];
        double r;
        if (pair_live && u1.k == u2.k && u1.j == u2.j)
          r = (rhs.col(c1) - m.col(source.coord(u1.k, u1.i, u3.j))).norm();
        else
          r = rhs.col(c1).norm();
        out.residual = std::max(out.residual, r);
      }
    }
  }
  const double s = spectral_norm(m);
  out.holds = out.residual <= tol * std::max(1.0, s * s * s);
  return out;
}

TernaryHom make_ternary_hom(HModule source, HModule target, Mat m, double tol) {
  const TernaryCheck c = is_ternary_hom(source, target, m, tol);
  return TernaryHom{std::move(source), std::move(target), std::move(m), c.holds, c.residual};
}

TernaryHom identity_hom(const HModule& e) {
  return TernaryHom{e, e, Mat::Identity(e.dim(), e.dim()), true, 0.0};
}

BlockwiseHom extend_to_blockwise(const TernaryHom& v, bool reduced, double tol) {
  if (!v.verified)
    throw structural_error("extend_to_blockwise: the module map must be verified first");
  if (!reduced && !v.source.is_full())
    throw structural_error(
        "extend_to_blockwise: extending between the full linking algebras needs a full source "
        "module; only the reduced extension exists otherwise");
  if (v.mat.rows() != v.target.dim() || v.mat.cols() != v.source.dim())
    throw structural_error("extend_to_blockwise: matrix shape mismatch");

  BlockwiseHom out;
  out.source = build_linking(v.source, reduced);
  out.target = build_linking(v.target, reduced);
  out.u = v;

  const HModule& E = v.source;
  const HModule& F = v.target;
  const Index d = E.dim();

  std::vector<ModElement> img, units;
  img.reserve(static_cast<size_t>(d));
  units.reserve(static_cast<size_t>(d));
  for (Index k = 0; k < E.block_count(); ++k)
    for (Index i = 0; i < E.rows(k); ++i)
      for (Index j = 0; j < E.cols(k); ++j)
        units.push_back(ModElement::coordinate_unit(E, k, i, j));
  for (Index c = 0; c < d; ++c) img.push_back(ModElement::from_flat(F, v.mat.col(c)));

  const BlockAlgebraView& sb = out.source.base_view();
  const BlockAlgebraView& tb = out.target.base_view();
  const BlockAlgebraView& sc = out.source.compacts_view();
  const BlockAlgebraView& tc = out.target.compacts_view();
  const Mat sel_sb = view_selector(sb, E.base());
  const Mat sel_tb = view_selector(tb, F.base());

  // spanning grids for the two corner maps
  Mat g_phi(sb.algebra.dim(), d * d), t_phi(tb.algebra.dim(), d * d);
  Mat g_psi(sc.algebra.dim(), d * d), t_psi(tc.algebra.dim(), d * d);
  Index col = 0;
  for (Index a = 0; a < d; ++a)
    for (Index b = 0; b < d; ++b) {
      g_phi.col(col) = sel_sb * inner(units[static_cast<size_t>(a)], units[static_cast<size_t>(b)]).flatten();
      t_phi.col(col) = sel_tb * inner(img[static_cast<size_t>(a)], img[static_cast<size_t>(b)]).flatten();
      g_psi.col(col) = rank_one_flat(sc, units[static_cast<size_t>(a)], units[static_cast<size_t>(b)]);
      t_psi.col(col) = rank_one_flat(tc, img[static_cast<size_t>(a)], img[static_cast<size_t>(b)]);
      ++col;
    }
  const Mat phi_mat =
      solve_on_grid(g_phi, t_phi, tb.algebra.dim(), sb.algebra.dim(), &out.phi_residual);
  const Mat psi_mat =
      solve_on_grid(g_psi, t_psi, tc.algebra.dim(), sc.algebra.dim(), &out.psi_residual);
  out.phi = AlgHom{sb.algebra, tb.algebra, phi_mat};
  out.psi = AlgHom{sc.algebra, tc.algebra, psi_mat};

  // assemble the carrier map corner by corner
  const FdAlgebra& cs = out.source.carrier();
  const FdAlgebra& ct = out.target.carrier();
  Mat big = Mat::Zero(ct.dim(), cs.dim());
  const Mat& t11 = out.target.embedding(Corner::base);
  const Mat& t12 = out.target.embedding(Corner::adjoint);
  const Mat& t21 = out.target.embedding(Corner::module);
  const Mat& t22 = out.target.embedding(Corner::compacts);
  for (Index cb = 0; cb < cs.block_count(); ++cb) {
    const Index k = out.source.module_blocks()[static_cast<size_t>(cb)];
    const Index n = out.source.base_dim(cb);
    const Index m = out.source.mult(cb);
    Index vb = -1, wb = -1;
    for (size_t t = 0; t < sb.module_blocks.size(); ++t)
      if (sb.module_blocks[t] == k) vb = static_cast<Index>(t);
    for (size_t t = 0; t < sc.module_blocks.size(); ++t)
      if (sc.module_blocks[t] == k) wb = static_cast<Index>(t);
    for (Index i = 0; i < n + m; ++i)
      for (Index j = 0; j < n + m; ++j) {
        const Index src = cs.coord(cb, i, j);
        if (i < n && j < n)
          big.col(src) = t11 * phi_mat.col(sb.algebra.coord(vb, i, j));
        else if (i >= n && j < n)
          big.col(src) = t21 * v.mat.col(E.coord(k, i - n, j));
        else if (i < n && j >= n)
          big.col(src) = t12 * v.mat.col(E.coord(k, j - n, i)).conjugate();
        else
          big.col(src) = t22 * psi_mat.col(sc.algebra.coord(wb, i - n, j - n));
      }
  }
  out.assembled = AlgHom{cs, ct, big};
  const HomCheck hc = check_alg_hom(out.assembled, tol);
  out.mult_residual = hc.mult_residual;
  out.star_residual = hc.star_residual;

  // independent assembly: least squares over products of embedded
  // generators, whose images are forced by the homomorphism property alone
  std::vector<AlgElement> se, sa, te, ta;
  se.reserve(static_cast<size_t>(d));
  for (Index c = 0; c < d; ++c) {
    se.push_back(out.source.embed_module(units[static_cast<size_t>(c)]));
    sa.push_back(out.source.embed_module_adjoint(units[static_cast<size_t>(c)]));
    te.push_back(out.target.embed_module(img[static_cast<size_t>(c)]));
    ta.push_back(out.target.embed_module_adjoint(img[static_cast<size_t>(c)]));
  }
  Mat gen(cs.dim(), 2 * d + 2 * d * d), gim(ct.dim(), 2 * d + 2 * d * d);
  col = 0;
  for (Index c = 0; c < d; ++c) {
    gen.col(col) = se[static_cast<size_t>(c)].flatten();
    gim.col(col) = te[static_cast<size_t>(c)].flatten();
    ++col;
    gen.col(col) = sa[static_cast<size_t>(c)].flatten();
    gim.col(col) = ta[static_cast<size_t>(c)].flatten();
    ++col;
  }
  for (Index a = 0; a < d; ++a)
    for (Index b = 0; b < d; ++b) {
      gen.col(col) = alg_mul(se[static_cast<size_t>(a)], sa[static_cast<size_t>(b)]).flatten();
      gim.col(col) = alg_mul(te[static_cast<size_t>(a)], ta[static_cast<size_t>(b)]).flatten();
      ++col;
      gen.col(col) = alg_mul(sa[static_cast<size_t>(a)], se[static_cast<size_t>(b)]).flatten();
      gim.col(col) = alg_mul(ta[static_cast<size_t>(a)], te[static_cast<size_t>(b)]).flatten();
      ++col;
    }
  double second_residual = 0.0;
  const Mat big2 = solve_on_grid(gen, gim, ct.dim(), cs.dim(), &second_residual);
  double gap = second_residual;
  if (cs.dim() > 0) {
    const Mat q = image_onb(gen, tol);
    const Mat diff = (big2 - big) * q;
    for (Index c = 0; c < diff.cols(); ++c) gap = std::max(gap, diff.col(c).norm());
  }
  out.uniqueness_gap = gap;

  const double s = spectral_norm(v.mat);
  const double tol_eff = tol * std::max(1.0, s * s);
  out.verified = hc.ok() && out.phi_residual <= tol_eff && out.psi_residual <= tol_eff &&
                 out.uniqueness_gap <= tol_eff;
  return out;
}

CornerCheck check_blockwise(const LinkingAlgebra& src, const LinkingAlgebra& tgt,
                            const Mat& carrier_map, double tol) {
  if (carrier_map.rows() != tgt.carrier().dim() || carrier_map.cols() != src.carrier().dim())
    throw structural_error("check_blockwise: matrix shape mismatch");
  CornerCheck out;
  out.hom = check_alg_hom(AlgHom{src.carrier(), tgt.carrier(), carrier_map}, tol);
  out.corners_preserved = true;
  for (int c = 0; c < 4; ++c) {
    const Mat& es = src.embedding(static_cast<Corner>(c));
    const double esc =
        (es.cols() == 0)
            ? 0.0
            : tgt.corner_subspace(static_cast<Corner>(c), tol).max_escape(carrier_map * es);
    out.corner_escape[static_cast<size_t>(c)] = esc;
    if (esc > tol) {
      out.corners_preserved = false;
      if (!out.violating_corner) out.violating_corner = static_cast<Corner>(c);
    }
  }
  return out;
}

BlockwiseHom ternary_iso_to_generalized_unitary(const TernaryHom& w, double tol) {
  if (!w.verified)
    throw structural_error("ternary_iso_to_generalized_unitary: the map must be verified first");
  if (w.source.dim() != w.target.dim() || numeric_rank(w.mat, tol) != w.source.dim())
    throw structural_error("ternary_iso_to_generalized_unitary: the map is not bijective");
  BlockwiseHom out = extend_to_blockwise(w, true, tol);
  if (numeric_rank(out.phi.mat, tol) != out.phi.source.dim())
    throw verification_error("base-corner map of a ternary isomorphism is not invertible",
                             out.phi_residual);
  return out;
}

}  // namespace trolink
