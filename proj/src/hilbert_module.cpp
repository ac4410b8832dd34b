#include "trolink/hilbert_module.hpp"

#include <algorithm>

namespace trolink {

HModule::HModule(FdAlgebra base, std::vector<Index> multiplicities)
    : base_(std::move(base)), mult_(std::move(multiplicities)) {
  if (static_cast<Index>(mult_.size()) != base_.block_count())
    throw structural_error("HModule: multiplicity list must match the block count");
  offsets_.reserve(mult_.size());
  Index off = 0;
  for (Index k = 0; k < base_.block_count(); ++k) {
    if (mult_[static_cast<size_t>(k)] < 0)
      throw structural_error("HModule: negative multiplicity");
    offsets_.push_back(off);
    off += mult_[static_cast<size_t>(k)] * base_.block_dim(k);
  }
  total_ = off;
}

std::vector<Index> HModule::active_blocks() const {
  std::vector<Index> out;
  for (Index k = 0; k < block_count(); ++k)
    if (mult(k) > 0) out.push_back(k);
  return out;
}

bool HModule::is_full() const {
  for (Index k = 0; k < block_count(); ++k)
    if (mult(k) == 0) return false;
  return true;
}

ModElement::ModElement(HModule module, std::vector<Mat> blocks)
    : module_(std::move(module)), blocks_(std::move(blocks)) {
  if (static_cast<Index>(blocks_.size()) != module_.block_count())
    throw structural_error("ModElement: wrong number of blocks");
  for (Index k = 0; k < module_.block_count(); ++k) {
    const Mat& b = blocks_[static_cast<size_t>(k)];
    if (b.rows() != module_.rows(k) || b.cols() != module_.cols(k))
      throw structural_error("ModElement: block " + std::to_string(k) + " has wrong shape");
  }
}

ModElement ModElement::zero(const HModule& m) {
  std::vector<Mat> blocks;
  blocks.reserve(static_cast<size_t>(m.block_count()));
  for (Index k = 0; k < m.block_count(); ++k)
    blocks.push_back(Mat::Zero(m.rows(k), m.cols(k)));
  return ModElement(m, std::move(blocks));
}

ModElement ModElement::coordinate_unit(const HModule& m, Index k, Index i, Index j) {
  ModElement e = zero(m);
  e.block(k)(i, j) = cplx(1, 0);
  return e;
}

ModElement ModElement::from_flat(const HModule& m, const Vec& coords) {
  if (coords.size() != m.dim()) throw structural_error("from_flat: wrong length");
  ModElement e = zero(m);
  for (Index k = 0; k < m.block_count(); ++k)
    for (Index i = 0; i < m.rows(k); ++i)
      for (Index j = 0; j < m.cols(k); ++j) e.block(k)(i, j) = coords(m.coord(k, i, j));
  return e;
}

Vec ModElement::flatten() const {
  Vec v(module_.dim());
  for (Index k = 0; k < module_.block_count(); ++k)
    for (Index i = 0; i < module_.rows(k); ++i)
      for (Index j = 0; j < module_.cols(k); ++j) v(module_.coord(k, i, j)) = block(k)(i, j);
  return v;
}

double ModElement::coeff_norm() const {
  double s = 0;
  for (const Mat& b : blocks_) s += b.squaredNorm();
  return std::sqrt(s);
}

ModElement& ModElement::operator+=(const ModElement& rhs) {
  if (!(module_ == rhs.module_)) throw structural_error("ModElement +: parent mismatch");
  for (size_t k = 0; k < blocks_.size(); ++k) blocks_[k] += rhs.blocks_[k];
  return *this;
}

ModElement& ModElement::operator-=(const ModElement& rhs) {
  if (!(module_ == rhs.module_)) throw structural_error("ModElement -: parent mismatch");
  for (size_t k = 0; k < blocks_.size(); ++k) blocks_[k] -= rhs.blocks_[k];
  return *this;
}

ModElement& ModElement::operator*=(cplx scalar) {
  for (Mat& b : blocks_) b *= scalar;
  return *this;
}

ModElement operator+(ModElement lhs, const ModElement& rhs) { return lhs += rhs; }
ModElement operator-(ModElement lhs, const ModElement& rhs) { return lhs -= rhs; }
ModElement operator*(cplx scalar, ModElement rhs) { return rhs *= scalar; }

AlgElement inner(const ModElement& x, const ModElement& y) {
  if (!(x.module() == y.module())) throw structural_error("inner: parent mismatch");
  AlgElement out = AlgElement::zero(x.module().base());
  for (Index k = 0; k < x.module().block_count(); ++k)
    out.block(k) = x.block(k).adjoint() * y.block(k);
  return out;
}

ModElement act(const ModElement& x, const AlgElement& b) {
  if (!(x.module().base() == b.algebra())) throw structural_error("act: base mismatch");
  ModElement out = ModElement::zero(x.module());
  for (Index k = 0; k < x.module().block_count(); ++k)
    out.block(k) = x.block(k) * b.block(k);
  return out;
}

double mod_norm(const ModElement& x) { return std::sqrt(alg_norm(inner(x, x))); }

const FdAlgebra& Ambient::algebra() const {
  if (!is_algebra()) throw structural_error("Ambient: not an algebra");
  return std::get<FdAlgebra>(v_);
}

const HModule& Ambient::module() const {
  if (!is_module()) throw structural_error("Ambient: not a module");
  return std::get<HModule>(v_);
}

Index Ambient::dim() const {
  return is_algebra() ? algebra().dim() : module().dim();
}

Subspace::Subspace(Ambient parent, Mat onb, double tol)
    : parent_(std::move(parent)), onb_(std::move(onb)), tol_(tol) {
  if (onb_.rows() != parent_.dim())
    throw structural_error("Subspace: basis rows do not match the parent dimension");
  if (onb_.cols() > parent_.dim())
    throw structural_error("Subspace: more basis vectors than the parent dimension");
  if (tol_ <= 0) throw structural_error("Subspace: tolerance must be positive");
}

Subspace Subspace::zero(Ambient parent, double tol) {
  const Index d = parent.dim();
  return Subspace(std::move(parent), Mat(d, 0), tol);
}

Subspace Subspace::full(Ambient parent, double tol) {
  const Index d = parent.dim();
  return Subspace(std::move(parent), Mat::Identity(d, d), tol);
}

Vec Subspace::project(const Vec& x) const {
  if (x.size() != parent_.dim()) throw structural_error("project: wrong length");
  if (onb_.cols() == 0) return Vec::Zero(x.size());
  return onb_ * (onb_.adjoint() * x);
}

Containment Subspace::contains(const Vec& x) const {
  const double r = (x - project(x)).norm();
  return Containment{r <= tol_ * std::max(1.0, x.norm()), r};
}

Containment Subspace::contains(const Subspace& other) const {
  if (!(parent_ == other.parent_)) throw structural_error("contains: parent mismatch");
  Containment out{true, 0.0};
  for (Index c = 0; c < other.dim(); ++c) {
    const Containment ci = contains(other.onb_.col(c));
    out.residual = std::max(out.residual, ci.residual);
    out.contained = out.contained && ci.contained;
  }
  return out;
}

double Subspace::max_escape(const Mat& columns) const {
  if (columns.rows() != parent_.dim()) throw structural_error("max_escape: wrong row count");
  if (columns.cols() == 0) return 0.0;
  Mat resid = columns;
  if (onb_.cols() > 0) resid -= onb_ * (onb_.adjoint() * columns);
  double worst = 0.0;
  for (Index c = 0; c < columns.cols(); ++c) {
    const double scale = std::max(1.0, columns.col(c).norm());
    worst = std::max(worst, resid.col(c).norm() / scale);
  }
  return worst;
}

bool Subspace::same_space(const Subspace& other) const {
  if (dim() != other.dim()) return false;
  return contains(other).contained && other.contains(*this).contained;
}

Subspace span(const Ambient& parent, const Mat& generators, double tol) {
  if (generators.rows() != parent.dim())
    throw structural_error("span: generator rows do not match the parent dimension");
  // Drop numerically-zero generators, normalize the rest.
  std::vector<Index> keep;
  for (Index c = 0; c < generators.cols(); ++c)
    if (generators.col(c).norm() > kGeneratorFloor) keep.push_back(c);
  if (keep.empty()) return Subspace::zero(parent, tol);
  Mat g(parent.dim(), static_cast<Index>(keep.size()));
  for (size_t c = 0; c < keep.size(); ++c)
    g.col(static_cast<Index>(c)) = generators.col(keep[c]).normalized();
  return Subspace(parent, image_onb(g, tol), tol);
}

Subspace span(const Ambient& parent, const std::vector<ModElement>& gens, double tol) {
  Mat g(parent.dim(), static_cast<Index>(gens.size()));
  for (size_t c = 0; c < gens.size(); ++c) {
    if (!(parent.is_module() && gens[c].module() == parent.module()))
      throw structural_error("span: generator parent mismatch");
    g.col(static_cast<Index>(c)) = gens[c].flatten();
  }
  return span(parent, g, tol);
}

Subspace span(const Ambient& parent, const std::vector<AlgElement>& gens, double tol) {
  Mat g(parent.dim(), static_cast<Index>(gens.size()));
  for (size_t c = 0; c < gens.size(); ++c) {
    if (!(parent.is_algebra() && gens[c].algebra() == parent.algebra()))
      throw structural_error("span: generator parent mismatch");
    g.col(static_cast<Index>(c)) = gens[c].flatten();
  }
  return span(parent, g, tol);
}

Subspace span_union(const Subspace& a, const Subspace& b) {
  if (!(a.parent() == b.parent())) throw structural_error("span_union: parent mismatch");
  Mat g(a.parent().dim(), a.dim() + b.dim());
  g.leftCols(a.dim()) = a.onb();
  g.rightCols(b.dim()) = b.onb();
  return span(a.parent(), g, std::max(a.tol(), b.tol()));
}

Subspace ideal_subspace(const BlockIdeal& ideal, double tol) {
  const FdAlgebra& a = ideal.algebra();
  Mat onb = Mat::Zero(a.dim(), ideal.subspace_dim());
  Index c = 0;
  for (Index k = 0; k < a.block_count(); ++k) {
    if (!ideal.contains_block(k)) continue;
    const Index n = a.block_dim(k);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) onb(a.coord(k, i, j), c++) = cplx(1, 0);
  }
  return Subspace(Ambient(a), std::move(onb), tol);
}

Subspace module_block_subspace(const HModule& m, const std::vector<char>& mask, double tol) {
  if (static_cast<Index>(mask.size()) != m.block_count())
    throw structural_error("module_block_subspace: mask length mismatch");
  Index d = 0;
  for (Index k = 0; k < m.block_count(); ++k)
    if (mask[static_cast<size_t>(k)]) d += m.rows(k) * m.cols(k);
  Mat onb = Mat::Zero(m.dim(), d);
  Index c = 0;
  for (Index k = 0; k < m.block_count(); ++k) {
    if (!mask[static_cast<size_t>(k)]) continue;
    for (Index i = 0; i < m.rows(k); ++i)
      for (Index j = 0; j < m.cols(k); ++j) onb(m.coord(k, i, j), c++) = cplx(1, 0);
  }
  return Subspace(Ambient(m), std::move(onb), tol);
}

namespace {

std::vector<ModElement> basis_elements(const Subspace& s) {
  std::vector<ModElement> out;
  out.reserve(static_cast<size_t>(s.dim()));
  for (Index c = 0; c < s.dim(); ++c)
    out.push_back(ModElement::from_flat(s.parent().module(), s.onb().col(c)));
  return out;
}

std::vector<AlgElement> basis_alg_elements(const Subspace& s) {
  std::vector<AlgElement> out;
  out.reserve(static_cast<size_t>(s.dim()));
  for (Index c = 0; c < s.dim(); ++c)
    out.push_back(AlgElement::from_flat(s.parent().algebra(), s.onb().col(c)));
  return out;
}

}  // namespace

Subspace product_span(ProductKind kind, const Subspace& a, const Subspace& b,
                      const std::optional<Subspace>& c) {
  const double tol = std::max({a.tol(), b.tol(), c ? c->tol() : 0.0});
  switch (kind) {
    case ProductKind::inner: {
      if (!a.parent().is_module() || !(a.parent() == b.parent()))
        throw structural_error("product_span(inner): operands must share a module");
      const HModule& e = a.parent().module();
      const auto xs = basis_elements(a);
      const auto ys = basis_elements(b);
      Mat g(e.base().dim(), a.dim() * b.dim());
      Index col = 0;
      for (const auto& x : xs)
        for (const auto& y : ys) g.col(col++) = inner(x, y).flatten();
      return span(Ambient(e.base()), g, tol);
    }
    case ProductKind::action: {
      if (!a.parent().is_module() || !b.parent().is_algebra() ||
          !(b.parent().algebra() == a.parent().module().base()))
        throw structural_error("product_span(action): operands must be a module and its base");
      const HModule& e = a.parent().module();
      const auto xs = basis_elements(a);
      const auto bs = basis_alg_elements(b);
      Mat g(e.dim(), a.dim() * b.dim());
      Index col = 0;
      for (const auto& x : xs)
        for (const auto& bb : bs) g.col(col++) = act(x, bb).flatten();
      return span(Ambient(e), g, tol);
    }
    case ProductKind::ternary: {
      if (!c) throw structural_error("product_span(ternary): needs three operands");
      if (!a.parent().is_module() || !(a.parent() == b.parent()) || !(a.parent() == c->parent()))
        throw structural_error("product_span(ternary): operands must share a module");
      const Subspace inner_bc = product_span(ProductKind::inner, b, *c);
      return product_span(ProductKind::action, a, inner_bc);
    }
    case ProductKind::rankone: {
      if (!a.parent().is_module() || !(a.parent() == b.parent()))
        throw structural_error("product_span(rankone): operands must share a module");
      const HModule& e = a.parent().module();
      const BlockAlgebraView kview = compacts_algebra(e);
      const auto xs = basis_elements(a);
      const auto ys = basis_elements(b);
      Mat g(kview.algebra.dim(), a.dim() * b.dim());
      Index col = 0;
      for (const auto& x : xs)
        for (const auto& y : ys) {
          Vec v = Vec::Zero(kview.algebra.dim());
          for (Index vb = 0; vb < kview.algebra.block_count(); ++vb) {
            const Index k = kview.module_blocks[static_cast<size_t>(vb)];
            const Mat prod = x.block(k) * y.block(k).adjoint();
            const Index mm = kview.algebra.block_dim(vb);
            for (Index i = 0; i < mm; ++i)
              for (Index j = 0; j < mm; ++j) v(kview.algebra.coord(vb, i, j)) = prod(i, j);
          }
          g.col(col++) = v;
        }
      return span(Ambient(kview.algebra), g, tol);
    }
  }
  throw structural_error("product_span: unknown kind");
}

Subspace alg_product_span(const Subspace& a, const Subspace& b) {
  if (!a.parent().is_algebra() || !(a.parent() == b.parent()))
    throw structural_error("alg_product_span: operands must share an algebra");
  const auto xs = basis_alg_elements(a);
  const auto ys = basis_alg_elements(b);
  Mat g(a.parent().dim(), a.dim() * b.dim());
  Index col = 0;
  for (const auto& x : xs)
    for (const auto& y : ys) g.col(col++) = alg_mul(x, y).flatten();
  return span(a.parent(), g, std::max(a.tol(), b.tol()));
}

BlockAlgebraView range_algebra(const HModule& e) {
  std::vector<Index> dims, map;
  for (Index k = 0; k < e.block_count(); ++k)
    if (e.mult(k) > 0) {
      dims.push_back(e.cols(k));
      map.push_back(k);
    }
  return BlockAlgebraView{FdAlgebra(dims), std::move(map)};
}

BlockAlgebraView compacts_algebra(const HModule& e) {
  std::vector<Index> dims, map;
  for (Index k = 0; k < e.block_count(); ++k)
    if (e.mult(k) > 0) {
      dims.push_back(e.mult(k));
      map.push_back(k);
    }
  return BlockAlgebraView{FdAlgebra(dims), std::move(map)};
}

Mat view_selector(const BlockAlgebraView& view, const FdAlgebra& base) {
  Mat sel = Mat::Zero(view.algebra.dim(), base.dim());
  for (Index vb = 0; vb < view.algebra.block_count(); ++vb) {
    const Index k = view.module_blocks[static_cast<size_t>(vb)];
    const Index n = view.algebra.block_dim(vb);
    if (base.block_dim(k) != n)
      throw structural_error("view_selector: view block dimension mismatch");
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j)
        sel(view.algebra.coord(vb, i, j), base.coord(k, i, j)) = cplx(1, 0);
  }
  return sel;
}

Subspace restrict_to_view(const Subspace& s, const BlockAlgebraView& view) {
  if (!s.parent().is_algebra())
    throw structural_error("restrict_to_view: subspace must live in an algebra");
  const FdAlgebra& base = s.parent().algebra();
  const Mat sel = view_selector(view, base);
  const Mat picked = sel * s.onb();
  // Support check: nothing may live outside the selected blocks.
  for (Index c = 0; c < s.dim(); ++c) {
    const double lost = std::sqrt(std::max(0.0, s.onb().col(c).squaredNorm() -
                                                    picked.col(c).squaredNorm()));
    if (lost > s.tol())
      throw structural_error("restrict_to_view: subspace has support outside the view");
  }
  return span(Ambient(view.algebra), picked, s.tol());
}

BlockIdeal range_ideal(const HModule& e) {
  std::vector<char> mask(static_cast<size_t>(e.block_count()), 0);
  for (Index k = 0; k < e.block_count(); ++k)
    if (e.mult(k) > 0) mask[static_cast<size_t>(k)] = 1;
  return BlockIdeal(e.base(), std::move(mask));
}

RangeIdealReport range_ideal(const Subspace& f) {
  if (!f.parent().is_module())
    throw structural_error("range_ideal: subspace must live in a module");
  Subspace a = product_span(ProductKind::inner, f, f);
  RangeIdealReport out{a, false, false, std::nullopt, 0.0};

  const Subspace prods = alg_product_span(a, a);
  double resid = a.contains(prods).residual;
  // Adjoint closure.
  std::vector<AlgElement> adj;
  for (Index c = 0; c < a.dim(); ++c)
    adj.push_back(alg_adjoint(AlgElement::from_flat(a.parent().algebra(), a.onb().col(c))));
  const Subspace astar = span(a.parent(), adj, a.tol());
  resid = std::max(resid, a.contains(astar).residual);
  out.residual = resid;
  out.is_subalgebra = resid <= a.tol();

  ClassifyIdealResult cls = classify_ideal(a);
  out.is_ideal = cls.ok();
  out.ideal = cls.ideal;
  return out;
}

Subspace ortho_complement(const Subspace& k) {
  if (k.dim() == 0) return Subspace::full(k.parent(), k.tol());
  return Subspace(k.parent(), kernel_onb(k.onb().adjoint(), k.tol()), k.tol());
}

}  // namespace trolink
