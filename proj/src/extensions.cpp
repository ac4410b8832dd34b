#include "trolink/extensions.hpp"

#include <Eigen/LU>

#include <string>

namespace trolink {

namespace {

void check_composable(const ExactSequence& seq, const char* who) {
  if (!(seq.v.target == seq.u.source))
    throw structural_error(std::string(who) + ": the maps do not compose");
}

double worst_column_norm(const Mat& m) {
  double worst = 0.0;
  for (Index c = 0; c < m.cols(); ++c) worst = std::max(worst, m.col(c).norm());
  return worst;
}

/// Exactness of a two-step corner sequence A -> B -> C of algebra maps.
bool corner_sequence_exact(const AlgHom& h1, const AlgHom& h2, double tol) {
  if (!(h1.target == h2.source))
    throw structural_error("diagonal_extensions: corner maps do not compose");
  if (!check_alg_hom(h1, tol).ok() || !check_alg_hom(h2, tol).ok()) return false;
  if (numeric_rank(h1.mat, tol) != h1.source.dim()) return false;
  if (numeric_rank(h2.mat, tol) != h2.target.dim()) return false;
  const Subspace image = span(Ambient(h1.target), h1.mat, tol);
  const Subspace kernel(Ambient(h1.target), kernel_onb(h2.mat, tol), tol);
  return image.same_space(kernel);
}

}  // namespace

SequenceReport verify_short_exact(const ExactSequence& seq, double tol) {
  check_composable(seq, "verify_short_exact");
  SequenceReport out;
  out.maps_verified = seq.v.verified && seq.u.verified;
  const HModule& e = seq.total();
  out.injective = numeric_rank(seq.v.mat, tol) == seq.sub().dim();
  out.surjective = numeric_rank(seq.u.mat, tol) == seq.quot().dim();

  const Subspace image = span(Ambient(e), seq.v.mat, tol);
  const Subspace kernel(Ambient(e), kernel_onb(seq.u.mat, tol), tol);
  const Containment fwd = kernel.contains(image);
  const Containment bwd = image.contains(kernel);
  out.exact_middle = fwd.contained && bwd.contained;
  out.exactness_gap = std::max(fwd.residual, bwd.residual);
  if (!out.exact_middle) {
    double worst = 0.0;
    for (Index c = 0; c < image.dim(); ++c) {
      const Vec col = image.onb().col(c);
      const double r = (col - kernel.project(col)).norm();
      if (r > worst) {
        worst = r;
        out.witness = col;
      }
    }
    for (Index c = 0; c < kernel.dim(); ++c) {
      const Vec col = kernel.onb().col(c);
      const double r = (col - image.project(col)).norm();
      if (r > worst) {
        worst = r;
        out.witness = col;
      }
    }
  }
  return out;
}

BlockwiseSequence to_blockwise_extension(const ExactSequence& seq, double tol) {
  check_composable(seq, "to_blockwise_extension");
  if (!verify_short_exact(seq, tol).ok())
    throw structural_error("to_blockwise_extension: the sequence does not verify as short exact");

  BlockwiseSequence out{extend_to_blockwise(seq.v, /*reduced=*/true, tol),
                        extend_to_blockwise(seq.u, /*reduced=*/true, tol)};

  const FdAlgebra& middle = out.big_v.assembled.target;
  out.injective = numeric_rank(out.big_v.assembled.mat, tol) == out.big_v.assembled.source.dim();
  out.surjective = numeric_rank(out.big_u.assembled.mat, tol) == out.big_u.assembled.target.dim();
  const Subspace image = span(Ambient(middle), out.big_v.assembled.mat, tol);
  const Subspace kernel(Ambient(middle), kernel_onb(out.big_u.assembled.mat, tol), tol);
  out.exact_middle = image.same_space(kernel);

  // the module corners of the extended maps are the original maps
  const Mat v_corner = out.big_v.target.embedding(Corner::module).adjoint() *
                       out.big_v.assembled.mat * out.big_v.source.embedding(Corner::module);
  const Mat u_corner = out.big_u.target.embedding(Corner::module).adjoint() *
                       out.big_u.assembled.mat * out.big_u.source.embedding(Corner::module);
  out.corner_gap = std::max(worst_column_norm(v_corner - seq.v.mat),
                            worst_column_norm(u_corner - seq.u.mat));
  out.corners_restrict = out.corner_gap <= tol;
  return out;
}

DiagonalExtensions diagonal_extensions(const ExactSequence& seq, double tol) {
  const BlockwiseSequence bs = to_blockwise_extension(seq, tol);
  DiagonalExtensions out{bs.big_v.phi, bs.big_u.phi, bs.big_v.psi, bs.big_u.psi};
  out.base_exact = corner_sequence_exact(out.base_v, out.base_u, tol);
  out.compacts_exact = corner_sequence_exact(out.compacts_v, out.compacts_u, tol);
  return out;
}

ExactSequence external_direct_sum(const HModule& f, const HModule& g, double tol) {
  std::vector<Index> dims;
  std::vector<Index> mults;
  for (Index k = 0; k < f.base().block_count(); ++k) {
    dims.push_back(f.base().block_dim(k));
    mults.push_back(f.mult(k));
  }
  for (Index k = 0; k < g.base().block_count(); ++k) {
    dims.push_back(g.base().block_dim(k));
    mults.push_back(g.mult(k));
  }
  const HModule e(FdAlgebra(dims), mults);

  Mat vmat = Mat::Zero(e.dim(), g.dim());
  for (Index c = 0; c < g.dim(); ++c) vmat(f.dim() + c, c) = 1.0;
  Mat umat = Mat::Zero(f.dim(), e.dim());
  for (Index c = 0; c < f.dim(); ++c) umat(c, c) = 1.0;
  return ExactSequence{make_ternary_hom(g, e, std::move(vmat), tol),
                       make_ternary_hom(e, f, std::move(umat), tol)};
}

SplittingData construct_splitting(const ExactSequence& seq, double tol) {
  check_composable(seq, "construct_splitting");
  if (!verify_short_exact(seq, tol).ok())
    throw structural_error("construct_splitting: the sequence does not verify as short exact");

  const HModule& e = seq.total();
  const HModule& f = seq.quot();
  const Subspace image = span(Ambient(e), seq.v.mat, tol);
  Subspace comp = ortho_complement(image);
  const bool comp_ideal = classify(comp).is_ideal();

  const Mat uc = seq.u.mat * comp.onb();
  if (comp.dim() != f.dim() || numeric_rank(uc, tol) != f.dim())
    throw verification_error(
        "construct_splitting: u is not bijective on the complement of the embedded "
        "submodule, contradicting the verified exactness");
  Mat smat = comp.onb() * uc.partialPivLu().solve(Mat::Identity(f.dim(), f.dim()));
  TernaryHom s = make_ternary_hom(f, e, std::move(smat), tol);

  const double resid =
      worst_column_norm(seq.u.mat * s.mat - Mat::Identity(f.dim(), f.dim()));
  const double scale = f.dim() > 0 ? spectral_norm(s.mat) : 1.0;
  const bool verified = comp_ideal && s.verified && resid <= tol * std::max(1.0, scale);
  return SplittingData{std::move(comp), comp_ideal, std::move(s), resid, verified};
}

BusbyWitness busby_trivial_witness(const ExactSequence& seq, double tol) {
  const SplittingData split = construct_splitting(seq, tol);
  const HModule& e = seq.total();
  const HModule& f = seq.quot();
  const HModule& g = seq.sub();

  ExactSequence sum = external_direct_sum(f, g, tol);
  Mat wmat(e.dim(), f.dim() + g.dim());
  wmat.leftCols(f.dim()) = split.s.mat;
  wmat.rightCols(g.dim()) = seq.v.mat;
  TernaryHom w = make_ternary_hom(sum.total(), e, std::move(wmat), tol);

  const double r1 = worst_column_norm(w.mat * sum.v.mat - seq.v.mat);
  const double r2 = worst_column_norm(seq.u.mat * w.mat - sum.u.mat);
  const bool bijective =
      e.dim() == f.dim() + g.dim() && numeric_rank(w.mat, tol) == e.dim();

  BusbyWitness out{std::move(sum), std::move(w), false, false, 0.0, false};
  const double scale = spectral_norm(out.w.mat);
  out.residual = std::max({r1, r2, split.section_residual});
  out.maps_correspond = r1 <= tol * std::max(1.0, scale) && r2 <= tol * std::max(1.0, scale);

  // the range ideal of E splits into the block sets of the two summands
  const auto mask_image = as_module_block_mask(span(Ambient(e), seq.v.mat, tol));
  const auto mask_comp = as_module_block_mask(split.complement);
  if (mask_image && mask_comp) {
    bool disjoint_cover = true;
    for (Index k = 0; k < e.block_count(); ++k) {
      const bool a = (*mask_image)[static_cast<size_t>(k)] != 0;
      const bool b = (*mask_comp)[static_cast<size_t>(k)] != 0;
      const bool active = e.mult(k) > 0;
      if ((a && b) || ((a || b) != active)) disjoint_cover = false;
    }
    out.base_splits = disjoint_cover;
  }
  out.verified = out.w.verified && bijective && out.maps_correspond && out.base_splits &&
                 split.verified;
  return out;
}

}  // namespace trolink
