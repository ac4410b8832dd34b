#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "testutil.hpp"
#include "trolink/extensions.hpp"

using namespace trolink;

namespace {

/// 0 -> G -> E -> F -> 0 with G the second-block submodule of E and F the
/// first-block part over its own base.
ExactSequence two_block_sequence() {
  const FdAlgebra b({2, 1});
  const HModule e(b, {1, 1});
  const HModule g(b, {0, 1});
  const HModule f(FdAlgebra({2}), {1});
  Mat vmat = Mat::Zero(3, 1);
  vmat(2, 0) = 1.0;
  Mat umat = Mat::Zero(2, 3);
  umat(0, 0) = 1.0;
  umat(1, 1) = 1.0;
  return ExactSequence{make_ternary_hom(g, e, vmat), make_ternary_hom(e, f, umat)};
}

/// Unitary module automorphism x_k -> U_k x_k V_k^* in flat coordinates.
Mat block_rotation(Rng& rng, const HModule& e) {
  Mat w = Mat::Zero(e.dim(), e.dim());
  for (Index k = 0; k < e.block_count(); ++k) {
    if (e.rows(k) == 0) continue;
    const Mat u = rng.unitary(e.rows(k));
    const Mat v = rng.unitary(e.cols(k));
    for (Index i = 0; i < e.rows(k); ++i)
      for (Index j = 0; j < e.cols(k); ++j)
        for (Index p = 0; p < e.rows(k); ++p)
          for (Index q = 0; q < e.cols(k); ++q)
            w(e.coord(k, i, j), e.coord(k, p, q)) = u(i, p) * std::conj(v(j, q));
  }
  return w;
}

ExactSequence conjugate_sequence(const ExactSequence& seq, const Mat& w) {
  return ExactSequence{
      make_ternary_hom(seq.sub(), seq.total(), Mat(w * seq.v.mat)),
      make_ternary_hom(seq.total(), seq.quot(), Mat(seq.u.mat * w.adjoint()))};
}

std::vector<Index> block_dims(const FdAlgebra& a) {
  std::vector<Index> out;
  for (Index k = 0; k < a.block_count(); ++k) out.push_back(a.block_dim(k));
  return out;
}

}  // namespace

TEST_CASE("external direct sum concatenates blocks and verifies exact") {
  const HModule f(FdAlgebra({2}), {1});
  const HModule g(FdAlgebra({1}), {1});
  const ExactSequence seq = external_direct_sum(f, g);

  CHECK(block_dims(seq.total().base()) == std::vector<Index>{2, 1});
  CHECK(seq.total().mult(0) == 1);
  CHECK(seq.total().mult(1) == 1);
  CHECK(seq.v.verified);
  CHECK(seq.u.verified);

  const SequenceReport rep = verify_short_exact(seq);
  CHECK(rep.ok());
  CHECK(rep.exactness_gap <= 1e-12);

  // compact operators of the sum are the sums of the compact operators
  const std::vector<Index> kf = block_dims(compacts_algebra(f).algebra);
  const std::vector<Index> kg = block_dims(compacts_algebra(g).algebra);
  std::vector<Index> expect = kf;
  expect.insert(expect.end(), kg.begin(), kg.end());
  CHECK(block_dims(compacts_algebra(seq.total()).algebra) == expect);
}

TEST_CASE("external direct sum with a zero summand reproduces the other") {
  const HModule f(FdAlgebra({2}), {0});
  const HModule g(FdAlgebra({1, 1}), {1, 2});
  const ExactSequence seq = external_direct_sum(f, g);

  CHECK(seq.total().dim() == g.dim());
  CHECK(verify_short_exact(seq).ok());
  // v is then a bijection
  CHECK(testutil::oracle_rank(seq.v.mat, 1e-9) == g.dim());
}

TEST_CASE("two-block sequence verifies and extends blockwise") {
  const ExactSequence seq = two_block_sequence();
  const SequenceReport rep = verify_short_exact(seq);
  CHECK(rep.maps_verified);
  CHECK(rep.injective);
  CHECK(rep.surjective);
  CHECK(rep.exact_middle);
  CHECK_FALSE(rep.witness.has_value());

  const BlockwiseSequence bs = to_blockwise_extension(seq);
  CHECK(bs.big_v.verified);
  CHECK(bs.big_u.verified);
  CHECK(bs.injective);
  CHECK(bs.surjective);
  CHECK(bs.exact_middle);
  CHECK(bs.corners_restrict);
  CHECK(bs.corner_gap == 0.0);
  CHECK(bs.ok());

  // carrier shapes: L(G) = M2, L(E) = M3 + M2, L(F) = M3
  CHECK(block_dims(bs.big_v.source.carrier()) == std::vector<Index>{2});
  CHECK(block_dims(bs.big_v.target.carrier()) == std::vector<Index>{3, 2});
  CHECK(block_dims(bs.big_u.target.carrier()) == std::vector<Index>{3});

  // the extended maps are corner-preserving homs
  CHECK(check_blockwise(bs.big_v.source, bs.big_v.target, bs.big_v.assembled.mat).ok());
  CHECK(check_blockwise(bs.big_u.source, bs.big_u.target, bs.big_u.assembled.mat).ok());
}

TEST_CASE("restricting and re-extending reproduces the blockwise maps") {
  const ExactSequence seq = two_block_sequence();
  const BlockwiseSequence bs = to_blockwise_extension(seq);

  // corner restriction returns the original module maps exactly, so a
  // second extension must land on the same carrier homomorphisms
  const Mat v_corner = bs.big_v.target.embedding(Corner::module).adjoint() *
                       bs.big_v.assembled.mat * bs.big_v.source.embedding(Corner::module);
  const BlockwiseHom again =
      extend_to_blockwise(make_ternary_hom(seq.sub(), seq.total(), v_corner), true);
  CHECK(testutil::approx_eq(again.assembled.mat, bs.big_v.assembled.mat, 1e-8));

  const Mat u_corner = bs.big_u.target.embedding(Corner::module).adjoint() *
                       bs.big_u.assembled.mat * bs.big_u.source.embedding(Corner::module);
  const BlockwiseHom again_u =
      extend_to_blockwise(make_ternary_hom(seq.total(), seq.quot(), u_corner), true);
  CHECK(testutil::approx_eq(again_u.assembled.mat, bs.big_u.assembled.mat, 1e-8));
}

TEST_CASE("diagonal extensions restrict to the base and compacts corners") {
  const ExactSequence seq = two_block_sequence();
  const DiagonalExtensions d = diagonal_extensions(seq);

  CHECK(d.base_exact);
  CHECK(d.compacts_exact);

  // base corners: M1 -> M2 + M1 -> M2
  CHECK(block_dims(d.base_v.source) == std::vector<Index>{1});
  CHECK(block_dims(d.base_v.target) == std::vector<Index>{2, 1});
  CHECK(block_dims(d.base_u.target) == std::vector<Index>{2});

  // compacts corners: M1 -> M1 + M1 -> M1
  CHECK(block_dims(d.compacts_v.source) == std::vector<Index>{1});
  CHECK(block_dims(d.compacts_v.target) == std::vector<Index>{1, 1});
  CHECK(block_dims(d.compacts_u.target) == std::vector<Index>{1});
}

TEST_CASE("splitting embeds the quotient as the complementary blocks") {
  const ExactSequence seq = two_block_sequence();
  const SplittingData split = construct_splitting(seq);

  CHECK(split.complement_is_ideal);
  CHECK(split.verified);
  CHECK(split.s.verified);
  CHECK(split.section_residual <= 1e-12);

  Mat expect = Mat::Zero(3, 2);
  expect(0, 0) = 1.0;
  expect(1, 1) = 1.0;
  CHECK(testutil::approx_eq(split.s.mat, expect, 1e-12));

  const auto mask = as_module_block_mask(span(Ambient(seq.total()), split.s.mat));
  REQUIRE(mask.has_value());
  CHECK(*mask == std::vector<char>{1, 0});
}

TEST_CASE("splitting a super-trivial sequence returns the embedding") {
  const HModule f(FdAlgebra({2}), {2});
  const HModule g(FdAlgebra({1, 2}), {1, 1});
  const ExactSequence seq = external_direct_sum(f, g);
  const SplittingData split = construct_splitting(seq);

  CHECK(split.verified);
  Mat expect = Mat::Zero(seq.total().dim(), f.dim());
  expect.topRows(f.dim()) = Mat::Identity(f.dim(), f.dim());
  CHECK(testutil::approx_eq(split.s.mat, expect, 1e-12));
}

TEST_CASE("conjugated sequences still split within tolerance") {
  Rng rng(0x5eedu);
  const FdAlgebra b({2, 1});
  const HModule e(b, {2, 1});
  const HModule g(b, {0, 1});
  const HModule f(FdAlgebra({2}), {2});
  Mat vmat = Mat::Zero(e.dim(), g.dim());
  vmat(4, 0) = 1.0;
  Mat umat = Mat::Zero(f.dim(), e.dim());
  umat.leftCols(4) = Mat::Identity(4, 4);
  const ExactSequence seq{make_ternary_hom(g, e, vmat), make_ternary_hom(e, f, umat)};
  REQUIRE(verify_short_exact(seq).ok());

  const Mat w = block_rotation(rng, e);
  const ExactSequence rotated = conjugate_sequence(seq, w);
  REQUIRE(rotated.v.verified);
  REQUIRE(rotated.u.verified);
  CHECK(verify_short_exact(rotated).ok());

  const SplittingData split = construct_splitting(rotated);
  CHECK(split.complement_is_ideal);
  CHECK(split.verified);
  CHECK(split.section_residual <= 1e-9);

  const BusbyWitness busby = busby_trivial_witness(rotated);
  CHECK(busby.verified);
  CHECK(busby.maps_correspond);
  CHECK(busby.base_splits);
  CHECK(busby.residual <= 1e-9);
}

TEST_CASE("busby witness identifies the total module with the direct sum") {
  const ExactSequence seq = two_block_sequence();
  const BusbyWitness busby = busby_trivial_witness(seq);

  CHECK(busby.verified);
  CHECK(busby.w.verified);
  CHECK(busby.maps_correspond);
  CHECK(busby.base_splits);
  CHECK(busby.residual <= 1e-12);

  // the sum lives over the concatenated bases and matches E in size
  std::vector<Index> expect = block_dims(seq.quot().base());
  const std::vector<Index> gb = block_dims(seq.sub().base());
  expect.insert(expect.end(), gb.begin(), gb.end());
  CHECK(block_dims(busby.sum.total().base()) == expect);
  CHECK(busby.sum.total().dim() == seq.total().dim());
  CHECK(testutil::oracle_rank(busby.w.mat, 1e-9) == seq.total().dim());
}

TEST_CASE("sequences with a zero submodule are exact and split") {
  const FdAlgebra b({2, 1});
  const HModule e(b, {1, 1});
  const HModule g(b, {0, 0});
  const Mat vmat(e.dim(), 0);
  const ExactSequence seq{make_ternary_hom(g, e, vmat), identity_hom(e)};

  const SequenceReport rep = verify_short_exact(seq);
  CHECK(rep.ok());

  const BlockwiseSequence bs = to_blockwise_extension(seq);
  CHECK(bs.ok());
  CHECK(bs.big_v.assembled.source.dim() == 0);

  const DiagonalExtensions d = diagonal_extensions(seq);
  CHECK(d.base_exact);
  CHECK(d.compacts_exact);

  const SplittingData split = construct_splitting(seq);
  CHECK(split.verified);
  CHECK(testutil::approx_eq(Mat(seq.u.mat * split.s.mat),
                            Mat(Mat::Identity(e.dim(), e.dim())), 1e-12));
}

TEST_CASE("broken sequences are reported and refused downstream") {
  const ExactSequence good = two_block_sequence();

  // zero u onto a nonzero quotient: not surjective
  ExactSequence no_u = good;
  no_u.u = make_ternary_hom(good.total(), good.quot(), Mat::Zero(2, 3));
  const SequenceReport r1 = verify_short_exact(no_u);
  CHECK_FALSE(r1.surjective);
  CHECK_FALSE(r1.ok());
  CHECK_THROWS_AS(to_blockwise_extension(no_u), structural_error);
  CHECK_THROWS_AS(construct_splitting(no_u), structural_error);

  // zero v from a nonzero submodule: not injective
  ExactSequence no_v = good;
  no_v.v = make_ternary_hom(good.sub(), good.total(), Mat::Zero(3, 1));
  CHECK_FALSE(verify_short_exact(no_v).injective);

  // image strictly smaller than the kernel: gap with witness
  const FdAlgebra b3({1, 1, 1});
  const HModule e3(b3, {1, 1, 1});
  const HModule g3(b3, {1, 0, 0});
  const HModule f3(FdAlgebra({1}), {1});
  Mat v3 = Mat::Zero(3, 1);
  v3(0, 0) = 1.0;
  Mat u3 = Mat::Zero(1, 3);
  u3(0, 2) = 1.0;
  const ExactSequence gap{make_ternary_hom(g3, e3, v3), make_ternary_hom(e3, f3, u3)};
  const SequenceReport r3 = verify_short_exact(gap);
  CHECK(r3.injective);
  CHECK(r3.surjective);
  CHECK_FALSE(r3.exact_middle);
  REQUIRE(r3.witness.has_value());
  // the witness lives in the kernel but escapes the image
  const Subspace image = span(Ambient(e3), gap.v.mat);
  CHECK((gap.u.mat * *r3.witness).norm() <= 1e-12);
  CHECK_FALSE(image.contains(*r3.witness).contained);

  // maps that do not compose are refused outright
  ExactSequence mismatched = good;
  mismatched.u = identity_hom(gap.total());
  CHECK_THROWS_AS(verify_short_exact(mismatched), structural_error);
}

TEST_CASE("random conjugated sums split with small residuals") {
  Rng rng(0xd1465u);
  for (int trial = 0; trial < 10; ++trial) {
    const FdAlgebra cb = testutil::random_algebra(rng, 2, 2);
    const FdAlgebra ab = testutil::random_algebra(rng, 2, 2);
    const HModule f = testutil::random_module(rng, cb, 2);
    const HModule g = testutil::random_module(rng, ab, 2);
    const ExactSequence plain = external_direct_sum(f, g);
    const Mat w = block_rotation(rng, plain.total());
    const ExactSequence seq = conjugate_sequence(plain, w);

    REQUIRE(verify_short_exact(seq).ok());
    const SplittingData split = construct_splitting(seq);
    CHECK(split.verified);
    CHECK(split.section_residual <= 1e-8);
    const BusbyWitness busby = busby_trivial_witness(seq);
    CHECK(busby.verified);
    CHECK(busby.residual <= 1e-8);
  }
}
