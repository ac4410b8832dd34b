#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "testutil.hpp"
#include "trolink/ideals.hpp"

using namespace trolink;

namespace {

/// One generator over C + C with multiplicities (2,2): closed under the
/// action but not under ternary products.
struct OneGeneratorFixture {
  HModule e;
  Subspace k;

  OneGeneratorFixture() : e(FdAlgebra({1, 1}), {2, 2}), k(make_k(e)) {}

  static Subspace make_k(const HModule& e) {
    ModElement g = ModElement::zero(e);
    g.block(0)(0, 0) = 1.0;
    return span(Ambient(e), g.flatten());
  }
};

Subspace coordinate_submodule(const HModule& e, std::vector<char> mask) {
  return module_block_subspace(e, mask, kDefaultTol);
}

}  // namespace

TEST_CASE("submodule closed under action but not ternary products") {
  OneGeneratorFixture fx;
  REQUIRE(fx.k.dim() == 1);

  const ActionClosure sub = is_submodule(fx.k);
  CHECK(sub.holds);
  CHECK(sub.escape <= kDefaultTol);

  const TernaryIdealResult tern = is_ternary_ideal(fx.k);
  CHECK_FALSE(tern.holds);
  CHECK(tern.escape > 1e-3);

  REQUIRE(tern.witness.has_value());
  const TernaryEscape& w = *tern.witness;
  CHECK(w.residual > 1e-3);

  // recompute the witness product through the module operations
  const ModElement x = ModElement::from_flat(fx.e, Vec(Vec::Unit(fx.e.dim(), w.x_unit)));
  const ModElement kb = ModElement::from_flat(fx.e, fx.k.onb().col(w.k_basis));
  const ModElement y = ModElement::from_flat(fx.e, Vec(Vec::Unit(fx.e.dim(), w.y_unit)));
  const ModElement prod = act(x, inner(kb, y));
  CHECK(testutil::approx_eq(prod.flatten(), w.escaped, 1e-12));
  CHECK_FALSE(fx.k.contains(prod.flatten()).contained);

  // the escape direction is the second row of block 0
  const ModElement esc = ModElement::from_flat(fx.e, w.escaped);
  CHECK(std::abs(esc.block(0)(1, 0)) > 1e-3);
  CHECK(std::abs(esc.block(0)(0, 0)) <= 1e-12);
  CHECK(esc.block(1).norm() <= 1e-12);
}

TEST_CASE("submodule fixture fails the other two notions the same way") {
  OneGeneratorFixture fx;

  const LinkingIdealResult link = is_linking_ideal(fx.k);
  CHECK_FALSE(link.holds);
  CHECK(link.escape > 1e-3);

  const IdealSubmoduleResult rep = as_ideal_submodule(fx.k);
  CHECK_FALSE(rep.ok());
  // span<K,E> is the first summand of the base, a genuine ideal ...
  REQUIRE(rep.candidate.has_value());
  CHECK(rep.candidate->blocks() == std::vector<Index>{0});
  // ... but it generates the full first coordinate submodule, not K
  CHECK(rep.match_residual > 1e-3);

  const IdealClassification c = classify(fx.k);
  CHECK(c.is_submodule);
  CHECK(c.is_ternary_subspace);
  CHECK_FALSE(c.is_ternary_ideal);
  CHECK_FALSE(c.is_linking_ideal);
  CHECK_FALSE(c.is_ideal());
  CHECK_FALSE(c.ideal_submodule.has_value());
  CHECK(c.minimal_ideal.has_value());
  CHECK(c.ternary_witness.has_value());
}

TEST_CASE("one-sided absorption splits for a column submodule of M2") {
  // E = M2 over itself, K = all matrices with second column zero
  const FdAlgebra b({2});
  const HModule e(b, {2});
  Mat gens(4, 2);
  gens.col(0) = Vec::Unit(4, e.coord(0, 0, 0));
  gens.col(1) = Vec::Unit(4, e.coord(0, 1, 0));
  const Subspace k = span(Ambient(e), gens);
  REQUIRE(k.dim() == 2);

  const OneSidedReport r = one_sided_conditions(k);
  CHECK(r.left_products);        // E<E,K> stays in K
  CHECK_FALSE(r.right_products); // K<E,E> escapes
  CHECK(r.right_escape > 1e-3);
  CHECK_FALSE(r.ternary_ideal);
  CHECK(r.equivalence_holds);

  // closure under right products is exactly closure under the action here
  CHECK(r.right_products == is_submodule(k).holds);

  const IdealClassification c = classify(k);
  CHECK_FALSE(c.is_submodule);
  CHECK(c.is_ternary_subspace);  // K<K,K> collapses into the first column
  CHECK_FALSE(c.is_ideal());
}

TEST_CASE("coordinate submodules from base ideals pass every notion") {
  Rng rng(0x1dea15u);
  for (int trial = 0; trial < 20; ++trial) {
    const FdAlgebra b = testutil::random_algebra(rng, 3, 3);
    const HModule e = testutil::random_module(rng, b, 3);
    std::vector<char> mask(static_cast<size_t>(b.block_count()), 0);
    for (Index k = 0; k < b.block_count(); ++k)
      mask[static_cast<size_t>(k)] = rng.uniform01() < 0.5 ? 1 : 0;
    const BlockIdeal ideal(b, mask);

    const Subspace full = Subspace::full(Ambient(e));
    const Subspace k = product_span(ProductKind::action, full, ideal_subspace(ideal));

    const IdealClassification c = classify(k);
    CHECK(c.is_submodule);
    CHECK(c.is_ternary_subspace);
    CHECK(c.is_ternary_ideal);
    CHECK(c.is_linking_ideal);
    CHECK(c.is_ideal());
    CHECK(c.one_sided.left_products);
    CHECK(c.one_sided.right_products);

    // the recovered ideal is the input trimmed to the present blocks
    REQUIRE(c.ideal_submodule.has_value());
    std::vector<char> expect(static_cast<size_t>(b.block_count()), 0);
    for (Index bk = 0; bk < b.block_count(); ++bk)
      expect[static_cast<size_t>(bk)] =
          (mask[static_cast<size_t>(bk)] && e.mult(bk) > 0) ? 1 : 0;
    CHECK(*c.ideal_submodule == BlockIdeal(b, expect));
    CHECK(c.minimal_ideal == c.ideal_submodule);

    // and K itself is the coordinate submodule over those blocks
    CHECK(k.same_space(coordinate_submodule(e, expect)));
  }
}

TEST_CASE("random spans classify consistently as non-ideals") {
  Rng rng(0xbadc0deu);
  int nontrivial = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const FdAlgebra b = testutil::random_algebra(rng, 3, 3);
    const HModule e = testutil::random_module(rng, b, 3);
    if (e.dim() < 2) continue;
    Mat gens(e.dim(), 2);
    gens.col(0) = testutil::random_mod_element(rng, e).flatten();
    gens.col(1) = testutil::random_mod_element(rng, e).flatten();
    const Subspace k = span(Ambient(e), gens);
    if (k.dim() == 0 || k.dim() == e.dim()) continue;

    // classify must not throw: all three notions agree on failure too
    const IdealClassification c = classify(k);
    if (!c.is_ideal()) {
      ++nontrivial;
      CHECK_FALSE(c.is_linking_ideal);
      CHECK_FALSE(c.ideal_submodule.has_value());
      CHECK(c.one_sided.equivalence_holds);
    }
  }
  CHECK(nontrivial >= 10);
}

TEST_CASE("zero and full subspaces are ideals with the extreme block sets") {
  Rng rng(0x2026u);
  const FdAlgebra b = testutil::random_algebra(rng, 3, 3);
  const HModule e = testutil::random_module(rng, b, 3, /*allow_zero=*/false);

  const IdealClassification z = classify(Subspace::zero(Ambient(e)));
  CHECK(z.is_ideal());
  REQUIRE(z.ideal_submodule.has_value());
  CHECK(z.ideal_submodule->blocks().empty());

  const IdealClassification f = classify(Subspace::full(Ambient(e)));
  CHECK(f.is_ideal());
  REQUIRE(f.ideal_submodule.has_value());
  CHECK(f.ideal_submodule->blocks() == e.active_blocks());
}

TEST_CASE("linking ideal check reports the carrier block form") {
  const FdAlgebra b({1, 1});
  const HModule e(b, {2, 1});
  // K = everything over the first summand
  const Subspace k = coordinate_submodule(e, {1, 0});

  const LinkingIdealResult r = is_linking_ideal(k);
  CHECK(r.holds);
  CHECK(r.escape <= kDefaultTol);
  // corner space [[<K,K>, K*], [K, KK*]] fills the whole 3x3 first block
  CHECK(r.corner_space.dim() == 9);
  REQUIRE(r.carrier_ideal.has_value());
  CHECK(r.carrier_ideal->blocks() == std::vector<Index>{0});
}

TEST_CASE("module block masks recover coordinate submodules only") {
  const FdAlgebra b({2, 1});
  const HModule e(b, {1, 2});

  const Subspace k0 = coordinate_submodule(e, {1, 0});
  auto m0 = as_module_block_mask(k0);
  REQUIRE(m0.has_value());
  CHECK(*m0 == std::vector<char>{1, 0});

  auto mfull = as_module_block_mask(Subspace::full(Ambient(e)));
  REQUIRE(mfull.has_value());
  CHECK(*mfull == std::vector<char>{1, 1});

  auto mzero = as_module_block_mask(Subspace::zero(Ambient(e)));
  REQUIRE(mzero.has_value());
  CHECK(*mzero == std::vector<char>{0, 0});

  // a strict subspace of a block is not a coordinate submodule
  Mat g(e.dim(), 1);
  g = Mat::Zero(e.dim(), 1);
  g(e.coord(0, 0, 0), 0) = 1.0;
  CHECK_FALSE(as_module_block_mask(span(Ambient(e), g)).has_value());

  // mixing two blocks in one generator breaks the mask as well
  Mat h = Mat::Zero(e.dim(), 1);
  h(e.coord(0, 0, 0), 0) = 1.0;
  h(e.coord(1, 0, 0), 0) = 1.0;
  CHECK_FALSE(as_module_block_mask(span(Ambient(e), h)).has_value());
}

TEST_CASE("correspondence table over a full module hits every ideal") {
  const FdAlgebra b({2, 1});
  const HModule e(b, {1, 1});

  const CorrespondenceTable t = ideal_correspondences(e);
  REQUIRE(t.rows.size() == 4);
  CHECK(t.all_exact);
  for (const CorrespondenceRow& row : t.rows) {
    CHECK(row.ideal_to_module_exact);
    CHECK(row.module_to_ideal_exact);
    CHECK(row.module_to_compacts_exact);
    CHECK(row.compacts_to_module_exact);
    CHECK(row.corner_projections_exact);
  }

  // every subset of blocks appears exactly once
  std::vector<std::vector<Index>> seen;
  for (const CorrespondenceRow& row : t.rows) seen.push_back(row.blocks);
  std::sort(seen.begin(), seen.end());
  const std::vector<std::vector<Index>> expect{{}, {0}, {0, 1}, {1}};
  CHECK(seen == expect);
}

TEST_CASE("correspondence table skips absent blocks") {
  const FdAlgebra b({2, 1});
  const HModule e(b, {1, 0});

  const CorrespondenceTable t = ideal_correspondences(e);
  REQUIRE(t.rows.size() == 2);
  CHECK(t.all_exact);
  CHECK((t.rows[0].blocks.empty() || t.rows[1].blocks.empty()));
  for (const CorrespondenceRow& row : t.rows)
    if (!row.blocks.empty()) CHECK(row.blocks == std::vector<Index>{0});
}

TEST_CASE("correspondence table of the zero module has one trivial row") {
  const FdAlgebra b({2});
  const HModule e(b, {0});

  const CorrespondenceTable t = ideal_correspondences(e);
  REQUIRE(t.rows.size() == 1);
  CHECK(t.all_exact);
  CHECK(t.rows[0].blocks.empty());
}

TEST_CASE("correspondence table over a larger random-shape module") {
  const FdAlgebra b({2, 1, 3});
  const HModule e(b, {2, 1, 1});

  const CorrespondenceTable t = ideal_correspondences(e);
  REQUIRE(t.rows.size() == 8);
  CHECK(t.all_exact);
}
