#pragma once

#include <array>
#include <cstdint>

#include "trolink/ideals.hpp"
#include "trolink/rng.hpp"

namespace trolink {

// Randomized probes around two questions this library cannot settle: must a
// projection onto a ternary subspace satisfying the ternary compatibility
// law be contractive, and does ternary heredity imply heredity at the
// linking-algebra level?  The checkers below evaluate each notion
// independently; the search harnesses tabulate them and assert only the
// implications that provably hold, counting everything else.

struct HereditaryCheck {
  bool ternary_subspace = false;  // F<F,F> inside F (reported, not required)
  bool holds = false;             // F<E,F> inside F
  double escape = 0.0;
};

/// F<E,F> contained in F.
HereditaryCheck is_ternary_hereditary(const Subspace& f);

struct HereditaryAlgebraCheck {
  bool subalgebra = false;  // closed under products and adjoints
  bool holds = false;       // C B C inside C
  double escape = 0.0;
};

/// C B C contained in C, for a subspace C of a block algebra.
HereditaryAlgebraCheck is_hereditary_subalgebra(const Subspace& c);

/// Embeds [[span<F,F>, F*], [F, span FF*]] into the reduced linking algebra
/// of F's parent module and checks heredity of that subalgebra.
HereditaryAlgebraCheck is_linking_hereditary(const Subspace& f);

/// Joint evaluation of every hereditary notion on one subspace.
struct HereditaryFacts {
  bool ternary_subspace = false;
  bool ternary_hereditary = false;
  bool linking_hereditary = false;
  bool base_hereditary = false;      // span<F,F> hereditary in the base
  bool compacts_hereditary = false;  // span FF* hereditary in the compacts
};

HereditaryFacts hereditary_facts(const Subspace& f);

/// The implications that provably hold for ternary subspaces:
/// linking implies ternary; either diagonal heredity implies ternary;
/// linking holds exactly when both diagonal hereditary conditions do.
/// Everything else (in particular ternary-without-linking) is tabulated by
/// the search, never asserted.
bool hereditary_implications_hold(const HereditaryFacts& h);

struct SizeBounds {
  Index max_blocks = 2;
  Index max_block_dim = 2;
  Index max_mult = 2;
};

struct HereditarySearchReport {
  std::uint64_t seed = 0;
  Index count = 0;
  Index ternary_subspaces = 0;
  Index ternary_hereditary = 0;
  Index linking_hereditary = 0;
  Index base_hereditary = 0;
  Index compacts_hereditary = 0;
  // ternary hereditary without linking hereditary: the open direction;
  // counted and listed, never asserted either way
  Index open_direction = 0;
  std::vector<Index> open_samples;
  Index implication_violations = 0;  // proved implications failing = defect
  std::vector<Index> violation_samples;
};

/// Samples random ternary subspaces — block subsets, rotated coordinate
/// corners, and ternary closures of random spans — and tabulates the
/// hereditary notions.  Sample i depends only on derive(seed, i), so the
/// report is identical for every worker count.
HereditarySearchReport hereditary_search(Index count, const SizeBounds& bounds,
                                         std::uint64_t seed, Index workers = 1);

struct ExpectationReport {
  bool idempotent = false;
  double idempotent_residual = 0.0;
  bool range_ternary = false;  // the image is closed under its triple products
  double range_escape = 0.0;
  bool ternary_condition = false;  // m(mx<y,mz>) = mx<my,mz> on unit triples
  double ternary_residual = 0.0;
  // best sampled-and-refined value of |mx|/|x| in the module norm: a lower
  // bound for the true sup, labelled an estimate by construction
  double contraction_lower_bound = 0.0;
  bool contractive_on_samples = false;  // lower bound <= 1 + 1e-6

  bool all_pass() const {
    return idempotent && range_ternary && ternary_condition && contractive_on_samples;
  }
};

/// Evaluates the conditional-expectation facts for a linear map on a
/// module: idempotence, ternary range, the ternary compatibility law, and a
/// sampled module-norm contraction estimate (deterministic in norm_seed).
ExpectationReport is_ternary_conditional_expectation(const HModule& e, const Mat& m,
                                                     double tol = kDefaultTol,
                                                     Index norm_samples = 48,
                                                     std::uint64_t norm_seed = 0x7eca11u);

struct Q1SearchReport {
  std::uint64_t seed = 0;
  Index count = 0;
  // cell index: bit 0 idempotent, bit 1 range ternary, bit 2 ternary
  // condition, bit 3 contractive on samples
  std::array<Index, 16> cells{};
  Index all_pass = 0;
};

/// Samples idempotents onto ternary subspaces (orthogonal, oblique, and
/// coordinate projections) and cross-tabulates the four expectation facts.
/// Sample i depends only on derive(seed, i).
Q1SearchReport q1_search(Index count, const SizeBounds& bounds, std::uint64_t seed,
                         Index workers = 1);

}  // namespace trolink
