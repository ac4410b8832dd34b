#pragma once

#include "trolink/quotient.hpp"

namespace trolink {

/// Short sequence of ternary homomorphisms 0 -> G -v-> E -u-> F -> 0.
/// The constituent modules are carried by the maps themselves.
struct ExactSequence {
  TernaryHom v;  // G -> E
  TernaryHom u;  // E -> F

  const HModule& sub() const { return v.source; }
  const HModule& total() const { return u.source; }
  const HModule& quot() const { return u.target; }
};

struct SequenceReport {
  bool maps_verified = false;  // both maps carry a ternary verification
  bool injective = false;      // rank v = dim G
  bool surjective = false;     // rank u = dim F
  bool exact_middle = false;   // image v = kernel u
  double exactness_gap = 0.0;
  std::optional<Vec> witness;  // vector of E separating image from kernel

  bool ok() const { return maps_verified && injective && surjective && exact_middle; }
};

/// Rank-based exactness check; on a gap in the middle the witness is the
/// worst basis vector of one subspace escaping the other.
SequenceReport verify_short_exact(const ExactSequence& seq, double tol = kDefaultTol);

/// The same sequence one level up: both maps extended to homomorphisms of
/// the reduced linking algebras.
struct BlockwiseSequence {
  BlockwiseHom big_v;  // L(G) -> L(E)
  BlockwiseHom big_u;  // L(E) -> L(F)
  bool injective = false;
  bool surjective = false;
  bool exact_middle = false;
  bool corners_restrict = false;  // module corners reproduce u and v exactly
  double corner_gap = 0.0;

  bool ok() const {
    return big_v.verified && big_u.verified && injective && surjective && exact_middle &&
           corners_restrict;
  }
};

/// Extends both maps of a verified sequence to the reduced linking algebras
/// and checks that the extended sequence is short exact and restricts back
/// to the original maps on the module corners.
BlockwiseSequence to_blockwise_extension(const ExactSequence& seq, double tol = kDefaultTol);

/// The two corner sequences every module extension drags along: the base
/// corners A_G -> B_E -> C_F and the compacts corners K(G) -> K(E) -> K(F).
struct DiagonalExtensions {
  AlgHom base_v, base_u;
  AlgHom compacts_v, compacts_u;
  bool base_exact = false;
  bool compacts_exact = false;
};

DiagonalExtensions diagonal_extensions(const ExactSequence& seq, double tol = kDefaultTol);

/// F + G over C + A by block-list concatenation, with the canonical
/// embedding of G and projection onto F; verifies as exact and split.
ExactSequence external_direct_sum(const HModule& f, const HModule& g, double tol = kDefaultTol);

/// A right inverse of u built from the orthogonal complement of vG, whose
/// ternary-ideal status is verified rather than assumed.
struct SplittingData {
  Subspace complement;  // orthogonal complement of vG inside E
  bool complement_is_ideal = false;
  TernaryHom s;              // F -> E with u(s(x)) = x
  double section_residual;   // worst unit-column defect of u after s
  bool verified = false;
};

/// In finite dimension every verified extension splits: u restricted to the
/// complement of vG is a bijection onto F and s is its inverse.  A rank
/// defect here would falsify the verified exactness and raises
/// verification_error.
SplittingData construct_splitting(const ExactSequence& seq, double tol = kDefaultTol);

/// The isomorphism E = F + G making the extension an external direct sum.
struct BusbyWitness {
  ExactSequence sum;  // the external direct sum with its canonical maps
  TernaryHom w;       // F + G -> E, bijective
  bool maps_correspond = false;  // w maps canonical v to v, and u after w is canonical u
  bool base_splits = false;      // range of E = range of vG + range of complement
  double residual = 0.0;
  bool verified = false;
};

/// Assembles w = [s | v] and verifies that under it the canonical maps of
/// the external sum become u and v, and that the range ideal of E splits
/// into the ranges of the two summands at block level.
BusbyWitness busby_trivial_witness(const ExactSequence& seq, double tol = kDefaultTol);

}  // namespace trolink
