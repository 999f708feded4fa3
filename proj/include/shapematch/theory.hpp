#pragma once

#include <cstdint>

#include "shapematch/mesh.hpp"
#include "shapematch/spectral.hpp"

namespace shapematch {

/// Result of the repeated-rows uniqueness check: brute force over all
/// partial permutations of the feature-similarity assignment problem.
struct LemmaReport {
  int minimizer_count = 0;     // maps within 1e-12 of the minimal objective
  double min_objective = 0.0;
  double runner_up_gap = 0.0;  // gap to the best non-minimizer objective
  bool duplicated_rows = false;
  bool reseeded = false;       // distinct-row control redrawn once on a tie
};

/// Builds F_X with exactly one duplicated row pair (rows 0 and 1) and an
/// F_Y whose first row equals the duplicated value, then enumerates every
/// partial permutation. The construction guarantees at least two
/// minimizers. With duplicated=false, builds the all-distinct control,
/// which has a unique minimizer for generic draws (a tied draw is
/// re-seeded once and flagged).
///
/// Requires n_y <= n_x <= 8 so the enumeration stays small.
LemmaReport check_lemma_repeated_rows(int n_x, int n_y, int c, std::uint64_t seed,
                                      bool duplicated = true);

/// Result of the solver-vs-conversion equality check on a permuted copy.
struct TheoremReport {
  double map_distance = 0.0;    // ||C - C_pi||_F
  double data_residual = 0.0;   // ||C A_X - A_Y||_F
  double min_singular_value = 0.0;
  bool passed = false;          // map_distance < 1e-8 and data_residual < 1e-10
};

/// Constructs the exact hypotheses: Y is a seeded vertex permutation of the
/// mesh (its basis is the permuted basis of X), F_X = phi_X A_X for a
/// random full-rank A_X (redrawn up to 5 times, else RankDeficientDraw),
/// F_Y the permuted copy. Solves the unregularized problem and compares
/// with the converted map.
TheoremReport check_theorem_map_equality(const TriangleMesh& mesh, int k, int c,
                                         std::uint64_t seed);

/// Same construction with span-violating noise added to F_X
/// (orthogonal-complement component of the given relative norm). The
/// resulting map distance is recorded, not asserted.
TheoremReport check_theorem_span_violated(const TriangleMesh& mesh, int k, int c,
                                          std::uint64_t seed, double noise_rel);

}  // namespace shapematch
