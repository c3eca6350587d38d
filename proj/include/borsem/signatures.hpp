#pragma once

#include <string>
#include <vector>

#include "borsem/prony.hpp"

namespace borsem {

/// Dimensionless pole gamma*a/c, reported with Im >= 0 (the conjugate
/// partner is implicit). spread holds componentwise standard deviations over
/// an angle ensemble; support counts contributing runs (or collapsed
/// conjugate partners right after normalize).
struct NormalizedPole {
  Complex value{0.0, 0.0};
  Complex spread{0.0, 0.0};
  int support = 1;
};

inline constexpr int kSumHarmonics = -1;

/// Pole set of one (body, m) cell, ordered by increasing Im.
/// m = kSumHarmonics labels the summed-harmonics row.
struct PoleSignature {
  std::string body_label;
  int m = 0;
  std::vector<NormalizedPole> poles;
};

struct SignatureLibrary {
  std::vector<PoleSignature> entries;
  std::string provenance;
};

/// Scales poles to gamma*a/c, collapses conjugate pairs to the Im >= 0
/// representative, and drops growing (Re > 0) poles. dropped_growing, when
/// given, receives the number of dropped poles for the caller's log.
[[nodiscard]] std::vector<NormalizedPole> normalize(const std::vector<ResidueTerm>& terms, Real a,
                                                    Real c, int* dropped_growing = nullptr);

/// Greedy agglomerative clustering of per-run pole sets in the complex
/// plane. Clusters supported by fewer than min_support_fraction of the runs
/// are dropped as artifacts.
[[nodiscard]] std::vector<NormalizedPole> cluster_and_average(
    const std::vector<std::vector<NormalizedPole>>& runs, Real radius = 0.25,
    Real min_support_fraction = 0.5);

struct DistanceWeights {
  Real re = 1.0;
  Real im = 4.0;
  Real unmatched_penalty = 1.0;
  std::vector<int> ablate_im;  // pole indices whose Im contribution is zeroed
};

/// Order-preserving one-to-one matching of the two Im-sorted pole lists,
/// weighted per component; unmatched poles incur a fixed penalty. Symmetric,
/// zero on identical signatures.
[[nodiscard]] Real signature_distance(const PoleSignature& s1, const PoleSignature& s2,
                                      const DistanceWeights& weights = {});

struct RankedMatch {
  std::string body_label;
  int m = 0;
  Real distance = 0.0;
};

/// Ranks every library entry by distance to the query, ascending; ties break
/// by label then m.
[[nodiscard]] std::vector<RankedMatch> classify(const PoleSignature& query,
                                                const SignatureLibrary& lib,
                                                const DistanceWeights& weights = {});

/// Reference eigenfrequency table for the three bodies (m = 0..3 plus the
/// summed-harmonics row), in gamma*a/c units.
[[nodiscard]] const SignatureLibrary& reference_library();

inline constexpr const char* kConeLabel = "cone";
inline constexpr const char* kTruncatedConeLabel = "truncated_cone";
inline constexpr const char* kCylinderLabel = "cylinder";

} // namespace borsem
