#include <cmath>
#include <random>

#include <doctest.h>

#include "borsem/signatures.hpp"

using namespace borsem;

TEST_CASE("normalization scales, pairs conjugates, and drops growth") {
  const std::vector<ResidueTerm> terms = {{{-1.0, 2.0}, {1.0, 0.0}},
                                          {{-1.0, -2.0}, {1.0, 0.0}},
                                          {{-3.0, 0.0}, {0.5, 0.0}},
                                          {{0.2, 4.0}, {0.1, 0.0}}};
  int dropped = 0;
  const auto poles = normalize(terms, 2.0, 4.0, &dropped);
  CHECK(dropped == 1);
  REQUIRE(poles.size() == 2);
  // sorted by increasing Im: the real pole first
  CHECK(poles[0].value.real() == doctest::Approx(-1.5));
  CHECK(poles[0].value.imag() == doctest::Approx(0.0));
  CHECK(poles[0].support == 1);
  CHECK(poles[1].value.real() == doctest::Approx(-0.5));
  CHECK(poles[1].value.imag() == doctest::Approx(1.0));
  CHECK(poles[1].support == 2);
  CHECK_THROWS_AS((void)normalize(terms, 0.0, 1.0, nullptr), ValidationError);
}

TEST_CASE("identical runs average to themselves with zero spread") {
  const std::vector<NormalizedPole> one = {{{-0.4, 1.2}, {0.0, 0.0}, 1},
                                           {{-0.9, 2.8}, {0.0, 0.0}, 1}};
  const auto avg = cluster_and_average({one, one, one});
  REQUIRE(avg.size() == 2);
  for (size_t i = 0; i < 2; ++i) {
    CHECK(std::abs(avg[i].value - one[i].value) < 1e-14);
    CHECK(avg[i].spread.real() == doctest::Approx(0.0));
    CHECK(avg[i].spread.imag() == doctest::Approx(0.0));
    CHECK(avg[i].support == 3);
  }
}

TEST_CASE("a symmetric perturbation averages to the midpoint with spread epsilon") {
  const Real eps = 0.05;
  const std::vector<NormalizedPole> lo = {{{-0.5 - eps, 1.0}, {0.0, 0.0}, 1}};
  const std::vector<NormalizedPole> hi = {{{-0.5 + eps, 1.0}, {0.0, 0.0}, 1}};
  const auto avg = cluster_and_average({lo, hi}, 0.25, 0.5);
  REQUIRE(avg.size() == 1);
  CHECK(avg[0].value.real() == doctest::Approx(-0.5));
  CHECK(avg[0].value.imag() == doctest::Approx(1.0));
  CHECK(avg[0].spread.real() == doctest::Approx(eps));
  CHECK(avg[0].spread.imag() == doctest::Approx(0.0));
}

TEST_CASE("poorly supported clusters are dropped as artifacts") {
  const std::vector<NormalizedPole> common = {{{-0.4, 1.0}, {0.0, 0.0}, 1}};
  std::vector<NormalizedPole> with_junk = common;
  with_junk.push_back({{-2.0, 5.0}, {0.0, 0.0}, 1});
  const auto avg = cluster_and_average({common, common, common, with_junk}, 0.25, 0.5);
  REQUIRE(avg.size() == 1);
  CHECK(avg[0].value.imag() == doctest::Approx(1.0));
}

TEST_CASE("signature distance is a symmetric premetric on pole lists") {
  PoleSignature s1{"a", 0, {{{-0.3, 0.6}, {0.0, 0.0}, 1}, {{-0.6, 1.9}, {0.0, 0.0}, 1}}};
  PoleSignature s2{"b", 0, {{{-0.25, 0.7}, {0.0, 0.0}, 1}, {{-0.7, 1.8}, {0.0, 0.0}, 1}}};
  CHECK(signature_distance(s1, s1) == doctest::Approx(0.0));
  CHECK(signature_distance(s1, s2) == doctest::Approx(signature_distance(s2, s1)));
  CHECK(signature_distance(s1, s2) > 0.0);

  // an unmatched pole costs the fixed penalty
  PoleSignature s3 = s1;
  s3.poles.push_back({{-1.0, 4.0}, {0.0, 0.0}, 1});
  DistanceWeights w;
  CHECK(signature_distance(s1, s3) == doctest::Approx(w.unmatched_penalty));
}

TEST_CASE("imaginary ablation removes those components from the distance") {
  PoleSignature q{"q", 0, {{{-0.3, 0.6}, {0.0, 0.0}, 1}, {{-0.6, 1.9}, {0.0, 0.0}, 1}}};
  PoleSignature r = q;
  r.poles[1].value = {-0.6, 2.4}; // differs only in the second Im
  DistanceWeights w;
  CHECK(signature_distance(q, r, w) > 0.0);
  w.ablate_im = {1};
  CHECK(signature_distance(q, r, w) == doctest::Approx(0.0));
}

TEST_CASE("the bundled reference table has the published shape and entries") {
  const SignatureLibrary& lib = reference_library();
  CHECK(lib.entries.size() == 15); // 3 bodies x (m = 0..3 + sum)
  CHECK(lib.provenance == "paper_table");
  auto find = [&](const char* body, int m) -> const PoleSignature& {
    for (const auto& e : lib.entries) {
      if (e.body_label == body && e.m == m) return e;
    }
    REQUIRE(false);
    return lib.entries.front();
  };
  const PoleSignature& cyl0 = find(kCylinderLabel, 0);
  REQUIRE(cyl0.poles.size() == 4);
  CHECK(cyl0.poles[0].value.real() == doctest::Approx(-0.27));
  CHECK(cyl0.poles[0].value.imag() == doctest::Approx(0.55));
  CHECK(cyl0.poles[1].value.real() == doctest::Approx(-1.03));
  CHECK(cyl0.poles[1].value.imag() == doctest::Approx(1.62));
  const PoleSignature& cone1 = find(kConeLabel, 1);
  REQUIRE(cone1.poles.size() == 5);
  CHECK(cone1.poles[0].value.imag() == doctest::Approx(0.65));
  const PoleSignature& tc_sum = find(kTruncatedConeLabel, kSumHarmonics);
  REQUIRE(tc_sum.poles.size() == 3);
  CHECK(tc_sum.poles[2].value.real() == doctest::Approx(-1.46));
  CHECK(tc_sum.poles[2].value.imag() == doctest::Approx(2.86));
  // every entry is sorted by increasing Im with non-positive Re
  for (const auto& e : lib.entries) {
    for (size_t i = 0; i < e.poles.size(); ++i) {
      CHECK(e.poles[i].value.real() <= 0.0);
      if (i > 0) CHECK(e.poles[i].value.imag() >= e.poles[i - 1].value.imag());
    }
  }
}

TEST_CASE("every reference signature classifies to itself at rank one") {
  const SignatureLibrary& lib = reference_library();
  for (const auto& entry : lib.entries) {
    const auto ranked = classify(entry, lib);
    REQUIRE(!ranked.empty());
    CHECK(ranked[0].body_label == entry.body_label);
    CHECK(ranked[0].m == entry.m);
    CHECK(ranked[0].distance == doctest::Approx(0.0));
    for (size_t i = 1; i < ranked.size(); ++i) CHECK(ranked[i].distance >= ranked[0].distance);
  }
}

TEST_CASE("small jitter keeps classification on the correct body") {
  const SignatureLibrary& lib = reference_library();
  std::mt19937_64 rng(3);
  std::normal_distribution<Real> jitter(0.0, 0.02);
  int correct = 0;
  int total = 0;
  for (const auto& entry : lib.entries) {
    for (int trial = 0; trial < 20; ++trial) {
      PoleSignature q = entry;
      for (auto& p : q.poles) p.value += Complex(jitter(rng), jitter(rng));
      ++total;
      if (classify(q, lib)[0].body_label == entry.body_label) ++correct;
    }
  }
  CHECK(static_cast<Real>(correct) / total > 0.97);
}
