#include "borsem/signatures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace borsem {

namespace {

bool im_less(const NormalizedPole& a, const NormalizedPole& b) {
  if (a.value.imag() != b.value.imag()) return a.value.imag() < b.value.imag();
  return a.value.real() < b.value.real();
}

} // namespace

std::vector<NormalizedPole> normalize(const std::vector<ResidueTerm>& terms, Real a, Real c,
                                      int* dropped_growing) {
  require(a > 0.0, "normalize: a must be positive");
  require(c > 0.0, "normalize: c must be positive");

  int dropped = 0;
  std::vector<Complex> scaled;
  for (const auto& term : terms) {
    const Complex g = term.gamma * (a / c);
    if (g.real() > 0.0) {
      ++dropped;
      continue;
    }
    scaled.push_back(g);
  }
  if (dropped_growing) *dropped_growing = dropped;

  std::vector<NormalizedPole> out;
  std::vector<bool> used(scaled.size(), false);
  for (size_t i = 0; i < scaled.size(); ++i) {
    if (used[i]) continue;
    used[i] = true;
    NormalizedPole p;
    p.value = scaled[i];
    const Real tol = 1e-9 * (std::abs(scaled[i]) + 1.0);
    for (size_t j = i + 1; j < scaled.size(); ++j) {
      if (used[j]) continue;
      if (std::abs(std::conj(scaled[i]) - scaled[j]) <= tol) {
        used[j] = true;
        p.support = 2;
        break;
      }
    }
    if (p.value.imag() < 0.0) p.value = std::conj(p.value);
    out.push_back(p);
  }
  std::sort(out.begin(), out.end(), im_less);
  return out;
}

std::vector<NormalizedPole> cluster_and_average(const std::vector<std::vector<NormalizedPole>>& runs,
                                                Real radius, Real min_support_fraction) {
  require(!runs.empty(), "cluster_and_average: need at least one run");
  require(radius > 0.0, "cluster_and_average: radius must be positive");

  struct Tagged {
    Complex value;
    int run = 0;
  };
  std::vector<Tagged> pool;
  for (size_t r = 0; r < runs.size(); ++r)
    for (const auto& p : runs[r]) pool.push_back({p.value, static_cast<int>(r)});
  if (pool.empty()) return {};

  std::sort(pool.begin(), pool.end(), [](const Tagged& a, const Tagged& b) {
    if (a.value.imag() != b.value.imag()) return a.value.imag() < b.value.imag();
    if (a.value.real() != b.value.real()) return a.value.real() < b.value.real();
    return a.run < b.run;
  });

  struct Cluster {
    std::vector<Tagged> members;
    Complex mean{0.0, 0.0};
  };
  std::vector<Cluster> clusters;
  for (const auto& t : pool) {
    Cluster* best = nullptr;
    Real best_dist = radius;
    for (auto& c : clusters) {
      const Real d = std::abs(t.value - c.mean);
      if (d <= best_dist) {
        best_dist = d;
        best = &c;
      }
    }
    if (best) {
      best->members.push_back(t);
      Complex sum(0.0, 0.0);
      for (const auto& mbr : best->members) sum += mbr.value;
      best->mean = sum / static_cast<Real>(best->members.size());
    } else {
      clusters.push_back({{t}, t.value});
    }
  }

  const Real min_support = min_support_fraction * static_cast<Real>(runs.size()) - 1e-9;
  std::vector<NormalizedPole> out;
  for (const auto& c : clusters) {
    std::vector<int> distinct;
    for (const auto& mbr : c.members) distinct.push_back(mbr.run);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    const int support = static_cast<int>(distinct.size());
    if (static_cast<Real>(support) < min_support) continue;

    const Real n = static_cast<Real>(c.members.size());
    Real var_re = 0.0;
    Real var_im = 0.0;
    for (const auto& mbr : c.members) {
      var_re += std::pow(mbr.value.real() - c.mean.real(), 2);
      var_im += std::pow(mbr.value.imag() - c.mean.imag(), 2);
    }
    NormalizedPole p;
    p.value = c.mean;
    p.spread = Complex(std::sqrt(var_re / n), std::sqrt(var_im / n));
    p.support = support;
    out.push_back(p);
  }
  std::sort(out.begin(), out.end(), im_less);
  return out;
}

Real signature_distance(const PoleSignature& s1, const PoleSignature& s2,
                        const DistanceWeights& weights) {
  require(!s1.poles.empty() && !s2.poles.empty(), "signature_distance: empty signature");

  const auto& p1 = s1.poles;
  const auto& p2 = s2.poles;
  const size_t n1 = p1.size();
  const size_t n2 = p2.size();
  const Real wsum = weights.re + weights.im;
  require(wsum > 0.0, "signature_distance: weights must not both be zero");

  const auto ablated = [&](size_t idx) {
    return std::find(weights.ablate_im.begin(), weights.ablate_im.end(), static_cast<int>(idx)) !=
           weights.ablate_im.end();
  };
  const auto cost = [&](size_t i, size_t j) {
    const Real dre = std::abs(p1[i].value.real() - p2[j].value.real());
    const Real dim = std::abs(p1[i].value.imag() - p2[j].value.imag());
    const Real w_im = (ablated(i) || ablated(j)) ? 0.0 : weights.im;
    return (weights.re * dre + w_im * dim) / wsum;
  };

  // Order-preserving matching over the two Im-sorted lists: each pole is
  // matched to at most one partner or skipped at a fixed penalty.
  const Real pen = weights.unmatched_penalty;
  Eigen::MatrixXd dp(n1 + 1, n2 + 1);
  for (size_t i = 0; i <= n1; ++i) dp(i, 0) = static_cast<Real>(i) * pen;
  for (size_t j = 0; j <= n2; ++j) dp(0, j) = static_cast<Real>(j) * pen;
  for (size_t i = 1; i <= n1; ++i) {
    for (size_t j = 1; j <= n2; ++j) {
      dp(i, j) = std::min({dp(i - 1, j - 1) + cost(i - 1, j - 1), dp(i - 1, j) + pen, dp(i, j - 1) + pen});
    }
  }
  return dp(n1, n2) / static_cast<Real>(std::max(n1, n2));
}

std::vector<RankedMatch> classify(const PoleSignature& query, const SignatureLibrary& lib,
                                  const DistanceWeights& weights) {
  require(!lib.entries.empty(), "classify: library is empty");
  std::vector<RankedMatch> ranked;
  for (const auto& entry : lib.entries) {
    ranked.push_back({entry.body_label, entry.m, signature_distance(query, entry, weights)});
  }
  std::sort(ranked.begin(), ranked.end(), [](const RankedMatch& a, const RankedMatch& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    if (a.body_label != b.body_label) return a.body_label < b.body_label;
    return a.m < b.m;
  });
  return ranked;
}

namespace {

PoleSignature make_entry(const char* label, int m, std::initializer_list<Complex> poles) {
  PoleSignature s;
  s.body_label = label;
  s.m = m;
  for (const Complex& v : poles) s.poles.push_back({v, {0.0, 0.0}, 1});
  return s;
}

SignatureLibrary build_reference_library() {
  SignatureLibrary lib;
  lib.provenance = "paper_table";
  lib.entries = {
      make_entry(kConeLabel, 0, {{-0.33, 0.62}, {-0.62, 1.93}, {-0.67, 4.22}, {-0.53, 7.11}}),
      make_entry(kConeLabel, 1,
                 {{-0.76, 0.65}, {-0.93, 1.04}, {-0.80, 2.09}, {-1.51, 3.36}, {-1.47, 6.75}}),
      make_entry(kConeLabel, 2, {{-0.75, 2.30}, {-0.81, 3.88}}),
      make_entry(kConeLabel, 3, {{-0.83, 3.91}}),
      make_entry(kConeLabel, kSumHarmonics, {{-0.40, 0.58}, {-0.77, 2.61}, {-0.94, 4.17}}),
      make_entry(kTruncatedConeLabel, 0,
                 {{-0.36, 0.77}, {-0.78, 1.62}, {-1.06, 2.67}, {-0.84, 3.97}}),
      make_entry(kTruncatedConeLabel, 1,
                 {{-0.81, 0.88}, {-0.66, 1.78}, {-0.16, 2.90}, {-0.62, 3.93}}),
      make_entry(kTruncatedConeLabel, 2, {{-1.18, 2.48}}),
      make_entry(kTruncatedConeLabel, 3, {{-1.21, 3.47}}),
      make_entry(kTruncatedConeLabel, kSumHarmonics,
                 {{-0.29, 0.77}, {-0.65, 1.65}, {-1.46, 2.86}}),
      make_entry(kCylinderLabel, 0, {{-0.27, 0.55}, {-1.03, 1.62}, {-1.05, 3.54}, {-0.92, 5.51}}),
      make_entry(kCylinderLabel, 1, {{-0.72, 1.00}, {-0.46, 1.93}, {-1.23, 3.97}, {-1.14, 6.69}}),
      make_entry(kCylinderLabel, 2, {{-0.91, 2.48}}),
      make_entry(kCylinderLabel, 3, {{-1.10, 3.28}}),
      make_entry(kCylinderLabel, kSumHarmonics, {{-0.54, 0.58}, {-0.67, 2.04}, {-0.44, 3.34}}),
  };
  return lib;
}

} // namespace

const SignatureLibrary& reference_library() {
  static const SignatureLibrary lib = build_reference_library();
  return lib;
}

} // namespace borsem
