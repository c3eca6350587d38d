#include "ring_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace borsem::detail {

namespace {

constexpr int kMaxGauss = 16;

struct GaussRule {
  int n = 8;
  Real x[kMaxGauss];
  Real w[kMaxGauss];
};

// Gauss-Legendre nodes/weights on [-1, 1].
GaussRule gauss_rule(int n) {
  GaussRule rule;
  rule.n = std::clamp(n, 2, kMaxGauss);
  // Newton iteration on Legendre polynomials; exact enough at double
  // precision and avoids a table per order.
  const int order = rule.n;
  for (int i = 0; i < order; ++i) {
    Real x = std::cos(kPi * (i + 0.75) / (order + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      Real p0 = 1.0;
      Real p1 = x;
      for (int k = 2; k <= order; ++k) {
        const Real p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const Real dp = order * (x * p1 - p0) / (x * x - 1.0);
      const Real dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    Real p0 = 1.0;
    Real p1 = x;
    for (int k = 2; k <= order; ++k) {
      const Real p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    const Real dp = order * (x * p1 - p0) / (x * x - 1.0);
    rule.x[i] = x;
    rule.w[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

const GaussRule& cached_rule(int n) {
  static const GaussRule rules[] = {gauss_rule(3),  gauss_rule(4),  gauss_rule(6),  gauss_rule(8),
                                    gauss_rule(10), gauss_rule(12), gauss_rule(16)};
  for (const auto& r : rules)
    if (r.n >= n) return r;
  return rules[6];
}

// Breakpoints in psi where the integrand loses smoothness: hat knots (R
// crossing multiples of c*dt), a geometric ladder resolving the 1/R peak
// near psi = 0, and a uniform cap for the cos(m psi) oscillation.
std::vector<Real> panel_breaks(Real r0_sq, Real q, Real rpi, Real cdt, int m) {
  const Real r0 = std::sqrt(r0_sq);
  std::vector<Real> bp{0.0, kPi};

  const auto psi_of = [&](Real rr) {
    const Real cosv = 1.0 - (rr * rr - r0_sq) / (2.0 * q);
    return std::acos(std::clamp(cosv, -1.0, 1.0));
  };

  const int j_lo = static_cast<int>(std::floor(r0 / cdt));
  const int j_hi = static_cast<int>(std::floor(rpi / cdt));
  for (int j = j_lo + 1; j <= j_hi; ++j) bp.push_back(psi_of(static_cast<Real>(j) * cdt));

  Real first_knot = kPi;
  for (Real v : bp)
    if (v > 1e-14 && v < first_knot) first_knot = v;
  const Real psi_peak = std::max(r0 / std::sqrt(q), 1e-7);
  for (Real x = psi_peak; x < 0.5 * first_knot; x *= 2.0) bp.push_back(x);

  std::sort(bp.begin(), bp.end());
  bp.erase(std::unique(bp.begin(), bp.end(),
                       [](Real a, Real b) { return std::abs(a - b) < 1e-13; }),
           bp.end());

  const Real cap = kPi / static_cast<Real>(std::max(4, 2 * m + 2));
  std::vector<Real> out;
  for (size_t i = 0; i + 1 < bp.size(); ++i) {
    out.push_back(bp[i]);
    const Real width = bp[i + 1] - bp[i];
    const int extra = static_cast<int>(std::floor(width / cap));
    for (int j = 1; j <= extra; ++j) out.push_back(bp[i] + width * j / (extra + 1));
  }
  out.push_back(bp.back());
  return out;
}

} // namespace

void gauss_unit_rule(int n, std::vector<Real>& xi, std::vector<Real>& weight) {
  const GaussRule& rule = cached_rule(n);
  xi.resize(static_cast<size_t>(rule.n));
  weight.resize(static_cast<size_t>(rule.n));
  for (int i = 0; i < rule.n; ++i) {
    xi[static_cast<size_t>(i)] = 0.5 * (rule.x[i] + 1.0);
    weight[static_cast<size_t>(i)] = 0.5 * rule.w[i];
  }
}

RingKernels ring_kernels(Real rho_t, Real z_t, Real rho_s, Real z_s, int m, Real c, Real dt,
                         int gauss_order) {
  require(rho_t > 0.0 && rho_s > 0.0, "ring_kernels: points must lie off the axis");
  require(c > 0.0 && dt > 0.0, "ring_kernels: need positive c and dt");

  const Real d = z_t - z_s;
  const Real q = rho_t * rho_s;
  const Real r0_sq = d * d + (rho_t - rho_s) * (rho_t - rho_s);
  const Real rpi = std::sqrt(d * d + (rho_t + rho_s) * (rho_t + rho_s));
  const Real cdt = c * dt;

  RingKernels out;
  out.k_min = static_cast<int>(std::floor(std::sqrt(r0_sq) / cdt));
  const int k_max = static_cast<int>(std::floor(rpi / cdt)) + 1;
  out.moments.setZero(3, k_max - out.k_min + 1);

  const GaussRule& rule = cached_rule(gauss_order);
  const std::vector<Real> breaks = panel_breaks(r0_sq, q, rpi, cdt, m);

  for (size_t p = 0; p + 1 < breaks.size(); ++p) {
    const Real a = breaks[p];
    const Real b = breaks[p + 1];
    const Real half = 0.5 * (b - a);
    const Real mid = 0.5 * (a + b);
    for (int g = 0; g < rule.n; ++g) {
      const Real psi = mid + half * rule.x[g];
      const Real r = std::sqrt(r0_sq + 2.0 * q * (1.0 - std::cos(psi)));
      const Real u = r / cdt;
      const int j = static_cast<int>(std::floor(u));
      const Real wu = u - static_cast<Real>(j);
      const Real base = 2.0 * rule.w[g] * half / r;
      const Real c0 = std::cos(m * psi);
      const Real c1 = std::cos(psi) * c0;
      const Real s1 = std::sin(psi) * std::sin(m * psi);
      const int col0 = j - out.k_min;
      out.moments(0, col0) += base * (1.0 - wu) * c0;
      out.moments(1, col0) += base * (1.0 - wu) * c1;
      out.moments(2, col0) += base * (1.0 - wu) * s1;
      out.moments(0, col0 + 1) += base * wu * c0;
      out.moments(1, col0 + 1) += base * wu * c1;
      out.moments(2, col0 + 1) += base * wu * s1;
    }
  }
  return out;
}

namespace {

Eigen::Vector3d static_integrand(Real psi, Real r0_sq, Real q, int m) {
  const Real r = std::sqrt(r0_sq + 2.0 * q * (1.0 - std::cos(psi)));
  const Real c0 = std::cos(m * psi);
  return Eigen::Vector3d(c0, std::cos(psi) * c0, std::sin(psi) * std::sin(m * psi)) * (2.0 / r);
}

void simpson_recurse(Real a, Real b, const Eigen::Vector3d& fa, const Eigen::Vector3d& fm,
                     const Eigen::Vector3d& fb, const Eigen::Vector3d& whole, Real r0_sq, Real q,
                     int m, int depth, Eigen::Vector3d& acc) {
  const Real lm = 0.5 * (a + 0.5 * (a + b));
  const Real rm = 0.5 * (0.5 * (a + b) + b);
  const Eigen::Vector3d flm = static_integrand(lm, r0_sq, q, m);
  const Eigen::Vector3d frm = static_integrand(rm, r0_sq, q, m);
  const Real h = b - a;
  const Eigen::Vector3d left = (h / 12.0) * (fa + 4.0 * flm + fm);
  const Eigen::Vector3d right = (h / 12.0) * (fm + 4.0 * frm + fb);
  const Eigen::Vector3d delta = left + right - whole;
  if (depth > 40 || delta.cwiseAbs().maxCoeff() < 1e-13 * (1.0 + acc.cwiseAbs().maxCoeff())) {
    acc += left + right + delta / 15.0;
    return;
  }
  simpson_recurse(a, 0.5 * (a + b), fa, flm, fm, left, r0_sq, q, m, depth + 1, acc);
  simpson_recurse(0.5 * (a + b), b, fm, frm, fb, right, r0_sq, q, m, depth + 1, acc);
}

} // namespace

Eigen::Vector3d ring_static_moments(Real rho_t, Real z_t, Real rho_s, Real z_s, int m) {
  require(rho_t > 0.0 && rho_s > 0.0, "ring_static_moments: points must lie off the axis");
  const Real d = z_t - z_s;
  const Real q = rho_t * rho_s;
  const Real r0_sq = d * d + (rho_t - rho_s) * (rho_t - rho_s);

  Eigen::Vector3d acc = Eigen::Vector3d::Zero();
  const Real mid = 0.5 * kPi;
  const Eigen::Vector3d fa = static_integrand(0.0, r0_sq, q, m);
  const Eigen::Vector3d fm = static_integrand(mid, r0_sq, q, m);
  const Eigen::Vector3d fb = static_integrand(kPi, r0_sq, q, m);
  const Eigen::Vector3d whole = (kPi / 6.0) * (fa + 4.0 * fm + fb);
  simpson_recurse(0.0, kPi, fa, fm, fb, whole, r0_sq, q, m, 0, acc);
  return acc;
}

} // namespace borsem::detail
