#include <cmath>
#include <vector>

#include <doctest.h>

#include "../src/ring_kernel.hpp"

using namespace borsem;
using detail::ring_kernels;
using detail::ring_static_moments;

namespace {

// chord between points of two rings separated by azimuth psi
double ring_distance(double rho_t, double z_t, double rho_s, double z_s, double psi) {
  const double dz = z_t - z_s;
  return std::sqrt(rho_t * rho_t + rho_s * rho_s - 2.0 * rho_t * rho_s * std::cos(psi) + dz * dz);
}

// composite Simpson on [0, pi]; n intervals (even)
template <typename F>
double simpson(F f, int n) {
  const double h = kPi / n;
  double acc = f(0.0) + f(kPi);
  for (int i = 1; i < n; ++i) acc += f(i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

double hat(double x, double dt) { return std::max(0.0, 1.0 - std::abs(x) / dt); }

} // namespace

TEST_CASE("gauss rules on the unit interval integrate polynomials exactly") {
  std::vector<Real> xi;
  std::vector<Real> w;
  for (int n : {3, 4, 6, 8, 10, 12, 16}) {
    detail::gauss_unit_rule(n, xi, w);
    REQUIRE(static_cast<int>(xi.size()) == n);
    for (int p = 0; p <= 2 * n - 1; ++p) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) acc += w[i] * std::pow(xi[i], p);
      CHECK(acc == doctest::Approx(1.0 / (p + 1)).epsilon(1e-13));
    }
  }
  // unsupported orders still produce a consistent rule
  detail::gauss_unit_rule(5, xi, w);
  double mass = 0.0;
  for (Real wi : w) mass += wi;
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("static ring moment m=0 matches the complete elliptic integral") {
  // 2*Int_0^pi dpsi / sqrt(A - B cos psi) = 4/sqrt(A+B) * K(sqrt(2B/(A+B)))
  for (auto [rho_t, z_t, rho_s, z_s] :
       {std::array<double, 4>{1.0, 0.0, 0.8, 0.3}, std::array<double, 4>{0.5, -0.2, 0.45, -0.1},
        std::array<double, 4>{2.0, 1.0, 0.3, 0.0}}) {
    const double A = rho_t * rho_t + rho_s * rho_s + (z_t - z_s) * (z_t - z_s);
    const double B = 2.0 * rho_t * rho_s;
    const double expected = 4.0 / std::sqrt(A + B) * std::comp_ellint_1(std::sqrt(2.0 * B / (A + B)));
    const Eigen::Vector3d mom = ring_static_moments(rho_t, z_t, rho_s, z_s, 0);
    CHECK(mom[0] == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("static ring moments match a dense Simpson quadrature") {
  const double rho_t = 0.9;
  const double z_t = 0.1;
  const double rho_s = 0.6;
  const double z_s = -0.4;
  for (int m : {0, 1, 2, 3}) {
    const Eigen::Vector3d mom = ring_static_moments(rho_t, z_t, rho_s, z_s, m);
    auto integrand = [&](auto weight) {
      return simpson(
          [&](double psi) {
            return 2.0 * weight(psi) / ring_distance(rho_t, z_t, rho_s, z_s, psi);
          },
          20000);
    };
    CHECK(mom[0] == doctest::Approx(integrand([&](double p) { return std::cos(m * p); }))
                        .epsilon(1e-9));
    CHECK(mom[1] ==
          doctest::Approx(integrand([&](double p) { return std::cos(p) * std::cos(m * p); }))
              .epsilon(1e-9));
    CHECK(mom[2] ==
          doctest::Approx(integrand([&](double p) { return std::sin(p) * std::sin(m * p); }))
              .epsilon(1e-9));
  }
}

TEST_CASE("axis source ring degenerates to constant distance") {
  // rho_s = 0: R is psi-independent, so only the m=0 first row survives
  const double rho_t = 0.7;
  const double dz = 0.4;
  const double R = std::hypot(rho_t, dz);
  const Eigen::Vector3d m0 = ring_static_moments(rho_t, 0.0, 0.0, -dz, 0);
  CHECK(m0[0] == doctest::Approx(2.0 * kPi / R).epsilon(1e-12));
  CHECK(m0[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(m0[2] == doctest::Approx(0.0).epsilon(1e-12));
  const Eigen::Vector3d m2 = ring_static_moments(rho_t, 0.0, 0.0, -dz, 2);
  CHECK(m2[0] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("retarded moments sum to the static moments over all delays") {
  // hats form a partition of unity in time, so the delay buckets must
  // reassemble the static kernel
  const double c = 1.0;
  for (double dt : {0.05, 0.013}) {
    for (int m : {0, 1, 3}) {
      const detail::RingKernels rk = ring_kernels(1.0, 0.0, 0.85, 0.25, m, c, dt);
      const Eigen::Vector3d stat = ring_static_moments(1.0, 0.0, 0.85, 0.25, m);
      const Eigen::Vector3d summed = rk.moments.rowwise().sum();
      for (int r = 0; r < 3; ++r) {
        CHECK(summed[r] == doctest::Approx(stat[r]).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("retarded moments match direct quadrature bucket by bucket") {
  const double rho_t = 0.8;
  const double z_t = 0.0;
  const double rho_s = 0.75;
  const double z_s = 0.12;
  const double dt = 0.04;
  const double c = 1.0;
  const int m = 1;
  const detail::RingKernels rk = ring_kernels(rho_t, z_t, rho_s, z_s, m, c, dt);
  // every bucket the struct exposes, checked against dense Simpson
  for (int col = 0; col < rk.moments.cols(); ++col) {
    const int k = rk.k_min + col;
    const double expected = simpson(
        [&](double psi) {
          const double R = ring_distance(rho_t, z_t, rho_s, z_s, psi);
          return 2.0 * std::cos(m * psi) * hat(k * dt - R / c, dt) / R;
        },
        40000);
    CHECK(rk.moments(0, col) == doctest::Approx(expected).epsilon(2e-6).scale(1.0));
  }
  // buckets before the closest approach are empty by causality
  double r_min = 1e300;
  double r_max = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const double R = ring_distance(rho_t, z_t, rho_s, z_s, kPi * i / 1000.0);
    r_min = std::min(r_min, R);
    r_max = std::max(r_max, R);
  }
  CHECK(rk.k_min * dt > r_min / c - dt - 1e-12);
  CHECK((rk.k_min + rk.moments.cols() - 1) * dt < r_max / c + dt + 1e-12);
}
