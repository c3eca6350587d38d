#include <cmath>

#include <doctest.h>

#include "../src/mot_internal.hpp"
#include "borsem/solver.hpp"

using namespace borsem;

namespace {

// Direct Fourier projection of the tangential incident field over the ring,
// using the same (c_m, s_m) modal convention as the solver.
TangentialFieldPair project_harmonic(const PlaneWaveExcitation& exc, int m,
                                     const Eigen::Vector2d& point, Real t,
                                     const Eigen::Vector2d& tangent_dir, Real c, int n_phi) {
  const Eigen::Vector3d k_hat = detail::wave_direction(exc.incidence_theta);
  const Eigen::Vector3d pol = detail::polarization_vector(exc);
  const detail::Parity par = detail::parity_of(exc.polarization);
  TangentialFieldPair out;
  for (int i = 0; i < n_phi; ++i) {
    const Real phi = 2.0 * kPi * i / n_phi;
    const Eigen::Vector3d r(point.x() * std::cos(phi), point.x() * std::sin(phi), point.y());
    const Real field = pulse_value(exc.pulse, t - k_hat.dot(r) / c);
    const Eigen::Vector3d t_hat(tangent_dir.x() * std::cos(phi), tangent_dir.x() * std::sin(phi),
                                tangent_dir.y());
    const Eigen::Vector3d phi_hat(-std::sin(phi), std::cos(phi), 0.0);
    out.t_component += field * pol.dot(t_hat) * detail::cm(par, m, phi);
    out.phi_component += field * pol.dot(phi_hat) * detail::sm(par, m, phi);
  }
  const Real norm = 2.0 * kPi / n_phi / detail::pi_m(m);
  out.t_component *= norm;
  out.phi_component *= norm;
  return out;
}

} // namespace

TEST_CASE("axial incidence excites only the m = 1 harmonic") {
  for (Polarization pol : {Polarization::theta, Polarization::phi}) {
    PlaneWaveExcitation exc;
    exc.pulse = GaussianPulse{1.0, 0.5, 0.0};
    exc.incidence_theta = 0.0;
    exc.polarization = pol;
    const Eigen::Vector2d point(0.6, 0.2);
    const Eigen::Vector2d tangent(std::cos(0.3), std::sin(0.3));
    for (int m : {0, 2, 3, 4}) {
      const auto f = incident_harmonic(exc, m, point, 0.1, tangent);
      CHECK(f.t_component == doctest::Approx(0.0).epsilon(1e-14));
      CHECK(f.phi_component == doctest::Approx(0.0).epsilon(1e-14));
    }
    const auto f1 = incident_harmonic(exc, 1, point, 0.1, tangent);
    CHECK(std::abs(f1.t_component) + std::abs(f1.phi_component) > 1e-8);
  }
}

TEST_CASE("axial theta-polarized harmonic has the closed form") {
  PlaneWaveExcitation exc;
  exc.pulse = GaussianPulse{2.0, 0.4, 0.0};
  exc.incidence_theta = 0.0;
  exc.polarization = Polarization::theta;
  const Real alpha = 0.7;
  const Eigen::Vector2d tangent(std::cos(alpha), std::sin(alpha));
  const Eigen::Vector2d point(0.45, -0.3);
  for (Real t : {-0.2, 0.0, 0.15}) {
    const Real g = pulse_value(exc.pulse, t - point.y());
    const auto f = incident_harmonic(exc, 1, point, t, tangent);
    // E = x_hat g(t - z/c); t-projection cos(alpha)cos(phi), phi-projection -sin(phi)
    CHECK(f.t_component == doctest::Approx(std::cos(alpha) * g).epsilon(1e-12));
    CHECK(f.phi_component == doctest::Approx(-g).epsilon(1e-12));
  }
}

TEST_CASE("oblique harmonics match a dense azimuthal quadrature") {
  for (Polarization pol : {Polarization::theta, Polarization::phi}) {
    for (Real theta_inc : {kPi / 6.0, kPi / 3.0, kPi / 2.0}) {
      PlaneWaveExcitation exc;
      exc.pulse = GaussianPulse{1.0, 0.35, 0.0};
      exc.incidence_theta = theta_inc;
      exc.polarization = pol;
      const Eigen::Vector2d point(0.5, 0.25);
      const Eigen::Vector2d tangent(std::cos(1.1), std::sin(1.1));
      for (int m : {0, 1, 2, 3}) {
        for (Real t : {-0.1, 0.2}) {
          const auto got = incident_harmonic(exc, m, point, t, tangent);
          const auto want = project_harmonic(exc, m, point, t, tangent, 1.0, 512);
          CHECK(got.t_component == doctest::Approx(want.t_component).epsilon(1e-10).scale(1.0));
          CHECK(got.phi_component ==
                doctest::Approx(want.phi_component).epsilon(1e-10).scale(1.0));
        }
      }
    }
  }
}

TEST_CASE("harmonics scale linearly with pulse amplitude") {
  PlaneWaveExcitation exc;
  exc.pulse = GaussianPulse{1.0, 0.3, 0.0};
  exc.incidence_theta = kPi / 4.0;
  const Eigen::Vector2d point(0.8, 0.0);
  const auto base = incident_harmonic(exc, 2, point, 0.05);
  exc.pulse.amplitude = -3.5;
  const auto scaled = incident_harmonic(exc, 2, point, 0.05);
  CHECK(scaled.t_component == doctest::Approx(-3.5 * base.t_component).epsilon(1e-13));
  CHECK(scaled.phi_component == doctest::Approx(-3.5 * base.phi_component).epsilon(1e-13));
}

TEST_CASE("wave speed stretches the arrival time") {
  PlaneWaveExcitation exc;
  exc.pulse = GaussianPulse{1.0, 0.25, 0.0};
  exc.incidence_theta = 0.0;
  const Eigen::Vector2d point(0.3, 1.0); // z = 1
  // with c = 2 the field at z = 1 at time t equals the c = 1 field at t - 1/2 + 1
  const auto slow = incident_harmonic(exc, 1, point, 1.0, {1.0, 0.0}, 1.0);
  const auto fast = incident_harmonic(exc, 1, point, 0.5, {1.0, 0.0}, 2.0);
  CHECK(fast.t_component == doctest::Approx(slow.t_component).epsilon(1e-13));
}
