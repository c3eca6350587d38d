#include <cmath>

#include "mot_internal.hpp"

namespace borsem {

namespace {

using detail::Parity;

TangentialFieldPair eval_harmonic(const PlaneWaveExcitation& exc, int m,
                                  const Eigen::Vector2d& point, Real t,
                                  const Eigen::Vector2d& tangent_dir, Real c, int n) {
  const Parity parity = detail::parity_of(exc.polarization);
  const Eigen::Vector3d khat = detail::wave_direction(exc.incidence_theta);
  const Eigen::Vector3d pol = detail::polarization_vector(exc);
  const Real rho = point.x();
  const Real z = point.y();
  const Real ca = tangent_dir.x();
  const Real sa = tangent_dir.y();

  Real acc_t = 0.0;
  Real acc_phi = 0.0;
  for (int l = 0; l < n; ++l) {
    const Real phi = 2.0 * kPi * l / n;
    const Real cp = std::cos(phi);
    const Real sp = std::sin(phi);
    const Eigen::Vector3d r(rho * cp, rho * sp, z);
    const Eigen::Vector3d that(ca * cp, ca * sp, sa);
    const Eigen::Vector3d phat(-sp, cp, 0.0);
    const Real field = pulse_value(exc.pulse, t - khat.dot(r) / c);
    acc_t += detail::cm(parity, m, phi) * that.dot(pol) * field;
    acc_phi += detail::sm(parity, m, phi) * phat.dot(pol) * field;
  }
  const Real scale = (2.0 * kPi / n) / detail::pi_m(m);
  return {acc_t * scale, acc_phi * scale};
}

} // namespace

TangentialFieldPair incident_harmonic(const PlaneWaveExcitation& exc, int m,
                                      const Eigen::Vector2d& point, Real t,
                                      const Eigen::Vector2d& tangent_dir, Real wave_speed) {
  require(m >= 0, "incident_harmonic: m must be non-negative");
  require(exc.incidence_theta >= 0.0 && exc.incidence_theta <= kPi,
          "incident_harmonic: incidence_theta must lie in [0, pi]");
  require(wave_speed > 0.0, "incident_harmonic: wave speed must be positive");
  require(std::abs(tangent_dir.norm() - 1.0) < 1e-9, "incident_harmonic: tangent must be unit length");

  // Periodic trapezoid with doubling; spectrally convergent in the azimuth.
  const Real tol = 1e-13 * (std::abs(exc.pulse.amplitude) + 1.0);
  TangentialFieldPair prev = eval_harmonic(exc, m, point, t, tangent_dir, wave_speed, 32);
  for (int n = 64; n <= 2048; n *= 2) {
    const TangentialFieldPair cur = eval_harmonic(exc, m, point, t, tangent_dir, wave_speed, n);
    if (std::abs(cur.t_component - prev.t_component) <= tol &&
        std::abs(cur.phi_component - prev.phi_component) <= tol) {
      return cur;
    }
    prev = cur;
  }
  return prev;
}

namespace detail {

Eigen::MatrixXd tested_excitation(const BorMesh& mesh, const DofLayout& layout,
                                  const PlaneWaveExcitation& exc, int m, Parity parity,
                                  const TimeGrid& grid, Real wave_speed, int n_phi_samples) {
  const Eigen::Index n_seg = mesh.segment_count();
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(layout.total(), grid.count);

  const Eigen::Vector3d khat = wave_direction(exc.incidence_theta);
  const Eigen::Vector3d pol = polarization_vector(exc);
  const int nl = n_phi_samples;
  const Real dphi = 2.0 * kPi / nl;
  const Real support = kPulseSupportWidths * exc.pulse.width;

  std::vector<Real> delays(nl), wt(nl), wphi(nl);

  for (Eigen::Index e = 0; e < n_seg; ++e) {
    const MeshSegment& seg = mesh.segments[static_cast<size_t>(e)];
    const Eigen::Index dof_left = layout.has_t ? layout.node_dof[static_cast<size_t>(e)] : -1;
    const Eigen::Index dof_right = layout.has_t ? layout.node_dof[static_cast<size_t>(e + 1)] : -1;
    const Eigen::Index dof_g = layout.has_phi ? layout.phi_dof(e) : -1;

    for (const QuadNode& qn : segment_nodes(seg, kTestGauss)) {
      Real tau_min = 0.0;
      Real tau_max = 0.0;
      for (int l = 0; l < nl; ++l) {
        const Real phi = dphi * l;
        const Real cp = std::cos(phi);
        const Real sp = std::sin(phi);
        const Eigen::Vector3d r(qn.rho * cp, qn.rho * sp, qn.z);
        const Eigen::Vector3d that(seg.cos_alpha * cp, seg.cos_alpha * sp, seg.sin_alpha);
        const Eigen::Vector3d phat(-sp, cp, 0.0);
        delays[l] = khat.dot(r) / wave_speed;
        wt[l] = cm(parity, m, phi) * that.dot(pol) * dphi;
        wphi[l] = sm(parity, m, phi) * phat.dot(pol) * dphi;
        tau_min = l == 0 ? delays[l] : std::min(tau_min, delays[l]);
        tau_max = l == 0 ? delays[l] : std::max(tau_max, delays[l]);
      }

      const Real wl = qn.weight * qn.rho * (dof_left >= 0 ? 1.0 - qn.xi : 0.0);
      const Real wr = qn.weight * qn.rho * (dof_right >= 0 ? qn.xi : 0.0);
      const Real wg = qn.weight * qn.rho;

      for (Eigen::Index n = 0; n < grid.count; ++n) {
        const Real t = grid.time(n);
        if (t < exc.pulse.peak_time - support + tau_min ||
            t > exc.pulse.peak_time + support + tau_max) {
          continue;
        }
        Real et = 0.0;
        Real ephi = 0.0;
        for (int l = 0; l < nl; ++l) {
          const Real field = pulse_value(exc.pulse, t - delays[l]);
          et += wt[l] * field;
          ephi += wphi[l] * field;
        }
        if (dof_left >= 0) v(dof_left, n) += wl * et;
        if (dof_right >= 0) v(dof_right, n) += wr * et;
        if (dof_g >= 0) v(dof_g, n) += wg * ephi;
      }
    }
  }
  return v;
}

} // namespace detail

} // namespace borsem
