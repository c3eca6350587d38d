#include <algorithm>
#include <cmath>

#include "mot_internal.hpp"

namespace borsem {

namespace {

constexpr int kAzimuthPoints = 128;

} // namespace

HarmonicResponse far_field(const SurfaceCurrentHistory& currents, Real observation_theta,
                           Real observation_phi) {
  require(observation_theta >= 0.0 && observation_theta <= kPi,
          "far_field: observation_theta must lie in [0, pi]");
  const BorMesh& mesh = currents.mesh;
  require(!mesh.segments.empty(), "far_field: history has no mesh");
  const Eigen::Index n_steps = currents.grid.count;
  require(n_steps >= 8, "far_field: history too short");

  const int m = currents.m;
  const Real c = currents.wave_speed;
  const Real dt = currents.grid.step;
  const Real st = std::sin(observation_theta);
  const Real ct = std::cos(observation_theta);
  const detail::Parity parity = detail::parity_of(currents.polarization);
  const bool want_theta = currents.polarization == Polarization::theta;
  const Real coef =
      want_theta ? detail::cm(parity, m, observation_phi) : detail::sm(parity, m, observation_phi);

  // Widest forward advance of the retarded argument, in whole samples.
  Real adv_max = 0.0;
  for (const auto& seg : mesh.segments) {
    for (const Eigen::Vector2d& p : {seg.p0, seg.p1}) {
      adv_max = std::max(adv_max, (p.x() * st + std::abs(p.y() * ct)) / c);
    }
  }
  const Eigen::Index j_max = static_cast<Eigen::Index>(std::floor(adv_max / dt)) + 1;
  const Eigen::Index n_int = n_steps - j_max;
  require(n_int >= 4, "far_field: history too short for this observation direction");

  const Real du = 2.0 * kPi / kAzimuthPoints;
  Eigen::VectorXd cu(kAzimuthPoints), su(kAzimuthPoints), cmu(kAzimuthPoints), smu(kAzimuthPoints);
  for (int l = 0; l < kAzimuthPoints; ++l) {
    const Real u = du * l;
    cu[l] = std::cos(u);
    su[l] = std::sin(u);
    cmu[l] = std::cos(m * u);
    smu[l] = std::sin(m * u);
  }

  Eigen::VectorXd acc = Eigen::VectorXd::Zero(n_int);
  Eigen::VectorXd ft(n_steps), gt(n_steps);
  for (Eigen::Index e = 0; e < mesh.segment_count(); ++e) {
    const MeshSegment& seg = mesh.segments[static_cast<size_t>(e)];
    const auto nodes = detail::segment_nodes(seg, detail::kSourceGauss);
    gt = currents.phi_segments.col(e);
    const bool has_g = gt.cwiseAbs().maxCoeff() > 0.0;
    for (const detail::QuadNode& qn : nodes) {
      ft = (1.0 - qn.xi) * currents.t_nodes.col(e) + qn.xi * currents.t_nodes.col(e + 1);
      const bool has_f = ft.cwiseAbs().maxCoeff() > 0.0;
      if (!has_f && !has_g) continue;
      const Real ws = qn.weight * qn.rho * du;
      const Real* fp = ft.data();
      const Real* gp = gt.data();

      for (int l = 0; l < kAzimuthPoints; ++l) {
        Real wf, wg;
        if (want_theta) {
          wf = (seg.cos_alpha * ct * cu[l] - seg.sin_alpha * st) * cmu[l];
          wg = -ct * su[l] * smu[l];
        } else {
          wf = -seg.cos_alpha * su[l] * smu[l];
          wg = cu[l] * cmu[l];
        }
        wf = has_f ? wf * ws : 0.0;
        wg = has_g ? wg * ws : 0.0;
        if (wf == 0.0 && wg == 0.0) continue;

        const Real adv = (qn.rho * st * cu[l] + qn.z * ct) / c;
        const Real pos = adv / dt;
        const Eigen::Index j0 = static_cast<Eigen::Index>(std::floor(pos));
        const Real fr = pos - static_cast<Real>(j0);
        const Real w0 = 1.0 - fr;
        Real* ap = acc.data();
        const Eigen::Index n_lo = std::max<Eigen::Index>(0, -j0);
        if (wf != 0.0 && wg != 0.0) {
          for (Eigen::Index n = n_lo; n < n_int; ++n) {
            const Eigen::Index k = n + j0;
            ap[n] += wf * (w0 * fp[k] + fr * fp[k + 1]) + wg * (w0 * gp[k] + fr * gp[k + 1]);
          }
        } else if (wf != 0.0) {
          for (Eigen::Index n = n_lo; n < n_int; ++n) {
            const Eigen::Index k = n + j0;
            ap[n] += wf * (w0 * fp[k] + fr * fp[k + 1]);
          }
        } else {
          for (Eigen::Index n = n_lo; n < n_int; ++n) {
            const Eigen::Index k = n + j0;
            ap[n] += wg * (w0 * gp[k] + fr * gp[k + 1]);
          }
        }
      }
    }
  }

  const Eigen::Index n_out = n_int - 2;
  HarmonicResponse resp;
  resp.m = m;
  resp.incidence_theta = currents.incidence_theta;
  resp.observation_theta = observation_theta;
  resp.observation_phi = observation_phi;
  resp.polarization = currents.polarization;
  resp.field.grid = TimeGrid(dt - currents.pulse.peak_time, dt, n_out);
  resp.field.values.resize(n_out);
  const Real scale = -coef / (4.0 * kPi * 2.0 * dt);
  for (Eigen::Index n = 0; n < n_out; ++n) {
    resp.field.values[n] = scale * (acc[n + 2] - acc[n]);
  }
  return resp;
}

} // namespace borsem
