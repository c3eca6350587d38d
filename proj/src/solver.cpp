#include <algorithm>
#include <cmath>
#include <limits>

#include "mot_internal.hpp"

namespace borsem {

namespace detail {

DofLayout make_layout(const BorMesh& mesh, int m, Parity parity) {
  DofLayout lay;
  lay.has_t = !(m == 0 && parity == Parity::odd);
  lay.has_phi = !(m == 0 && parity == Parity::even);

  const Eigen::Index n_nodes = mesh.node_count();
  lay.node_dof.assign(static_cast<size_t>(n_nodes), -1);
  if (lay.has_t) {
    for (Eigen::Index i = 0; i < n_nodes; ++i) {
      if (i == 0 || i == n_nodes - 1) {
        // The t-hat current reaches an on-axis pole only in the m = 1
        // harmonic; elsewhere the endpoint coefficient is pinned to zero.
        const bool on_axis = i == 0 ? mesh.axis_start : mesh.axis_end;
        if (!(m == 1 && on_axis)) continue;
      }
      lay.node_dof[static_cast<size_t>(i)] = lay.n_t;
      lay.t_nodes.push_back(i);
      ++lay.n_t;
    }
  }
  if (lay.has_phi) lay.n_phi = mesh.segment_count();
  return lay;
}

std::vector<QuadNode> segment_nodes(const MeshSegment& seg, int order) {
  std::vector<Real> xi, w;
  gauss_unit_rule(order, xi, w);
  std::vector<QuadNode> nodes(xi.size());
  for (size_t i = 0; i < xi.size(); ++i) {
    QuadNode& qn = nodes[i];
    qn.xi = xi[i];
    qn.weight = w[i] * seg.chord_length;
    const Eigen::Vector2d pt = seg.p0 + qn.xi * (seg.p1 - seg.p0);
    qn.rho = pt.x();
    qn.z = pt.y();
  }
  return nodes;
}

} // namespace detail

namespace {

using detail::DofLayout;
using detail::Parity;
using detail::QuadNode;

Real min_chord(const BorMesh& mesh) {
  Real h = mesh.segments.front().chord_length;
  for (const auto& s : mesh.segments) h = std::min(h, s.chord_length);
  return h;
}

// Largest ring-to-ring distance, evaluated over segment endpoints (the
// chord geometry is linear, so endpoint extremes bound the quadrature nodes).
Real max_ring_distance(const BorMesh& mesh) {
  std::vector<Eigen::Vector2d> pts;
  for (const auto& s : mesh.segments) pts.push_back(s.p0);
  pts.push_back(mesh.segments.back().p1);
  Real rmax = 0.0;
  for (const auto& pa : pts)
    for (const auto& pb : pts)
      rmax = std::max(rmax, std::hypot(pa.y() - pb.y(), pa.x() + pb.x()));
  return rmax;
}

// Closest approach of two chords, by endpoints; generatrix neighbours share a
// node, so the endpoint minimum is exact for the pairs that matter.
Real segment_gap(const MeshSegment& a, const MeshSegment& b) {
  Real d = (a.p0 - b.p0).norm();
  d = std::min(d, (a.p0 - b.p1).norm());
  d = std::min(d, (a.p1 - b.p0).norm());
  d = std::min(d, (a.p1 - b.p1).norm());
  return d;
}

struct BasisAtNode {
  Eigen::Index dof = -1;
  Real lambda = 0.0;       // triangle value
  Real d_rho_lambda = 0.0; // d/ds of rho * lambda along the chord
};

void fill_t_basis(const DofLayout& lay, const MeshSegment& seg, Eigen::Index e, const QuadNode& qn,
                  BasisAtNode out[2]) {
  const Eigen::Index left = lay.has_t ? lay.node_dof[static_cast<size_t>(e)] : -1;
  const Eigen::Index right = lay.has_t ? lay.node_dof[static_cast<size_t>(e + 1)] : -1;
  out[0].dof = left;
  out[0].lambda = 1.0 - qn.xi;
  out[0].d_rho_lambda = seg.cos_alpha * (1.0 - qn.xi) - qn.rho / seg.chord_length;
  out[1].dof = right;
  out[1].lambda = qn.xi;
  out[1].d_rho_lambda = seg.cos_alpha * qn.xi + qn.rho / seg.chord_length;
}

} // namespace

std::shared_ptr<const MotOperator> build_mot_operator(const BorMesh& mesh, int m, Polarization pol,
                                                      const SolverConfig& cfg) {
  require(!mesh.segments.empty(), "build_mot_operator: empty mesh");
  require(m >= 0, "build_mot_operator: m must be non-negative");
  require(cfg.courant > 0.0 && cfg.courant <= 1.0, "build_mot_operator: courant must lie in (0, 1]");
  require(cfg.wave_speed > 0.0, "build_mot_operator: wave speed must be positive");
  require(cfg.quadrature_order >= 4, "build_mot_operator: quadrature order too low");

  auto op = std::make_shared<MotOperator>();
  op->mesh = mesh;
  op->m = m;
  op->polarization = pol;
  op->cfg = cfg;
  op->wave_speed = cfg.wave_speed;
  const Parity parity = detail::parity_of(pol);
  op->layout = detail::make_layout(mesh, m, parity);
  require(op->layout.total() > 0, "build_mot_operator: no degrees of freedom for this harmonic");

  const Real c = cfg.wave_speed;
  op->dt = cfg.courant * min_chord(mesh) / c;

  const Eigen::Index n_seg = mesh.segment_count();
  const Eigen::Index nd = op->layout.total();
  // The divergence of the basis is linear along each chord, so the line
  // charge is held exactly by two moments per segment: its chord-end values.
  const Eigen::Index nch = 2 * n_seg;
  const int k_cap = static_cast<int>(std::floor(max_ring_distance(mesh) / (c * op->dt))) + 2;
  op->za.assign(static_cast<size_t>(k_cap + 1), Eigen::MatrixXd::Zero(nd, nd));
  op->zphi.assign(static_cast<size_t>(k_cap + 1), Eigen::MatrixXd::Zero(nd, nch));
  op->dp = Eigen::MatrixXd::Zero(nch, nd);

  std::vector<std::vector<QuadNode>> test_nodes(static_cast<size_t>(n_seg));
  std::vector<std::vector<QuadNode>> src_nodes(static_cast<size_t>(n_seg));
  std::vector<std::vector<QuadNode>> test_near(static_cast<size_t>(n_seg));
  std::vector<std::vector<QuadNode>> src_near(static_cast<size_t>(n_seg));
  for (Eigen::Index e = 0; e < n_seg; ++e) {
    const MeshSegment& seg = mesh.segments[static_cast<size_t>(e)];
    test_nodes[static_cast<size_t>(e)] = detail::segment_nodes(seg, detail::kTestGauss);
    src_nodes[static_cast<size_t>(e)] = detail::segment_nodes(seg, detail::kSourceGauss);
    test_near[static_cast<size_t>(e)] = detail::segment_nodes(seg, detail::kNearTestGauss);
    src_near[static_cast<size_t>(e)] = detail::segment_nodes(seg, detail::kNearSourceGauss);
  }

  const Real f_vec = detail::pi_m(m) / (4.0 * kPi);
  const Real f_phi = c * c * detail::pi_m(m) / (4.0 * kPi);

  for (Eigen::Index et = 0; et < n_seg; ++et) {
    const MeshSegment& st = mesh.segments[static_cast<size_t>(et)];
    const Eigen::Index g_t = op->layout.has_phi ? op->layout.phi_dof(et) : -1;
    for (Eigen::Index es = 0; es < n_seg; ++es) {
      const MeshSegment& ss = mesh.segments[static_cast<size_t>(es)];
      const Eigen::Index g_s = op->layout.has_phi ? op->layout.phi_dof(es) : -1;

      // Pairs closer than a couple of chords see the kernel peak; give them
      // denser meridian rules and a finer azimuth quadrature.
      const bool near_pair =
          segment_gap(st, ss) < detail::kNearPairFactor * std::max(st.chord_length, ss.chord_length);
      const auto& t_rule = near_pair ? test_near[static_cast<size_t>(et)] : test_nodes[static_cast<size_t>(et)];
      const auto& s_rule = near_pair ? src_near[static_cast<size_t>(es)] : src_nodes[static_cast<size_t>(es)];
      const int psi_order = near_pair ? std::max(cfg.quadrature_order, detail::kNearPsiGauss)
                                      : cfg.quadrature_order;

      for (const QuadNode& tq : t_rule) {
        BasisAtNode tb[2];
        fill_t_basis(op->layout, st, et, tq, tb);

        for (const QuadNode& sn : s_rule) {
          BasisAtNode sb[2];
          fill_t_basis(op->layout, ss, es, sn, sb);

          const detail::RingKernels kern =
              detail::ring_kernels(tq.rho, tq.z, sn.rho, sn.z, m, c, op->dt, psi_order);

          const Real ww = tq.weight * sn.weight;
          const Real common = f_vec * ww * tq.rho * sn.rho;
          const Real geo_cc = st.cos_alpha * ss.cos_alpha;
          const Real geo_ss = st.sin_alpha * ss.sin_alpha;

          for (Eigen::Index col = 0; col < kern.moments.cols(); ++col) {
            const int k = kern.k_min + static_cast<int>(col);
            const Real c0 = kern.moments(0, col);
            const Real c1 = kern.moments(1, col);
            const Real s1 = kern.moments(2, col);
            if (c0 == 0.0 && c1 == 0.0 && s1 == 0.0) continue;
            Eigen::MatrixXd& za = op->za[static_cast<size_t>(k)];

            const Real tt_geo = geo_cc * c1 + geo_ss * c0;
            for (const BasisAtNode& ti : tb) {
              if (ti.dof < 0) continue;
              for (const BasisAtNode& sj : sb) {
                if (sj.dof < 0) continue;
                za(ti.dof, sj.dof) += common * ti.lambda * sj.lambda * tt_geo;
              }
              if (g_s >= 0) za(ti.dof, g_s) += common * ti.lambda * (-st.cos_alpha) * s1;
            }
            if (g_t >= 0) {
              for (const BasisAtNode& sj : sb) {
                if (sj.dof < 0) continue;
                za(g_t, sj.dof) += common * sj.lambda * (-ss.cos_alpha) * s1;
              }
              if (g_s >= 0) za(g_t, g_s) += common * c1;
            }

            // The line charge on the source segment is linear along the
            // chord; scatter the node onto the two chord-end moments.
            Eigen::MatrixXd& zphi = op->zphi[static_cast<size_t>(k)];
            const Real w0 = f_phi * ww * c0 * (1.0 - sn.xi);
            const Real w1 = f_phi * ww * c0 * sn.xi;
            for (const BasisAtNode& ti : tb) {
              if (ti.dof < 0) continue;
              zphi(ti.dof, 2 * es) += ti.d_rho_lambda * w0;
              zphi(ti.dof, 2 * es + 1) += ti.d_rho_lambda * w1;
            }
            if (g_t >= 0 && m != 0) {
              zphi(g_t, 2 * es) += static_cast<Real>(m) * w0;
              zphi(g_t, 2 * es + 1) += static_cast<Real>(m) * w1;
            }
          }
        }
      }
    }
  }

  // Charge-moment rate: pdot = -dp * u, with the divergence of the basis
  // evaluated at the chord ends.
  for (Eigen::Index es = 0; es < n_seg; ++es) {
    const MeshSegment& ss = mesh.segments[static_cast<size_t>(es)];
    for (int end = 0; end < 2; ++end) {
      QuadNode qn;
      qn.xi = static_cast<Real>(end);
      const Eigen::Vector2d pt = end == 0 ? ss.p0 : ss.p1;
      qn.rho = pt.x();
      qn.z = pt.y();
      BasisAtNode sb[2];
      fill_t_basis(op->layout, ss, es, qn, sb);
      const Eigen::Index ch = 2 * es + end;
      for (const BasisAtNode& sj : sb) {
        if (sj.dof >= 0) op->dp(ch, sj.dof) = sj.d_rho_lambda;
      }
      if (op->layout.has_phi && m != 0) op->dp(ch, op->layout.phi_dof(es)) = static_cast<Real>(m);
    }
  }

  // The exact interaction blocks are symmetric under test/source exchange;
  // staggered quadrature breaks that at finite order. Project back.
  for (auto& z : op->za) z = (0.5 * (z + z.transpose())).eval();

  // Step matrix for the implicit solve: self-term block of the backward
  // difference plus the new-step charge contribution of the trapezoid rule.
  Eigen::MatrixXd lhs = 3.0 * op->za[0];
  lhs.noalias() += (op->dt * op->dt) * (op->zphi[0] * op->dp);
  op->lu.compute(lhs);
  if (op->lu.rcond() < 1e-14) {
    throw InstabilityError("build_mot_operator: singular interaction matrix; "
                           "increase courant or mesh density");
  }
  return op;
}

SurfaceCurrentHistory march_on_in_time(const BorMesh& mesh, const PlaneWaveExcitation& exc, int m,
                                       const SolverConfig& cfg) {
  return march_on_in_time(*build_mot_operator(mesh, m, exc.polarization, cfg), exc, cfg);
}

SurfaceCurrentHistory march_on_in_time(const MotOperator& op, const PlaneWaveExcitation& exc,
                                       const SolverConfig& cfg) {
  require(exc.pulse.width > 0.0, "march_on_in_time: pulse width must be positive");
  require(exc.incidence_theta >= 0.0 && exc.incidence_theta <= kPi,
          "march_on_in_time: incidence_theta must lie in [0, pi]");
  require(exc.polarization == op.polarization,
          "march_on_in_time: operator was built for the other polarization");

  const BorMesh& mesh = op.mesh;
  const Real c = op.wave_speed;
  const Real dt = op.dt;

  // Earliest possible arrival over the surface, minimized over azimuth.
  Real proj_min = std::numeric_limits<Real>::max();
  const Real st_inc = std::sin(exc.incidence_theta);
  const Real ct_inc = std::cos(exc.incidence_theta);
  for (Eigen::Index i = 0; i < mesh.node_count(); ++i) {
    const Eigen::Vector2d p = mesh.node(i);
    proj_min = std::min(proj_min, ct_inc * p.y() - st_inc * p.x());
  }

  PlaneWaveExcitation run = exc;
  const Real min_peak = kPulseSupportWidths * exc.pulse.width - proj_min / c;
  if (run.pulse.peak_time == 0.0) {
    run.pulse.peak_time = min_peak;
  } else {
    require(run.pulse.peak_time >= min_peak - 1e-12,
            "march_on_in_time: pulse support would straddle t = 0 on the body");
  }

  Eigen::Index n_steps = cfg.n_steps;
  if (n_steps <= 0) {
    require(cfg.record_time > 0.0, "march_on_in_time: record_time must be positive");
    n_steps = static_cast<Eigen::Index>(
                  std::ceil((run.pulse.peak_time + cfg.record_time * mesh.a / c) / dt)) + 1;
  }
  require(n_steps >= 16, "march_on_in_time: too few time steps");
  const TimeGrid grid(0.0, dt, n_steps);

  const Parity parity = detail::parity_of(exc.polarization);
  const Eigen::MatrixXd v = detail::tested_excitation(mesh, op.layout, run, op.m, parity, grid, c,
                                                      cfg.phi_quadrature);

  const Eigen::Index nd = op.layout.total();
  const Eigen::Index nch = op.dp.rows();
  const int k_hist = static_cast<int>(op.za.size()) - 1;

  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(nd, n_steps);
  Eigen::MatrixXd charge = Eigen::MatrixXd::Zero(nch, n_steps);
  Eigen::VectorXd a_hist(nd), phi_t(nd), rhs(nd), comb(nd), dpu(nch);

  const Eigen::Index transit_steps =
      std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::ceil(std::max(mesh.a, mesh.L) / (c * dt))));
  // The current legitimately grows while the pulse is still driving the body;
  // only the free ring-down afterwards is checked for growth.
  const Eigen::Index guard_from = static_cast<Eigen::Index>(
      std::ceil((run.pulse.peak_time + kPulseSupportWidths * run.pulse.width) / dt));
  Real window_peak = 0.0;
  Real prev_window_peak = 0.0;
  int growth_windows = 0;

  // Backward-difference update tested at t_{i+1}:
  //   3 A(t_{i+1}) - 4 A(t_i) + A(t_{i-1}) = 2 dt (V(t_{i+1}) + Phi(t_{i+1}))
  // with the new-step charge of the trapezoid rule folded into the step
  // matrix, so only retarded history appears on the right-hand side.
  for (Eigen::Index i = 0; i + 1 < n_steps; ++i) {
    a_hist.setZero();
    phi_t.setZero();

    for (int k = 0; k <= k_hist; ++k) {
      const Eigen::Index i_new = i + 1 - k;
      const Eigen::Index i_mid = i - k;
      const Eigen::Index i_old = i - 1 - k;
      bool any = false;
      comb.setZero();
      if (k >= 1 && i_new >= 0) {
        comb.noalias() -= 3.0 * u.col(i_new);
        any = true;
      }
      if (i_mid >= 0) {
        comb.noalias() += 4.0 * u.col(i_mid);
        any = true;
      }
      if (i_old >= 0) {
        comb.noalias() -= u.col(i_old);
        any = true;
      }
      if (any) a_hist.noalias() += op.za[static_cast<size_t>(k)] * comb;
      if (k >= 1 && i_new >= 0) {
        phi_t.noalias() += op.zphi[static_cast<size_t>(k)] * charge.col(i_new);
      }
    }
    dpu.noalias() = op.dp * u.col(i);
    phi_t.noalias() += op.zphi[0] * (charge.col(i) - 0.5 * dt * dpu);

    rhs = 2.0 * dt * (v.col(i + 1) + phi_t) + a_hist;
    u.col(i + 1) = op.lu.solve(rhs);

    // Half-sample average of the new step plus three-point smoothing of the
    // completed one. Hat-sampled retardation leaves the alternating mode
    // nearly uncontrolled, so it must be quenched before it re-enters the
    // recursion; both averages have a spectral zero there.
    if (cfg.stabilization) {
      u.col(i + 1) = 0.5 * (u.col(i + 1) + u.col(i));
    }
    charge.col(i + 1) = charge.col(i) - 0.5 * dt * (dpu + op.dp * u.col(i + 1));
    if (cfg.stabilization && i >= 1) {
      u.col(i) = 0.25 * (u.col(i - 1) + u.col(i + 1)) + 0.5 * u.col(i);
    }

    window_peak = std::max(window_peak, u.col(i + 1).cwiseAbs().maxCoeff());
    if ((i + 1) % transit_steps == 0) {
      if (!std::isfinite(window_peak)) {
        throw InstabilityError("march_on_in_time: current history diverged (non-finite values)");
      }
      if (i + 1 > guard_from && prev_window_peak > 1e-300 &&
          window_peak > cfg.instability_growth * prev_window_peak) {
        if (++growth_windows >= 2) {
          throw InstabilityError("march_on_in_time: current norm grew by more than the configured "
                                 "factor over consecutive light-transits");
        }
      } else {
        growth_windows = 0;
      }
      prev_window_peak = window_peak;
      window_peak = 0.0;
    }
  }

  SurfaceCurrentHistory hist;
  hist.m = op.m;
  hist.polarization = exc.polarization;
  hist.incidence_theta = exc.incidence_theta;
  hist.pulse = run.pulse;
  hist.grid = grid;
  hist.mesh = mesh;
  hist.wave_speed = c;
  hist.t_nodes = Eigen::MatrixXd::Zero(n_steps, mesh.node_count());
  hist.phi_segments = Eigen::MatrixXd::Zero(n_steps, mesh.segment_count());
  for (size_t d = 0; d < op.layout.t_nodes.size(); ++d) {
    hist.t_nodes.col(op.layout.t_nodes[d]) = u.row(static_cast<Eigen::Index>(d)).transpose();
  }
  if (op.layout.has_phi) {
    hist.phi_segments = u.bottomRows(op.layout.n_phi).transpose();
  }
  return hist;
}

Eigen::MatrixXcd SurfaceCurrentHistory::t_hat_coefficients() const {
  const Eigen::Index n_seg = mesh.segment_count();
  Eigen::MatrixXcd out(t_nodes.rows(), n_seg);
  const Complex factor = polarization == Polarization::theta ? Complex(1.0, 0.0) : Complex(0.0, -1.0);
  for (Eigen::Index e = 0; e < n_seg; ++e) {
    out.col(e) = (0.5 * (t_nodes.col(e) + t_nodes.col(e + 1))).cast<Complex>() * factor;
  }
  return out;
}

Eigen::MatrixXcd SurfaceCurrentHistory::phi_hat_coefficients() const {
  const Complex factor = polarization == Polarization::theta ? Complex(0.0, -1.0) : Complex(-1.0, 0.0);
  return phi_segments.cast<Complex>() * factor;
}

std::vector<HarmonicResponse> solve_response(const BorGeometry& geometry,
                                             const PlaneWaveExcitation& exc, int m,
                                             const std::vector<std::pair<Real, Real>>& observation_angles,
                                             const SolverConfig& cfg) {
  require(!observation_angles.empty(), "solve_response: need at least one observation angle");
  const BorMesh mesh = discretize(geometry, cfg.density);
  const auto op = build_mot_operator(mesh, m, exc.polarization, cfg);
  const SurfaceCurrentHistory hist = march_on_in_time(*op, exc, cfg);
  std::vector<HarmonicResponse> out;
  out.reserve(observation_angles.size());
  for (const auto& [theta, phi] : observation_angles) out.push_back(far_field(hist, theta, phi));
  return out;
}

} // namespace borsem
