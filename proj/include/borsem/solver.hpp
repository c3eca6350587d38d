#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "borsem/excitation.hpp"
#include "borsem/geometry.hpp"

namespace borsem {

enum class Polarization { theta, phi };

/// Linearly polarized plane-wave Gaussian pulse. incidence_theta is measured
/// from the symmetry axis; the E-field plane defines phi = 0. A pulse
/// peak_time of 0 means "auto": the marcher delays the peak just enough that
/// the pulse support has not reached the body at t = 0.
struct PlaneWaveExcitation {
  GaussianPulse pulse;
  Real incidence_theta = 0.0;
  Polarization polarization = Polarization::theta;
};

struct SolverConfig {
  int density = 32;
  Real courant = 0.8;
  Eigen::Index n_steps = 0;      // 0: derive from record_time
  Real record_time = 28.0;       // response length after the pulse peak, in a/c units
  Real late_time_guard = 1.0;    // light-transits between forced decay and the fit window
  bool stabilization = true;     // three-point (1/4, 1/2, 1/4) temporal smoothing
  Real instability_growth = 8.0; // allowed per-transit growth of the current norm
  Real wave_speed = 1.0;
  int quadrature_order = 8;      // Gauss points per smooth ring-integral panel
  int phi_quadrature = 64;       // azimuth samples for tested incident fields
};

/// Modal surface current of one marching run. Values are the real expansion
/// coefficients f (t-hat, at generatrix nodes) and g (phi-hat, per segment)
/// of J_t = f(s,t) c_m(phi), J_phi = g(s,t) s_m(phi), where (c_m, s_m) is
/// (cos, sin) for theta polarization and (sin, -cos) for phi polarization.
/// Matrices are n_steps rows by node/segment columns.
struct SurfaceCurrentHistory {
  int m = 0;
  Polarization polarization = Polarization::theta;
  Real incidence_theta = 0.0;
  GaussianPulse pulse;  // peak_time resolved to its absolute value
  TimeGrid grid;
  BorMesh mesh;
  Real wave_speed = 1.0;
  Eigen::MatrixXd t_nodes;
  Eigen::MatrixXd phi_segments;

  /// Per-segment complex coefficients under J = Re[coeff * exp(i m phi)],
  /// t-hat values taken at segment midpoints.
  [[nodiscard]] Eigen::MatrixXcd t_hat_coefficients() const;
  [[nodiscard]] Eigen::MatrixXcd phi_hat_coefficients() const;
};

/// Far-zone scattered field of one harmonic: the co-polarized component,
/// range factor removed, time axis shifted so t = 0 is the instant the
/// incident peak passes the body center.
struct HarmonicResponse {
  int m = 0;
  Real incidence_theta = 0.0;
  Real observation_theta = 0.0;
  Real observation_phi = 0.0;
  Polarization polarization = Polarization::theta;
  TimeSeries field;
};

struct TangentialFieldPair {
  Real t_component = 0.0;
  Real phi_component = 0.0;
};

/// m-th azimuthal Fourier coefficient of the incident tangential field at a
/// surface point, in the same (c_m, s_m) convention as
/// SurfaceCurrentHistory. tangent_dir is the generatrix tangent (cos alpha,
/// sin alpha) defining the t-hat direction at the point.
[[nodiscard]] TangentialFieldPair incident_harmonic(const PlaneWaveExcitation& exc, int m,
                                                    const Eigen::Vector2d& point, Real t,
                                                    const Eigen::Vector2d& tangent_dir = {0.0, 1.0},
                                                    Real wave_speed = 1.0);

/// Retarded interaction operator of one (mesh, m, polarization) cell;
/// immutable and shareable between marches with different incidence.
class MotOperator;

[[nodiscard]] std::shared_ptr<const MotOperator> build_mot_operator(const BorMesh& mesh, int m,
                                                                    Polarization pol,
                                                                    const SolverConfig& cfg);

[[nodiscard]] SurfaceCurrentHistory march_on_in_time(const BorMesh& mesh,
                                                     const PlaneWaveExcitation& exc, int m,
                                                     const SolverConfig& cfg);

[[nodiscard]] SurfaceCurrentHistory march_on_in_time(const MotOperator& op,
                                                     const PlaneWaveExcitation& exc,
                                                     const SolverConfig& cfg);

[[nodiscard]] HarmonicResponse far_field(const SurfaceCurrentHistory& currents,
                                         Real observation_theta, Real observation_phi);

/// discretize + one march + far_field per observation (theta, phi) pair.
[[nodiscard]] std::vector<HarmonicResponse> solve_response(
    const BorGeometry& geometry, const PlaneWaveExcitation& exc, int m,
    const std::vector<std::pair<Real, Real>>& observation_angles, const SolverConfig& cfg);

} // namespace borsem
