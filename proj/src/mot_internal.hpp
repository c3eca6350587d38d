#pragma once

#include <cmath>
#include <vector>

#include "borsem/solver.hpp"
#include "ring_kernel.hpp"

namespace borsem::detail {

/// Modal azimuth convention: theta polarization couples to (cos m phi,
/// sin m phi) for (J_t, J_phi), phi polarization to (sin m phi, -cos m phi).
enum class Parity { even, odd };

inline Parity parity_of(Polarization p) {
  return p == Polarization::theta ? Parity::even : Parity::odd;
}

inline Real pi_m(int m) { return m == 0 ? 2.0 * kPi : kPi; }

inline Real cm(Parity par, int m, Real phi) {
  return par == Parity::even ? std::cos(m * phi) : std::sin(m * phi);
}

inline Real sm(Parity par, int m, Real phi) {
  return par == Parity::even ? std::sin(m * phi) : -std::cos(m * phi);
}

/// Propagation and polarization unit vectors; the E-plane defines phi = 0.
inline Eigen::Vector3d wave_direction(Real incidence_theta) {
  return {std::sin(incidence_theta), 0.0, std::cos(incidence_theta)};
}

inline Eigen::Vector3d polarization_vector(const PlaneWaveExcitation& exc) {
  if (exc.polarization == Polarization::theta) {
    return {std::cos(exc.incidence_theta), 0.0, -std::sin(exc.incidence_theta)};
  }
  return {0.0, 1.0, 0.0};
}

/// Degrees of freedom of one (mesh, m, parity) cell: triangle coefficients
/// on generatrix nodes for the t-hat current (axis endpoints join in only
/// for m = 1), one pulse per segment for the phi-hat current.
struct DofLayout {
  bool has_t = false;
  bool has_phi = false;
  std::vector<Eigen::Index> t_nodes;
  std::vector<Eigen::Index> node_dof;  // node index -> t dof index or -1
  Eigen::Index n_t = 0;
  Eigen::Index n_phi = 0;

  [[nodiscard]] Eigen::Index total() const { return n_t + n_phi; }
  [[nodiscard]] Eigen::Index phi_dof(Eigen::Index seg) const { return n_t + seg; }
};

DofLayout make_layout(const BorMesh& mesh, int m, Parity parity);

inline constexpr int kTestGauss = 3;
inline constexpr int kSourceGauss = 4;
// Close segment pairs get denser rules; distinct orders keep the staggered
// nodes off the kernel singularity.
inline constexpr int kNearTestGauss = 8;
inline constexpr int kNearSourceGauss = 10;
inline constexpr int kNearPsiGauss = 12;
inline constexpr Real kNearPairFactor = 2.0;

struct QuadNode {
  Real xi = 0.0;      // normalized position along the chord in [0, 1]
  Real weight = 0.0;  // includes the chord-length jacobian
  Real rho = 0.0;
  Real z = 0.0;
};

std::vector<QuadNode> segment_nodes(const MeshSegment& seg, int order);

/// Tested incident-field matrix, one column per time step.
Eigen::MatrixXd tested_excitation(const BorMesh& mesh, const DofLayout& layout,
                                  const PlaneWaveExcitation& exc, int m, Parity parity,
                                  const TimeGrid& grid, Real wave_speed, int n_phi_samples);

} // namespace borsem::detail

namespace borsem {

/// Retarded interaction matrices of one (mesh, m, polarization) cell.
/// za[k] acts on current coefficients delayed k steps; zphi[k] acts on the
/// accumulated charge moments at source quadrature nodes; dp maps current
/// coefficients to minus the charge-moment rate.
class MotOperator {
public:
  BorMesh mesh;
  int m = 0;
  Polarization polarization = Polarization::theta;
  Real dt = 0.0;
  Real wave_speed = 1.0;
  detail::DofLayout layout;
  std::vector<Eigen::MatrixXd> za;
  std::vector<Eigen::MatrixXd> zphi;
  Eigen::MatrixXd dp;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu;  // factor of the implicit step matrix
  SolverConfig cfg;
};

} // namespace borsem
