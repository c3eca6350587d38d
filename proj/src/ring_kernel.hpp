#pragma once

#include <Eigen/Dense>

#include "borsem/core.hpp"

namespace borsem::detail {

/// Azimuthal convolution moments of the retarded ring Green's function for
/// one (test point, source point) pair. Column k - k_min holds
///   2 * Int_0^pi w(psi) T(k*dt - R(psi)/c) / R(psi) dpsi
/// for the three weights w = cos(m psi), cos(psi)cos(m psi),
/// sin(psi)sin(m psi) (rows C0, C1, S1), where T is the unit hat of width dt
/// and R(psi) the chord between the points' rings. Buckets outside
/// [k_min, k_min + cols - 1] vanish.
struct RingKernels {
  int k_min = 0;
  Eigen::Matrix<Real, 3, Eigen::Dynamic> moments;
};

[[nodiscard]] RingKernels ring_kernels(Real rho_t, Real z_t, Real rho_s, Real z_s, int m, Real c,
                                       Real dt, int gauss_order = 8);

/// Static (no hat) moments 2 * Int_0^pi w(psi)/R dpsi, used as a
/// partition-of-unity cross-check: summing ring_kernels over k must
/// reproduce these.
[[nodiscard]] Eigen::Vector3d ring_static_moments(Real rho_t, Real z_t, Real rho_s, Real z_s, int m);

/// Gauss-Legendre rule mapped to [0, 1]; n is clamped to the supported range.
void gauss_unit_rule(int n, std::vector<Real>& xi, std::vector<Real>& weight);

} // namespace borsem::detail
