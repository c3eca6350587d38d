#pragma once

#include <vector>

#include <Eigen/Dense>

#include "borsem/excitation.hpp"

namespace borsem {

/// One term A*exp(gamma*t) of a complex-exponential expansion.
struct ResidueTerm {
  Complex gamma{0.0, 0.0};
  Complex amplitude{0.0, 0.0};
};

struct FitWindow {
  Eigen::Index start = 0;
  Eigen::Index length = 0;
};

/// Result of a Prony fit. Amplitudes are referenced to t_ref (the absolute
/// time of the first window sample): sample k of the window is modeled as
/// sum_i amplitude_i * exp(gamma_i * k * dt).
struct PronyFit {
  std::vector<ResidueTerm> terms;
  FitWindow window{0, 0};
  Real dt = 0.0;
  Real t_ref = 0.0;
  Real residual_rms = 0.0;
  int order = 0;
  int requested_order = 0;
  int discarded_roots = 0;
  bool refined = false;
  std::vector<int> aliased;
};

/// Late-time analysis window. forced_energy_remaining is the fraction of the
/// series' total energy located at or after start_index.
struct LateTimeWindow {
  Eigen::Index start_index = 0;
  Eigen::Index length = 0;
  Real forced_energy_remaining = 0.0;
};

struct WindowPolicy {
  Real forced_end_time = 0.0;
  Real guard = 1.0;
  Eigen::Index min_length = 8;
  Real envelope_floor = 1e-8;
};

/// Picks a window starting after the driven component has cleared the body
/// (forced_end_time plus guard light-transits) and ending where the response
/// falls below envelope_floor of its peak.
[[nodiscard]] LateTimeWindow select_late_window(const TimeSeries& resp, Real body_transit,
                                                const WindowPolicy& policy);

/// Least-squares Prony fit of the whole series (the series is the window).
[[nodiscard]] PronyFit prony_fit(const TimeSeries& window_samples, int order);

[[nodiscard]] PronyFit prony_fit(const TimeSeries& resp, const LateTimeWindow& win, int order);

/// Numerical rank of the data Hankel matrix at a relative SVD threshold.
[[nodiscard]] int estimate_order(const TimeSeries& window_samples, int max_order,
                                 Real svd_threshold = 1e-8);

[[nodiscard]] int estimate_order(const TimeSeries& resp, const LateTimeWindow& win, int max_order,
                                 Real svd_threshold = 1e-8);

/// Evaluates the fit on a grid; requires near-real results (conjugate-,
/// symmetric terms), errors otherwise.
[[nodiscard]] TimeSeries reconstruct(const PronyFit& fit, const TimeGrid& grid);

/// Variable-projection polish: iterates on pole locations with amplitudes
/// eliminated by a linear solve at every step. Never increases residual_rms;
/// returns the input flagged unrefined if iteration fails to improve it.
[[nodiscard]] PronyFit refine_fit(const PronyFit& fit, const TimeSeries& window_samples);

[[nodiscard]] PronyFit refine_fit(const PronyFit& fit, const TimeSeries& resp, const LateTimeWindow& win);

} // namespace borsem
