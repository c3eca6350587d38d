#pragma once

#include <Eigen/Dense>

#include "borsem/core.hpp"

namespace borsem {

/// Uniform sampling grid, times are start + k*step.
struct TimeGrid {
  Real start = 0.0;
  Real step = 1.0;
  Eigen::Index count = 0;

  TimeGrid() = default;
  TimeGrid(Real start_, Real step_, Eigen::Index count_) : start(start_), step(step_), count(count_) {
    require(step > 0.0, "TimeGrid: step must be positive");
    require(count >= 2, "TimeGrid: need at least two samples");
  }

  [[nodiscard]] Real time(Eigen::Index k) const { return start + static_cast<Real>(k) * step; }
  [[nodiscard]] Real end() const { return time(count - 1); }
};

/// Real-valued waveform on a uniform grid.
struct TimeSeries {
  TimeGrid grid;
  Eigen::VectorXd values;

  TimeSeries() = default;
  TimeSeries(TimeGrid grid_, Eigen::VectorXd values_) : grid(grid_), values(std::move(values_)) {
    require(values.size() == grid.count, "TimeSeries: value count must match grid");
  }

  [[nodiscard]] Eigen::Index size() const { return values.size(); }
  [[nodiscard]] Real time(Eigen::Index k) const { return grid.time(k); }
};

/// Gaussian video pulse. `width` is the 1/e half-width; the waveform is
/// clamped to exactly zero beyond kPulseSupportWidths half-widths from the
/// peak so that arrivals are sharply causal.
struct GaussianPulse {
  Real amplitude = 1.0;
  Real width = 1.0;
  Real peak_time = 0.0;
};

inline constexpr Real kPulseSupportWidths = 4.0;

[[nodiscard]] Real pulse_value(const GaussianPulse& pulse, Real t);

/// Peak delay that keeps the clamped support entirely inside t >= t_start.
[[nodiscard]] Real auto_peak_time(Real width, Real t_start = 0.0);

[[nodiscard]] TimeSeries sample_pulse(const GaussianPulse& pulse, const TimeGrid& grid);

} // namespace borsem
