#include "borsem/excitation.hpp"

#include <cmath>

namespace borsem {

Real pulse_value(const GaussianPulse& pulse, Real t) {
  require(pulse.width > 0.0, "GaussianPulse: width must be positive");
  const Real u = (t - pulse.peak_time) / pulse.width;
  if (std::abs(u) >= kPulseSupportWidths) return 0.0;
  return pulse.amplitude * std::exp(-u * u);
}

Real auto_peak_time(Real width, Real t_start) {
  require(width > 0.0, "GaussianPulse: width must be positive");
  return t_start + kPulseSupportWidths * width;
}

TimeSeries sample_pulse(const GaussianPulse& pulse, const TimeGrid& grid) {
  Eigen::VectorXd values(grid.count);
  for (Eigen::Index k = 0; k < grid.count; ++k) values[k] = pulse_value(pulse, grid.time(k));
  return TimeSeries(grid, std::move(values));
}

} // namespace borsem
