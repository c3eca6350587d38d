#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace borsem {

using Real = double;
using Complex = std::complex<Real>;

inline constexpr Real kPi = std::numbers::pi_v<Real>;

/// Thrown on invalid user input (bad config values, malformed geometry).
class ValidationError : public std::invalid_argument {
public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// Thrown when the time marching diverges past the configured growth bound.
class InstabilityError : public std::runtime_error {
public:
  explicit InstabilityError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& message) {
  if (!cond) throw ValidationError(message);
}

} // namespace borsem
