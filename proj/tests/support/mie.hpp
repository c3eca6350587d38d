#pragma once

// Frequency-domain backscatter of a perfectly conducting sphere, used as an
// independent oracle for the time-domain solver's spectrum.

#include <cmath>
#include <complex>
#include <vector>

namespace mie {

using Complex = std::complex<double>;

// spherical Bessel j_n(x), downward recurrence (stable for all n, x > 0)
inline std::vector<double> bessel_j(int n_max, double x) {
  const int start = n_max + 16 + static_cast<int>(x);
  std::vector<double> tmp(start + 2, 0.0);
  tmp[start + 1] = 0.0;
  tmp[start] = 1e-30;
  for (int n = start; n >= 1; --n) {
    tmp[n - 1] = (2.0 * n + 1.0) / x * tmp[n] - tmp[n + 1];
  }
  const double scale = (std::sin(x) / x) / tmp[0];
  std::vector<double> j(n_max + 1);
  for (int n = 0; n <= n_max; ++n) j[n] = tmp[n] * scale;
  return j;
}

// spherical Bessel y_n(x), upward recurrence (stable)
inline std::vector<double> bessel_y(int n_max, double x) {
  std::vector<double> y(n_max + 1);
  y[0] = -std::cos(x) / x;
  if (n_max >= 1) y[1] = -std::cos(x) / (x * x) - std::sin(x) / x;
  for (int n = 1; n < n_max; ++n) {
    y[n + 1] = (2.0 * n + 1.0) / x * y[n] - y[n - 1];
  }
  return y;
}

/// Backscatter far-field amplitude f of a PEC sphere of radius a at size
/// parameter x = k a, in the "E_s * r / E_0" normalization (length units of
/// a): f = (i/k) sum_n (-1)^n (n + 1/2) (b_n - a_n), exp(+iwt) convention.
inline Complex backscatter_amplitude(double x, double a) {
  const int n_max = 8 + static_cast<int>(x + 4.0 * std::cbrt(x));
  const std::vector<double> j = bessel_j(n_max + 1, x);
  const std::vector<double> y = bessel_y(n_max + 1, x);
  Complex sum(0.0, 0.0);
  double sign = -1.0; // (-1)^n starting at n = 1
  for (int n = 1; n <= n_max; ++n) {
    const Complex h2(j[n], -y[n]); // h_n^(2) = j_n - i y_n
    // Riccati derivatives [x z_n(x)]' = x z_{n-1}(x) - n z_n(x)
    const double dj = x * j[n - 1] - n * j[n];
    const Complex dh2 = Complex(x * j[n - 1], -x * y[n - 1]) - static_cast<double>(n) * h2;
    const Complex an = j[n] / h2;
    const Complex bn = dj / dh2;
    sum += sign * (n + 0.5) * (bn - an);
    sign = -sign;
  }
  const double k = x / a;
  return Complex(0.0, 1.0) / k * sum;
}

} // namespace mie
