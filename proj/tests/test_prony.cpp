#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <doctest.h>

#include "borsem/prony.hpp"
#include "borsem/signatures.hpp"

using namespace borsem;

namespace {

// real signal sum_i 2 Re(A_i exp(gamma_i t)) on the grid
TimeSeries synthesize(const std::vector<ResidueTerm>& pairs, const TimeGrid& grid) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(grid.count);
  for (Eigen::Index k = 0; k < grid.count; ++k) {
    const Real t = grid.time(k) - grid.start;
    for (const auto& term : pairs) {
      x[k] += 2.0 * (term.amplitude * std::exp(term.gamma * t)).real();
    }
  }
  return TimeSeries(grid, std::move(x));
}

// best relative pole error of each synthesis pole against the fit
Real worst_pole_error(const std::vector<ResidueTerm>& pairs, const PronyFit& fit) {
  Real worst = 0.0;
  for (const auto& p : pairs) {
    Real best = 1e300;
    for (const auto& t : fit.terms) best = std::min(best, std::abs(t.gamma - p.gamma));
    worst = std::max(worst, best / std::abs(p.gamma));
  }
  return worst;
}

Real worst_amplitude_error(const std::vector<ResidueTerm>& pairs, const PronyFit& fit) {
  Real worst = 0.0;
  for (const auto& p : pairs) {
    Real best_d = 1e300;
    Complex best_a;
    for (const auto& t : fit.terms) {
      if (std::abs(t.gamma - p.gamma) < best_d) {
        best_d = std::abs(t.gamma - p.gamma);
        best_a = t.amplitude;
      }
    }
    worst = std::max(worst, std::abs(best_a - p.amplitude) / std::abs(p.amplitude));
  }
  return worst;
}

} // namespace

TEST_CASE("noiseless two-pair fit is exact to near machine precision") {
  const std::vector<ResidueTerm> pairs = {{{-0.33, 0.62}, {0.8, 0.3}},
                                          {{-1.03, 1.62}, {0.5, -0.2}}};
  const TimeGrid grid{0.0, 0.1, 240};
  const TimeSeries x = synthesize(pairs, grid);
  const PronyFit fit = prony_fit(x, 4);
  REQUIRE(fit.terms.size() == 4);
  CHECK(worst_pole_error(pairs, fit) < 1e-9);
  CHECK(worst_amplitude_error(pairs, fit) < 1e-9);
  CHECK(fit.residual_rms < 1e-10);
}

TEST_CASE("single real decay is recovered exactly") {
  TimeGrid grid{2.0, 0.05, 120};
  Eigen::VectorXd v(grid.count);
  for (Eigen::Index k = 0; k < grid.count; ++k) v[k] = 3.0 * std::exp(-0.7 * 0.05 * k);
  const PronyFit fit = prony_fit(TimeSeries(grid, v), 1);
  REQUIRE(fit.terms.size() == 1);
  CHECK(fit.terms[0].gamma.real() == doctest::Approx(-0.7).epsilon(1e-10));
  CHECK(std::abs(fit.terms[0].gamma.imag()) < 1e-10);
  CHECK(fit.terms[0].amplitude.real() == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(fit.t_ref == doctest::Approx(2.0));
}

TEST_CASE("poles from every bundled table row are recovered from clean data") {
  // the acceptance property at unit-test scale: one row per body
  const SignatureLibrary& lib = reference_library();
  for (const auto& entry : lib.entries) {
    if (entry.m != 0) continue;
    std::vector<ResidueTerm> pairs;
    for (size_t i = 0; i < entry.poles.size() && i < 2; ++i) {
      pairs.push_back({entry.poles[i].value, Complex(1.0, 0.4 * static_cast<Real>(i))});
    }
    const TimeGrid grid{0.0, 0.15, 220};
    const TimeSeries x = synthesize(pairs, grid);
    const PronyFit fit = prony_fit(x, 2 * static_cast<int>(pairs.size()));
    CHECK(worst_pole_error(pairs, fit) < 1e-6);
    CHECK(worst_amplitude_error(pairs, fit) < 1e-6);
  }
}

TEST_CASE("window fits re-reference amplitudes to the window start") {
  const std::vector<ResidueTerm> pairs = {{{-0.4, 1.1}, {0.9, 0.1}}};
  const TimeGrid grid{0.0, 0.08, 400};
  const TimeSeries x = synthesize(pairs, grid);
  const LateTimeWindow win{150, 200, 1.0};
  const PronyFit fit = prony_fit(x, win, 2);
  REQUIRE(fit.terms.size() == 2);
  CHECK(fit.t_ref == doctest::Approx(150 * 0.08));
  // same pole, amplitude advanced by exp(gamma * t_ref)
  Real best = 1e300;
  Complex amp;
  for (const auto& t : fit.terms) {
    if (std::abs(t.gamma - pairs[0].gamma) < best) {
      best = std::abs(t.gamma - pairs[0].gamma);
      amp = t.amplitude;
    }
  }
  CHECK(best < 1e-8);
  const Complex expected = pairs[0].amplitude * std::exp(pairs[0].gamma * (150 * 0.08));
  CHECK(std::abs(amp - expected) < 1e-8);
}

TEST_CASE("a Nyquist-rate component is flagged as aliased") {
  const Real dt = 0.1;
  TimeGrid grid{0.0, dt, 100};
  Eigen::VectorXd v(grid.count);
  for (Eigen::Index k = 0; k < grid.count; ++k) {
    v[k] = std::exp(-0.2 * dt * k) * ((k % 2) ? -1.0 : 1.0);
  }
  const PronyFit fit = prony_fit(TimeSeries(grid, v), 1);
  REQUIRE(fit.terms.size() == 1);
  CHECK(!fit.aliased.empty());
  CHECK(std::abs(fit.terms[0].gamma.imag()) == doctest::Approx(kPi / dt).epsilon(1e-9));
}

TEST_CASE("reconstruction reproduces the data and demands conjugate symmetry") {
  const std::vector<ResidueTerm> pairs = {{{-0.5, 2.0}, {1.0, 0.5}}, {{-1.1, 0.0}, {0.7, 0.0}}};
  const TimeGrid grid{1.0, 0.07, 150};
  const TimeSeries x = synthesize(pairs, grid);
  // note: the real pole synthesized with weight 2 Re(.) = 1.4
  const PronyFit fit = prony_fit(x, 3);
  const TimeSeries back = reconstruct(fit, grid);
  CHECK((back.values - x.values).cwiseAbs().maxCoeff() < 1e-9);

  PronyFit lopsided = fit;
  lopsided.terms.resize(1); // drop the conjugate partner
  lopsided.terms[0].gamma = Complex(-0.5, 2.0);
  lopsided.terms[0].amplitude = Complex(1.0, 0.5);
  CHECK_THROWS_AS((void)reconstruct(lopsided, grid), ValidationError);
}

TEST_CASE("order estimation counts the active pole pairs") {
  const std::vector<ResidueTerm> pairs = {
      {{-0.3, 0.9}, {1.0, 0.0}}, {{-0.6, 2.2}, {0.6, 0.3}}, {{-0.9, 3.8}, {0.4, -0.1}}};
  const TimeGrid grid{0.0, 0.06, 400};
  TimeSeries x = synthesize(pairs, grid);
  std::mt19937_64 rng(7);
  std::normal_distribution<Real> noise(0.0, 1e-10);
  for (Eigen::Index k = 0; k < x.size(); ++k) x.values[k] += noise(rng);
  CHECK(estimate_order(x, 10, 1e-6) == 6);
  CHECK(estimate_order(x, 4, 1e-6) == 4); // capped at max_order
  CHECK_THROWS_AS((void)estimate_order(TimeSeries(TimeGrid{0.0, 1.0, 8}, Eigen::VectorXd::Zero(8)),
                                       5, 1e-6),
                  ValidationError);
}

TEST_CASE("refinement never worsens the residual on noisy data") {
  const std::vector<ResidueTerm> pairs = {{{-0.35, 1.4}, {1.0, 0.2}}, {{-0.8, 3.1}, {0.5, 0.0}}};
  const TimeGrid grid{0.0, 0.05, 320};
  TimeSeries x = synthesize(pairs, grid);
  std::mt19937_64 rng(11);
  std::normal_distribution<Real> noise(0.0, 1e-3);
  for (Eigen::Index k = 0; k < x.size(); ++k) x.values[k] += noise(rng);
  const PronyFit raw = prony_fit(x, 4);
  const PronyFit polished = refine_fit(raw, x);
  CHECK(polished.residual_rms <= raw.residual_rms + 1e-15);
  CHECK(worst_pole_error(pairs, polished) < 2e-2);
}

TEST_CASE("late window opens after the guard and skips the dead tail") {
  const Real dt = 0.05;
  TimeGrid grid{0.0, dt, 600};
  Eigen::VectorXd v = Eigen::VectorXd::Zero(grid.count);
  for (Eigen::Index k = 0; k < grid.count; ++k) {
    const Real t = grid.time(k);
    if (t < 5.0) v[k] = 2.0 * std::sin(8.0 * t); // forced epoch
    else if (t < 20.0) v[k] = std::exp(-0.4 * (t - 5.0)) * std::cos(2.0 * t);
    // beyond 20: exactly zero
  }
  WindowPolicy policy;
  policy.forced_end_time = 5.0;
  policy.guard = 2.0;
  policy.envelope_floor = 1e-9;
  const TimeSeries x(grid, v);
  const LateTimeWindow win = select_late_window(x, 0.5, policy);
  CHECK(win.start_index == doctest::Approx(std::ceil(6.0 / dt)));
  CHECK(win.start_index + win.length <= 1 + static_cast<Eigen::Index>(20.0 / dt));
  CHECK(win.forced_energy_remaining < 0.05);
  CHECK(win.forced_energy_remaining > 0.0);

  // window must not open past the end of the data
  policy.forced_end_time = 40.0;
  CHECK_THROWS_AS((void)select_late_window(x, 0.5, policy), ValidationError);
}
