#include "borsem/prony.hpp"

#include <algorithm>
#include <cmath>

namespace borsem {

namespace {

constexpr Real kAliasTol = 1e-8;
constexpr Real kRootFloor = 1e-12;

TimeSeries slice(const TimeSeries& resp, const LateTimeWindow& win) {
  require(win.start_index >= 0 && win.length >= 2 && win.start_index + win.length <= resp.size(),
          "window must lie inside the series");
  TimeGrid grid(resp.grid.time(win.start_index), resp.grid.step, win.length);
  return TimeSeries(grid, resp.values.segment(win.start_index, win.length));
}

struct PairedModel {
  // Conjugate pairs as (sigma, omega > 0), real poles as sigma only.
  std::vector<std::pair<Real, Real>> pairs;
  std::vector<Real> reals;
};

PairedModel pair_up(const std::vector<ResidueTerm>& terms) {
  PairedModel model;
  for (const auto& term : terms) {
    const Real scale = std::abs(term.gamma) + 1.0;
    if (term.gamma.imag() > 1e-12 * scale) {
      model.pairs.emplace_back(term.gamma.real(), term.gamma.imag());
    } else if (term.gamma.imag() >= -1e-12 * scale) {
      model.reals.push_back(term.gamma.real());
    }
  }
  return model;
}

// Basis columns for the paired model on local times k*dt: per pair the
// columns exp(s t)cos(w t), exp(s t)sin(w t); per real pole exp(s t).
Eigen::MatrixXd pair_basis(const PairedModel& m, Eigen::Index n, Real dt) {
  const Eigen::Index cols = 2 * static_cast<Eigen::Index>(m.pairs.size()) +
                            static_cast<Eigen::Index>(m.reals.size());
  Eigen::MatrixXd phi(n, cols);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Real t = static_cast<Real>(k) * dt;
    Eigen::Index c = 0;
    for (const auto& [s, w] : m.pairs) {
      const Real e = std::exp(s * t);
      phi(k, c++) = e * std::cos(w * t);
      phi(k, c++) = e * std::sin(w * t);
    }
    for (const Real s : m.reals) phi(k, c++) = std::exp(s * t);
  }
  return phi;
}

std::vector<ResidueTerm> pair_terms(const PairedModel& m, const Eigen::VectorXd& beta) {
  std::vector<ResidueTerm> terms;
  Eigen::Index c = 0;
  for (const auto& [s, w] : m.pairs) {
    const Real b1 = beta[c++];
    const Real b2 = beta[c++];
    const Complex amp(b1 / 2.0, -b2 / 2.0);
    terms.push_back({Complex(s, w), amp});
    terms.push_back({Complex(s, -w), std::conj(amp)});
  }
  for (const Real s : m.reals) terms.push_back({Complex(s, 0.0), Complex(beta[c++], 0.0)});
  return terms;
}

Real fit_rms(const Eigen::VectorXd& residual) {
  if (residual.size() == 0) return 0.0;
  return std::sqrt(residual.squaredNorm() / static_cast<Real>(residual.size()));
}

PronyFit fit_core(const Eigen::VectorXd& x, Real dt, Real t_ref, int order) {
  require(dt > 0.0, "prony_fit: dt must be positive");
  require(order >= 1, "prony_fit: order must be at least 1");
  const Eigen::Index n = x.size();
  require(n >= 2 * order, "prony_fit: window length must be at least 2*order");

  PronyFit fit;
  fit.window = {0, n};
  fit.dt = dt;
  fit.t_ref = t_ref;
  fit.requested_order = order;

  // Forward linear prediction, reducing the order if the system is
  // rank-deficient (fewer modes present than requested).
  int p = order;
  Eigen::VectorXd coeff;
  while (p >= 1) {
    Eigen::MatrixXd lp(n - p, p);
    for (Eigen::Index r = 0; r < n - p; ++r)
      for (int k = 0; k < p; ++k) lp(r, k) = x[r + p - 1 - k];
    Eigen::BDCSVD<Eigen::MatrixXd> svd(lp, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const int rank = static_cast<int>(svd.rank());
    if (rank < p) {
      p = rank;
      continue;
    }
    coeff = svd.solve(-x.segment(p, n - p));
    break;
  }
  fit.order = p;
  if (p == 0) {
    fit.residual_rms = fit_rms(x);
    return fit;
  }

  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
  companion.row(0) = -coeff.transpose();
  if (p > 1) companion.block(1, 0, p - 1, p - 1).setIdentity();
  const Eigen::VectorXcd roots = Eigen::EigenSolver<Eigen::MatrixXd>(companion, false).eigenvalues();

  std::vector<Complex> z;
  for (Eigen::Index i = 0; i < roots.size(); ++i) {
    if (std::abs(roots[i]) <= kRootFloor) {
      ++fit.discarded_roots;
      continue;
    }
    z.push_back(roots[i]);
  }
  fit.order = static_cast<int>(z.size());
  if (z.empty()) {
    fit.residual_rms = fit_rms(x);
    return fit;
  }

  Eigen::MatrixXcd vand(n, static_cast<Eigen::Index>(z.size()));
  for (size_t j = 0; j < z.size(); ++j) {
    Complex zp(1.0, 0.0);
    for (Eigen::Index k = 0; k < n; ++k) {
      vand(k, static_cast<Eigen::Index>(j)) = zp;
      zp *= z[j];
    }
  }
  const Eigen::VectorXcd amps =
      Eigen::BDCSVD<Eigen::MatrixXcd>(vand, Eigen::ComputeThinU | Eigen::ComputeThinV)
          .solve(x.cast<Complex>().eval());

  for (size_t j = 0; j < z.size(); ++j) {
    const Real arg = std::arg(z[j]);
    if (kPi - std::abs(arg) <= kAliasTol * kPi) fit.aliased.push_back(static_cast<int>(j));
    fit.terms.push_back({Complex(std::log(std::abs(z[j])) / dt, arg / dt),
                         amps[static_cast<Eigen::Index>(j)]});
  }

  const Eigen::VectorXd model = (vand * amps).real();
  fit.residual_rms = fit_rms(x - model);
  return fit;
}

PronyFit refine_core(const PronyFit& fit, const Eigen::VectorXd& x) {
  if (fit.terms.empty()) return fit;
  const Eigen::Index n = x.size();
  PairedModel model = pair_up(fit.terms);
  const Eigen::Index n_par = 2 * static_cast<Eigen::Index>(model.pairs.size()) +
                             static_cast<Eigen::Index>(model.reals.size());
  if (n_par == 0 || n < n_par + 2) return fit;

  const auto solve_linear = [&](const PairedModel& m, Eigen::VectorXd& beta, Eigen::VectorXd& resid) {
    const Eigen::MatrixXd phi = pair_basis(m, n, fit.dt);
    beta = phi.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(x);
    resid = x - phi * beta;
  };

  Eigen::VectorXd beta, resid;
  solve_linear(model, beta, resid);
  Real best = resid.squaredNorm();
  PairedModel best_model = model;
  Eigen::VectorXd best_beta = beta;

  Real lambda = 1e-3;
  for (int iter = 0; iter < 60; ++iter) {
    // Jacobian of the model output w.r.t. pole parameters, amplitudes held
    // at their current linear-solve values.
    Eigen::MatrixXd jac(n, n_par);
    for (Eigen::Index k = 0; k < n; ++k) {
      const Real t = static_cast<Real>(k) * fit.dt;
      Eigen::Index c = 0;
      Eigen::Index pcol = 0;
      for (const auto& [s, w] : model.pairs) {
        const Real e = std::exp(s * t);
        const Real cw = std::cos(w * t);
        const Real sw = std::sin(w * t);
        const Real b1 = beta[c];
        const Real b2 = beta[c + 1];
        jac(k, pcol) = t * e * (b1 * cw + b2 * sw);
        jac(k, pcol + 1) = t * e * (-b1 * sw + b2 * cw);
        c += 2;
        pcol += 2;
      }
      for (size_t j = 0; j < model.reals.size(); ++j) {
        jac(k, pcol + static_cast<Eigen::Index>(j)) = t * std::exp(model.reals[j] * t) * beta[c + static_cast<Eigen::Index>(j)];
      }
    }

    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * resid;
    if (jtr.norm() <= 1e-14 * (1.0 + std::sqrt(best))) break;

    bool stepped = false;
    for (int attempt = 0; attempt < 8; ++attempt) {
      Eigen::MatrixXd damped = jtj;
      damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::VectorXd delta = damped.ldlt().solve(jtr);
      PairedModel trial = model;
      Eigen::Index c = 0;
      for (auto& [s, w] : trial.pairs) {
        s += delta[c++];
        w = std::abs(w + delta[c++]);
      }
      for (auto& s : trial.reals) s += delta[c++];

      Eigen::VectorXd trial_beta, trial_resid;
      solve_linear(trial, trial_beta, trial_resid);
      const Real trial_cost = trial_resid.squaredNorm();
      if (trial_cost < best) {
        model = trial;
        beta = trial_beta;
        resid = trial_resid;
        best = trial_cost;
        best_model = model;
        best_beta = beta;
        lambda = std::max(lambda / 3.0, 1e-12);
        stepped = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!stepped) break;
  }

  PronyFit out = fit;
  const Real refined_rms = std::sqrt(best / static_cast<Real>(n));
  if (refined_rms > fit.residual_rms + 1e-14 * fit_rms(x)) {
    out.refined = false;
    return out;
  }
  out.terms = pair_terms(best_model, best_beta);
  out.order = static_cast<int>(out.terms.size());
  out.residual_rms = refined_rms;
  out.refined = true;
  out.aliased.clear();
  return out;
}

} // namespace

LateTimeWindow select_late_window(const TimeSeries& resp, Real body_transit, const WindowPolicy& policy) {
  require(body_transit >= 0.0, "select_late_window: body_transit must be non-negative");
  require(resp.size() >= 2, "select_late_window: series too short");

  const Real start_time = policy.forced_end_time + policy.guard * body_transit;
  Eigen::Index start = static_cast<Eigen::Index>(std::ceil((start_time - resp.grid.start) / resp.grid.step - 1e-9));
  start = std::max<Eigen::Index>(start, 0);

  const Real peak = resp.values.cwiseAbs().maxCoeff();
  Eigen::Index end = resp.size() - 1;
  if (peak > 0.0) {
    while (end > start && std::abs(resp.values[end]) < policy.envelope_floor * peak) --end;
  }

  const Eigen::Index length = end - start + 1;
  if (start >= resp.size() || length < policy.min_length) {
    throw ValidationError("select_late_window: series ends before a usable late-time window; "
                          "increase n_steps to record a longer response");
  }

  const Real total = resp.values.squaredNorm();
  const Real tail = resp.values.segment(start, resp.size() - start).squaredNorm();
  return {start, length, total > 0.0 ? tail / total : 0.0};
}

PronyFit prony_fit(const TimeSeries& window_samples, int order) {
  return fit_core(window_samples.values, window_samples.grid.step, window_samples.grid.start, order);
}

PronyFit prony_fit(const TimeSeries& resp, const LateTimeWindow& win, int order) {
  const TimeSeries w = slice(resp, win);
  PronyFit fit = fit_core(w.values, w.grid.step, w.grid.start, order);
  fit.window = {win.start_index, win.length};
  return fit;
}

int estimate_order(const TimeSeries& window_samples, int max_order, Real svd_threshold) {
  require(max_order >= 1, "estimate_order: max_order must be at least 1");
  const Eigen::VectorXd& x = window_samples.values;
  const Eigen::Index n = x.size();
  require(n >= 2 * max_order, "estimate_order: window length must be at least 2*max_order");

  const Eigen::Index cols = max_order + 1;
  Eigen::MatrixXd hankel(n - max_order, cols);
  for (Eigen::Index i = 0; i < n - max_order; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) hankel(i, j) = x[i + j];

  const Eigen::VectorXd sv = hankel.bdcSvd().singularValues();
  if (sv.size() == 0 || sv[0] <= 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > svd_threshold * sv[0]) ++rank;
  return std::min(rank, max_order);
}

int estimate_order(const TimeSeries& resp, const LateTimeWindow& win, int max_order, Real svd_threshold) {
  return estimate_order(slice(resp, win), max_order, svd_threshold);
}

TimeSeries reconstruct(const PronyFit& fit, const TimeGrid& grid) {
  Eigen::VectorXd values(grid.count);
  Real max_im = 0.0;
  Real max_mag = 0.0;
  for (Eigen::Index k = 0; k < grid.count; ++k) {
    Complex sum(0.0, 0.0);
    const Real t = grid.time(k) - fit.t_ref;
    for (const auto& term : fit.terms) sum += term.amplitude * std::exp(term.gamma * t);
    values[k] = sum.real();
    max_im = std::max(max_im, std::abs(sum.imag()));
    max_mag = std::max(max_mag, std::abs(sum));
  }
  if (max_mag > 0.0 && max_im > 1e-6 * max_mag) {
    throw ValidationError("reconstruct: fit is not conjugate-symmetric (large imaginary residue)");
  }
  return TimeSeries(grid, std::move(values));
}

PronyFit refine_fit(const PronyFit& fit, const TimeSeries& window_samples) {
  PronyFit shifted = fit;
  // Re-reference amplitudes to the window start if the fit came from elsewhere.
  const Real offset = window_samples.grid.start - fit.t_ref;
  if (offset != 0.0) {
    for (auto& term : shifted.terms) term.amplitude *= std::exp(term.gamma * offset);
    shifted.t_ref = window_samples.grid.start;
  }
  shifted.dt = window_samples.grid.step;
  PronyFit out = refine_core(shifted, window_samples.values);
  out.window = {0, window_samples.size()};
  return out;
}

PronyFit refine_fit(const PronyFit& fit, const TimeSeries& resp, const LateTimeWindow& win) {
  PronyFit out = refine_fit(fit, slice(resp, win));
  out.window = {win.start_index, win.length};
  return out;
}

} // namespace borsem
