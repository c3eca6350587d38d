#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>

#include "borsem/pipeline.hpp"

namespace borsem {

namespace {

constexpr Real kSignalFloor = 1e-10; // relative to pulse amplitude

// Angular frequency where the Gaussian spectrum exp(-(w*width)^2/4) falls to
// one percent of its peak; poles beyond it are outside the excitation band.
constexpr Real kPulseBandFactor = 4.3;

Real pulse_band_limit(const GaussianPulse& pulse) {
  return pulse.width > 0.0 ? kPulseBandFactor / pulse.width : 0.0;
}

std::string m_tag(int m) { return m == kSumHarmonics ? "sum" : std::to_string(m); }

std::string cell_stem(const std::string& body, int m, int incidence_index) {
  return body + "_m" + m_tag(m) + "_i" + std::to_string(incidence_index);
}

// Latest arrival of driven (forced) scattering on the far-field time axis,
// bounded over the surface and both azimuth extremes.
Real forced_exit_time(const BorMesh& mesh, Real theta_inc, Real theta_obs, Real width, Real c) {
  const Real sti = std::sin(theta_inc);
  const Real cti = std::cos(theta_inc);
  const Real sto = std::sin(theta_obs);
  const Real cto = std::cos(theta_obs);
  Real inc_max = std::numeric_limits<Real>::lowest();
  Real obs_min = std::numeric_limits<Real>::max();
  for (Eigen::Index i = 0; i < mesh.node_count(); ++i) {
    const Eigen::Vector2d p = mesh.node(i);
    inc_max = std::max(inc_max, sti * p.x() + cti * p.y());
    obs_min = std::min(obs_min, -sto * p.x() + cto * p.y());
  }
  return kPulseSupportWidths * width + (inc_max - obs_min) / c;
}

Real window_rms(const std::vector<ResidueTerm>& terms, const TimeSeries& resp,
                const LateTimeWindow& win, Real dt) {
  Real acc = 0.0;
  for (Eigen::Index k = 0; k < win.length; ++k) {
    Complex model(0.0, 0.0);
    const Real t = static_cast<Real>(k) * dt;
    for (const auto& term : terms) model += term.amplitude * std::exp(term.gamma * t);
    const Real err = resp.values[win.start_index + k] - model.real();
    acc += err * err;
  }
  return std::sqrt(acc / static_cast<Real>(win.length));
}

PronyFit strip_aliased(PronyFit fit, const TimeSeries& resp, const LateTimeWindow& win) {
  if (fit.aliased.empty()) return fit;
  std::vector<ResidueTerm> kept;
  for (size_t i = 0; i < fit.terms.size(); ++i) {
    if (std::find(fit.aliased.begin(), fit.aliased.end(), static_cast<int>(i)) ==
        fit.aliased.end()) {
      kept.push_back(fit.terms[i]);
    }
  }
  fit.terms = std::move(kept);
  fit.order = static_cast<int>(fit.terms.size());
  fit.aliased.clear();
  fit.residual_rms = window_rms(fit.terms, resp, win, fit.dt);
  return fit;
}

void write_fit_file(const std::string& full_path, const ExtractionResult& ext) {
  nlohmann::json jf = fit_to_json(ext.fit);
  jf["stable_terms"] = static_cast<int>(ext.stable_terms.size());
  jf["dropped_growing"] = ext.dropped_growing;
  jf["window_start_index"] = ext.window.start_index;
  jf["window_length"] = ext.window.length;
  nlohmann::json poles = nlohmann::json::array();
  for (const auto& p : ext.poles) poles.push_back(nlohmann::json::array({p.value.real(), p.value.imag()}));
  jf["poles"] = poles;
  std::ofstream fout(full_path, std::ios::binary | std::ios::trunc);
  require(fout.good(), "cannot write " + full_path);
  fout << jf.dump(2) << "\n";
}

} // namespace

BorGeometry make_body(const BodySpec& spec) {
  require(spec.a > 0.0, "body a must be positive");
  if (spec.kind == "cone") return make_cone_from_ratio(spec.a, spec.ratio);
  if (spec.kind == "truncated_cone") return make_truncated_cone(spec.a, spec.ratio);
  if (spec.kind == "cylinder") return make_cylinder(spec.a, spec.ratio);
  if (spec.kind == "sphere") return make_sphere(spec.a);
  throw ValidationError("unknown body kind: \"" + spec.kind + "\"");
}

Real normalization_length(const BodySpec& spec) {
  return spec.normalization_length > 0.0 ? spec.normalization_length : spec.a;
}

ExtractionResult extract_poles(const TimeSeries& response, Real forced_end_time, Real transit,
                               const ExtractionPolicy& policy, Real norm_length, Real wave_speed,
                               Real band_limit) {
  require(policy.max_order >= 1, "extraction max_order must be at least 1");
  ExtractionResult out;
  if (response.values.cwiseAbs().maxCoeff() == 0.0) {
    out.no_signal = true;
    return out;
  }

  WindowPolicy wp;
  wp.forced_end_time = forced_end_time;
  wp.guard = policy.window_guard;
  wp.min_length = 2 * static_cast<Eigen::Index>(policy.max_order) + 8;
  out.window = select_late_window(response, transit, wp);

  // Drop the window tail once the envelope stays below tail_floor of the
  // windowed peak; what remains there is numerical floor, not ring-down.
  if (policy.tail_floor > 0.0) {
    const auto seg = response.values.segment(out.window.start_index, out.window.length);
    const Real floor = policy.tail_floor * seg.cwiseAbs().maxCoeff();
    Eigen::Index last = out.window.length - 1;
    while (last > 0 && std::abs(seg[last]) < floor) --last;
    out.window.length = std::max(wp.min_length, last + 1);
  }

  const int est = estimate_order(response, out.window, policy.max_order, policy.order_svd_threshold);
  if (est == 0) {
    out.no_signal = true;
    return out;
  }
  const int order_b = std::min(est + 2, policy.max_order);

  PronyFit fit_a = strip_aliased(prony_fit(response, out.window, est), response, out.window);
  fit_a = refine_fit(fit_a, response, out.window);
  PronyFit fit_b = fit_a;
  if (order_b > est) {
    fit_b = strip_aliased(prony_fit(response, out.window, order_b), response, out.window);
    fit_b = refine_fit(fit_b, response, out.window);
  }

  // A pole counts only if the higher-order fit reproduces it.
  std::vector<ResidueTerm> stable;
  for (const auto& term : fit_a.terms) {
    Real best = std::numeric_limits<Real>::max();
    for (const auto& other : fit_b.terms) best = std::min(best, std::abs(term.gamma - other.gamma));
    if (best <= policy.pole_stability * std::abs(term.gamma)) stable.push_back(term);
  }
  if (band_limit > 0.0) {
    std::erase_if(stable,
                  [&](const ResidueTerm& t) { return std::abs(t.gamma.imag()) > band_limit; });
  }
  Real amp_max = 0.0;
  for (const auto& term : stable) amp_max = std::max(amp_max, std::abs(term.amplitude));
  std::erase_if(stable, [&](const ResidueTerm& t) {
    return std::abs(t.amplitude) < policy.amplitude_floor * amp_max;
  });

  out.fit = fit_a;
  out.stable_terms = stable;
  out.poles = normalize(stable, norm_length, wave_speed, &out.dropped_growing);
  return out;
}

RunRecord run_experiment(const ExperimentConfig& cfg) {
  require(!cfg.bodies.empty(), "config needs at least one body");
  require(!cfg.m_list.empty(), "config needs at least one harmonic index");
  require(!cfg.incidence_list.empty(), "config needs at least one incidence angle");
  require(!cfg.observation_list.empty(), "config needs at least one observation angle");
  require(!cfg.output_dir.empty(), "config needs an output directory");
  for (int m : cfg.m_list) require(m >= 0, "m_list entries must be non-negative");
  for (size_t i = 0; i < cfg.bodies.size(); ++i) {
    for (size_t k = i + 1; k < cfg.bodies.size(); ++k) {
      require(cfg.bodies[i].label != cfg.bodies[k].label, "body labels must be unique");
    }
  }

  const auto t_begin = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.config = cfg;
  rec.config_hash = config_hash(cfg);
  const std::string& dir = cfg.output_dir;
  std::filesystem::create_directories(dir + "/responses");
  std::filesystem::create_directories(dir + "/fits");
  save_config(cfg, dir + "/config.json");

  const Real c = cfg.solver.wave_speed;
  const Real floor = kSignalFloor * std::abs(cfg.pulse.amplitude);
  rec.signatures.provenance = "computed";

  for (const BodySpec& body : cfg.bodies) {
    const BorGeometry geometry = make_body(body);
    const BorMesh mesh = discretize(geometry, cfg.solver.density);
    const Real norm_len = normalization_length(body);
    const Real transit = std::max(mesh.a, mesh.L) / c;

    // responses[m index][incidence][observation], kept for the harmonic sum
    std::map<int, std::vector<std::vector<std::optional<TimeSeries>>>> responses;

    auto process_cell = [&](CellRecord& cell,
                            const std::vector<std::optional<TimeSeries>>& cell_responses,
                            std::vector<std::vector<NormalizedPole>>& runs) {
      bool any_loud = false;
      bool any_fit = false;
      for (size_t jo = 0; jo < cell_responses.size(); ++jo) {
        if (!cell_responses[jo]) continue;
        const TimeSeries& resp = *cell_responses[jo];
        if (resp.values.cwiseAbs().maxCoeff() < floor) continue;
        any_loud = true;
        try {
          const ExtractionResult ext = extract_poles(resp, cell.forced_ends[jo], transit,
                                                     cfg.extraction, norm_len, c,
                                                     pulse_band_limit(cfg.pulse));
          if (ext.no_signal) continue;
          const std::string fit_path = "fits/" + cell_stem(cell.body, cell.m, cell.incidence_index) +
                                       "_o" + std::to_string(jo) + ".json";
          write_fit_file(dir + "/" + fit_path, ext);
          cell.fit_files.push_back(fit_path);
          any_fit = true;
          if (!ext.poles.empty()) runs.push_back(ext.poles);
        } catch (const std::exception& e) {
          if (!cell.error.empty()) cell.error += "; ";
          cell.error += e.what();
        }
      }
      if (!any_loud) {
        cell.status = "no_signal";
      } else if (!any_fit && !cell.error.empty()) {
        cell.status = "failed";
      } else {
        cell.status = "ok";
      }
    };

    for (int m : cfg.m_list) {
      std::vector<std::vector<NormalizedPole>> runs;
      std::shared_ptr<const MotOperator> op;
      std::string op_error;
      try {
        op = build_mot_operator(mesh, m, cfg.polarization, cfg.solver);
      } catch (const std::exception& e) {
        op_error = e.what();
      }

      auto& m_responses = responses[m];
      m_responses.resize(cfg.incidence_list.size());
      for (size_t ii = 0; ii < cfg.incidence_list.size(); ++ii) {
        CellRecord cell;
        cell.body = body.label;
        cell.m = m;
        cell.incidence_index = static_cast<int>(ii);
        cell.transit = transit;
        cell.norm_length = norm_len;
        m_responses[ii].resize(cfg.observation_list.size());

        if (!op) {
          cell.status = "failed";
          cell.error = op_error;
          rec.cells.push_back(std::move(cell));
          continue;
        }
        try {
          PlaneWaveExcitation exc;
          exc.pulse = cfg.pulse;
          exc.incidence_theta = cfg.incidence_list[ii];
          exc.polarization = cfg.polarization;
          const SurfaceCurrentHistory hist = march_on_in_time(*op, exc, cfg.solver);
          for (size_t jo = 0; jo < cfg.observation_list.size(); ++jo) {
            const auto& [tho, pho] = cfg.observation_list[jo];
            const HarmonicResponse resp = far_field(hist, tho, pho);
            const std::string path = "responses/" + cell_stem(body.label, m, cell.incidence_index) +
                                     "_o" + std::to_string(jo) + ".csv";
            save_response_csv(resp.field, dir + "/" + path);
            cell.response_files.push_back(path);
            cell.forced_ends.push_back(
                forced_exit_time(mesh, exc.incidence_theta, tho, cfg.pulse.width, c));
            m_responses[ii][jo] = resp.field;
          }
          process_cell(cell, m_responses[ii], runs);
        } catch (const InstabilityError& e) {
          cell.status = "unstable";
          cell.error = e.what();
        } catch (const std::exception& e) {
          cell.status = "failed";
          cell.error = e.what();
        }
        rec.cells.push_back(std::move(cell));
      }

      if (!runs.empty()) {
        PoleSignature sig;
        sig.body_label = body.label;
        sig.m = m;
        sig.poles = cluster_and_average(runs, cfg.extraction.cluster_radius,
                                        cfg.extraction.min_support_fraction);
        if (!sig.poles.empty()) rec.signatures.entries.push_back(std::move(sig));
      }
    }

    if (cfg.include_m_sum && cfg.m_list.size() > 1) {
      std::vector<std::vector<NormalizedPole>> runs;
      for (size_t ii = 0; ii < cfg.incidence_list.size(); ++ii) {
        CellRecord cell;
        cell.body = body.label;
        cell.m = kSumHarmonics;
        cell.incidence_index = static_cast<int>(ii);
        cell.transit = transit;
        cell.norm_length = norm_len;

        std::vector<std::optional<TimeSeries>> summed(cfg.observation_list.size());
        bool complete = true;
        for (size_t jo = 0; jo < cfg.observation_list.size() && complete; ++jo) {
          TimeSeries acc;
          bool first = true;
          for (int m : cfg.m_list) {
            const auto& cellm = responses[m];
            if (cellm.size() <= ii || !cellm[ii][jo]) {
              complete = false;
              break;
            }
            const TimeSeries& part = *cellm[ii][jo];
            if (first) {
              acc = part;
              first = false;
            } else {
              require(acc.size() == part.size() && acc.grid.start == part.grid.start,
                      "harmonic responses disagree on the time grid");
              acc.values += part.values;
            }
          }
          if (complete) summed[jo] = std::move(acc);
        }
        if (!complete) {
          cell.status = "failed";
          cell.error = "component harmonic missing for the summed response";
          rec.cells.push_back(std::move(cell));
          continue;
        }
        for (size_t jo = 0; jo < summed.size(); ++jo) {
          const auto& [tho, pho] = cfg.observation_list[jo];
          const std::string path = "responses/" +
                                   cell_stem(body.label, kSumHarmonics, cell.incidence_index) +
                                   "_o" + std::to_string(jo) + ".csv";
          save_response_csv(*summed[jo], dir + "/" + path);
          cell.response_files.push_back(path);
          cell.forced_ends.push_back(
              forced_exit_time(mesh, cfg.incidence_list[ii], tho, cfg.pulse.width, c));
        }
        process_cell(cell, summed, runs);
        rec.cells.push_back(std::move(cell));
      }
      if (!runs.empty()) {
        PoleSignature sig;
        sig.body_label = body.label;
        sig.m = kSumHarmonics;
        sig.poles = cluster_and_average(runs, cfg.extraction.cluster_radius,
                                        cfg.extraction.min_support_fraction);
        if (!sig.poles.empty()) rec.signatures.entries.push_back(std::move(sig));
      }
    }
  }

  rec.signature_file = "signatures.json";
  {
    std::ofstream out(dir + "/signatures.json", std::ios::binary | std::ios::trunc);
    require(out.good(), "cannot write signatures.json");
    out << library_to_json(rec.signatures).dump(2) << "\n";
  }
  save_record(rec);
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
  return rec;
}

RunRecord reextract(const RunRecord& record, const ExperimentConfig& cfg) {
  RunRecord rec = record;
  rec.config.extraction = cfg.extraction;
  rec.config_hash = config_hash(rec.config);
  const std::string& dir = rec.config.output_dir;
  const Real c = rec.config.solver.wave_speed;
  const Real floor = kSignalFloor * std::abs(rec.config.pulse.amplitude);

  std::map<std::pair<std::string, int>, std::vector<std::vector<NormalizedPole>>> runs_by_sig;
  std::vector<std::string> body_order;
  for (const auto& b : rec.config.bodies) body_order.push_back(b.label);

  for (CellRecord& cell : rec.cells) {
    if (cell.response_files.empty()) continue;
    cell.fit_files.clear();
    cell.error.clear();
    auto& runs = runs_by_sig[{cell.body, cell.m}];
    bool any_loud = false;
    bool any_fit = false;
    for (size_t jo = 0; jo < cell.response_files.size(); ++jo) {
      const TimeSeries resp = load_response_csv(dir + "/" + cell.response_files[jo]);
      if (resp.values.cwiseAbs().maxCoeff() < floor) continue;
      any_loud = true;
      try {
        const ExtractionResult ext = extract_poles(resp, cell.forced_ends[jo], cell.transit,
                                                   rec.config.extraction, cell.norm_length, c,
                                                   pulse_band_limit(rec.config.pulse));
        if (ext.no_signal) continue;
        const std::string fit_path = "fits/" + cell_stem(cell.body, cell.m, cell.incidence_index) +
                                     "_o" + std::to_string(jo) + ".json";
        write_fit_file(dir + "/" + fit_path, ext);
        cell.fit_files.push_back(fit_path);
        any_fit = true;
        if (!ext.poles.empty()) runs.push_back(ext.poles);
      } catch (const std::exception& e) {
        if (!cell.error.empty()) cell.error += "; ";
        cell.error += e.what();
      }
    }
    if (!any_loud) {
      cell.status = "no_signal";
    } else if (!any_fit && !cell.error.empty()) {
      cell.status = "failed";
    } else {
      cell.status = "ok";
    }
  }

  rec.signatures = SignatureLibrary{};
  rec.signatures.provenance = "computed";
  for (const auto& label : body_order) {
    for (int m : rec.config.m_list) {
      const auto it = runs_by_sig.find({label, m});
      if (it == runs_by_sig.end() || it->second.empty()) continue;
      PoleSignature sig;
      sig.body_label = label;
      sig.m = m;
      sig.poles = cluster_and_average(it->second, rec.config.extraction.cluster_radius,
                                      rec.config.extraction.min_support_fraction);
      if (!sig.poles.empty()) rec.signatures.entries.push_back(std::move(sig));
    }
    const auto it = runs_by_sig.find({label, kSumHarmonics});
    if (it != runs_by_sig.end() && !it->second.empty()) {
      PoleSignature sig;
      sig.body_label = label;
      sig.m = kSumHarmonics;
      sig.poles = cluster_and_average(it->second, rec.config.extraction.cluster_radius,
                                      rec.config.extraction.min_support_fraction);
      if (!sig.poles.empty()) rec.signatures.entries.push_back(std::move(sig));
    }
  }

  rec.signature_file = "signatures.json";
  {
    std::ofstream out(dir + "/signatures.json", std::ios::binary | std::ios::trunc);
    require(out.good(), "cannot write signatures.json");
    out << library_to_json(rec.signatures).dump(2) << "\n";
  }
  save_record(rec);
  return rec;
}

ExperimentConfig paper_bodies_preset() {
  ExperimentConfig cfg;
  cfg.bodies = {{kConeLabel, "cone", 1.0, 0.505, 0.0},
                {kTruncatedConeLabel, "truncated_cone", 1.0, 0.749, 0.0},
                {kCylinderLabel, "cylinder", 1.0, 0.5, 0.0}};
  // Wide enough to keep interior-resonance ringing of the closed surfaces
  // below the extraction floor, narrow enough to light up the m = 2, 3 modes.
  cfg.pulse = GaussianPulse{1.0, 0.55, 0.0};
  cfg.m_list = {0, 1, 2, 3};
  cfg.include_m_sum = true;
  // Oblique angles only: broadside incidence cannot excite the modes that
  // are antisymmetric along the axis, and a broadside observer sits in
  // their radiation null, so 90-degree entries would blind the sweep to
  // every second rung of each body's resonance ladder.
  cfg.incidence_list = {kPi / 6.0, kPi / 3.0, 5.0 * kPi / 12.0};
  cfg.observation_list = {{kPi / 6.0, 0.0}, {5.0 * kPi / 12.0, 0.0}, {2.0 * kPi / 3.0, 0.0}};
  cfg.output_dir = "borsem-out/paper-bodies";
  return cfg;
}

ExperimentConfig sphere_oracle_preset() {
  ExperimentConfig cfg;
  cfg.bodies = {{"sphere", "sphere", 1.0, 0.5, 0.5}};
  // Wide pulse: its spectrum must die out below the first interior resonance
  // of the closed surface, or the resonance ring buries the late-time decay.
  cfg.pulse = GaussianPulse{1.0, 0.8, 0.0};
  cfg.m_list = {1};
  cfg.include_m_sum = false;
  cfg.incidence_list = {0.0};
  cfg.observation_list = {{kPi, 0.0}};
  cfg.output_dir = "borsem-out/sphere-oracle";
  return cfg;
}

ExperimentConfig preset_by_name(const std::string& name) {
  if (name == "paper-bodies") return paper_bodies_preset();
  if (name == "sphere-oracle") return sphere_oracle_preset();
  throw ValidationError("unknown preset \"" + name + "\"; available: paper-bodies, sphere-oracle");
}

} // namespace borsem
