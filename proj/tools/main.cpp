#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "borsem/pipeline.hpp"

namespace {

using namespace borsem;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitInstability = 2;
constexpr int kExitPartial = 3;

ExperimentConfig resolve_config(const std::string& config_path, const std::string& preset,
                                const std::vector<std::string>& overrides) {
  ExperimentConfig cfg;
  if (!config_path.empty()) {
    cfg = load_config(config_path);
  } else if (!preset.empty()) {
    cfg = preset_by_name(preset);
  } else {
    throw ValidationError("provide --config FILE or --preset NAME");
  }
  for (const auto& s : overrides) {
    const size_t eq = s.find('=');
    require(eq != std::string::npos && eq > 0, "--set expects path=value, got: " + s);
    set_config_field(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  if (const char* root = std::getenv("BORSEM_OUTPUT_ROOT"); root && *root != '\0') {
    if (!cfg.output_dir.empty() && cfg.output_dir.front() != '/') {
      cfg.output_dir = std::string(root) + "/" + cfg.output_dir;
    }
  }
  return cfg;
}

int sweep_exit_code(const RunRecord& rec) {
  if (rec.all_failed_unstable()) return kExitInstability;
  if (rec.failed_count() > 0) return kExitPartial;
  return kExitOk;
}

void print_cell_summary(const RunRecord& rec) {
  int ok = 0, quiet = 0, failed = 0;
  for (const auto& c : rec.cells) {
    if (c.status == "ok") ++ok;
    else if (c.status == "no_signal") ++quiet;
    else ++failed;
  }
  std::cout << "cells: " << ok << " ok, " << quiet << " no-signal, " << failed << " failed ("
            << rec.wall_seconds << " s)\n";
  for (const auto& c : rec.cells) {
    if (c.status == "failed" || c.status == "unstable") {
      std::cout << "  " << c.status << ": " << c.body << " m=" << c.m << " incidence #"
                << c.incidence_index << ": " << c.error << "\n";
    }
  }
}

int run_solve(const std::string& config_path, const std::string& preset,
              const std::vector<std::string>& overrides) {
  const ExperimentConfig cfg = resolve_config(config_path, preset, overrides);
  const RunRecord rec = run_experiment(cfg);
  std::cout << emit_table(rec);
  emit_plot_data(rec);
  print_cell_summary(rec);
  std::cout << "artifacts under " << cfg.output_dir << "\n";
  return sweep_exit_code(rec);
}

int run_extract(const std::string& dir, const std::vector<std::string>& overrides) {
  RunRecord rec = load_record(dir);
  ExperimentConfig cfg = rec.config;
  for (const auto& s : overrides) {
    const size_t eq = s.find('=');
    require(eq != std::string::npos && eq > 0, "--set expects path=value, got: " + s);
    set_config_field(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  rec = reextract(rec, cfg);
  std::cout << emit_table(rec);
  print_cell_summary(rec);
  return sweep_exit_code(rec);
}

int run_signature(const std::string& dir, const std::vector<std::string>& overrides) {
  RunRecord rec = load_record(dir);
  ExperimentConfig cfg = rec.config;
  for (const auto& s : overrides) {
    const size_t eq = s.find('=');
    require(eq != std::string::npos && eq > 0, "--set expects path=value, got: " + s);
    set_config_field(cfg, s.substr(0, eq), s.substr(eq + 1));
  }

  // Re-cluster the per-fit pole lists persisted next to each response.
  std::map<std::pair<std::string, int>, std::vector<std::vector<NormalizedPole>>> runs;
  for (const auto& cell : rec.cells) {
    for (const auto& fit_file : cell.fit_files) {
      const nlohmann::json j =
          nlohmann::json::parse(std::ifstream(dir + "/" + fit_file, std::ios::binary));
      std::vector<NormalizedPole> list;
      for (const auto& jp : j.value("poles", nlohmann::json::array())) {
        NormalizedPole p;
        p.value = Complex(jp.at(0).get<Real>(), jp.at(1).get<Real>());
        list.push_back(p);
      }
      if (!list.empty()) runs[{cell.body, cell.m}].push_back(std::move(list));
    }
  }
  rec.config.extraction = cfg.extraction;
  rec.config_hash = config_hash(rec.config);
  rec.signatures = SignatureLibrary{};
  rec.signatures.provenance = "computed";
  for (const auto& body : rec.config.bodies) {
    std::vector<int> rows = rec.config.m_list;
    rows.push_back(kSumHarmonics);
    for (int m : rows) {
      const auto it = runs.find({body.label, m});
      if (it == runs.end()) continue;
      PoleSignature sig;
      sig.body_label = body.label;
      sig.m = m;
      sig.poles = cluster_and_average(it->second, cfg.extraction.cluster_radius,
                                      cfg.extraction.min_support_fraction);
      if (!sig.poles.empty()) rec.signatures.entries.push_back(std::move(sig));
    }
  }
  rec.signature_file = "signatures.json";
  std::ofstream out(dir + "/signatures.json", std::ios::binary | std::ios::trunc);
  require(out.good(), "cannot write signatures.json");
  out << library_to_json(rec.signatures).dump(2) << "\n";
  out.close();
  save_record(rec);
  std::cout << emit_table(rec);
  return kExitOk;
}

int run_table(const std::string& dir, bool reference) {
  if (reference) {
    std::cout << format_table(reference_library(),
                              {kConeLabel, kTruncatedConeLabel, kCylinderLabel});
    return kExitOk;
  }
  require(!dir.empty(), "provide --dir DIR or --reference");
  const RunRecord rec = load_record(dir);
  std::cout << emit_table(rec);
  return kExitOk;
}

int run_classify(const std::string& input, const std::string& library_path, int query_m, Real w_re,
                 Real w_im) {
  PoleSignature query;
  query.body_label = "query";
  query.m = query_m;
  const nlohmann::json j = nlohmann::json::parse(std::ifstream(input, std::ios::binary));
  const nlohmann::json poles = j.is_array() ? j : j.at("poles");
  for (const auto& jp : poles) {
    NormalizedPole p;
    p.value = Complex(jp.at(0).get<Real>(), jp.at(1).get<Real>());
    query.poles.push_back(p);
  }
  require(!query.poles.empty(), "query has no poles");
  std::sort(query.poles.begin(), query.poles.end(),
            [](const NormalizedPole& a, const NormalizedPole& b) {
              return a.value.imag() < b.value.imag();
            });

  SignatureLibrary lib;
  if (library_path.empty()) {
    lib = reference_library();
  } else {
    lib = library_from_json(nlohmann::json::parse(std::ifstream(library_path, std::ios::binary)));
  }
  DistanceWeights weights;
  weights.re = w_re;
  weights.im = w_im;
  const auto ranked = classify(query, lib, weights);
  for (const auto& r : ranked) {
    std::cout << r.body_label << " m=" << (r.m == kSumHarmonics ? std::string("sum") : std::to_string(r.m))
              << " distance=" << r.distance << "\n";
  }
  return kExitOk;
}

int run_oracle(const std::vector<std::string>& overrides) {
  const ExperimentConfig cfg = resolve_config("", "sphere-oracle", overrides);
  const RunRecord rec = run_experiment(cfg);
  print_cell_summary(rec);
  if (rec.failed_count() > 0) return sweep_exit_code(rec);

  const CellRecord* cell = nullptr;
  for (const auto& c : rec.cells) {
    if (c.status == "ok" && !c.fit_files.empty()) {
      cell = &c;
      break;
    }
  }
  require(cell != nullptr, "oracle run produced no usable fit");
  const PronyFit fit = fit_from_json(nlohmann::json::parse(
      std::ifstream(cfg.output_dir + "/" + cell->fit_files.front(), std::ios::binary)));

  // Dominant ringing pole: largest residue magnitude among Im > 0 terms.
  const Real scale = cell->norm_length / cfg.solver.wave_speed;
  Complex dominant(0.0, 0.0);
  Real best_amp = -1.0;
  for (const auto& term : fit.terms) {
    if (term.gamma.imag() * scale <= 0.05) continue;
    if (std::abs(term.amplitude) > best_amp) {
      best_amp = std::abs(term.amplitude);
      dominant = term.gamma * scale;
    }
  }
  require(best_amp >= 0.0, "no ringing pole found in the oracle fit");

  const Complex target(-0.5, std::sqrt(3.0) / 2.0);
  const Real err = std::abs(dominant - target) / std::abs(target);
  std::cout << "dominant pole (gamma*R/c): " << dominant.real() << (dominant.imag() < 0 ? " - i" : " + i")
            << std::abs(dominant.imag()) << "\n"
            << "analytic pole:             " << target.real() << " + i" << target.imag() << "\n"
            << "relative error:            " << err << "\n"
            << (err <= 0.10 ? "ORACLE PASS" : "ORACLE FAIL") << "\n";
  return err <= 0.10 ? kExitOk : kExitValidation;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transient scattering of conducting bodies of revolution: "
               "time-domain solver, pole extraction, and signature matching"};
  app.require_subcommand(1);

  std::string config_path, preset, dir, input, library_path;
  std::vector<std::string> overrides;
  bool reference = false;
  int query_m = 0;
  Real w_re = 1.0, w_im = 4.0;

  auto add_config_flags = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config JSON");
    cmd->add_option("--preset", preset, "bundled preset: paper-bodies, sphere-oracle");
    cmd->add_option("--set", overrides, "dotted-path override, e.g. solver.density=48")
        ->take_all();
  };

  CLI::App* solve = app.add_subcommand("solve", "run a full sweep and write all artifacts");
  add_config_flags(solve);

  CLI::App* extract = app.add_subcommand("extract", "re-run pole extraction on stored responses");
  extract->add_option("--dir", dir, "output directory of a previous solve")->required();
  extract->add_option("--set", overrides, "extraction policy overrides")->take_all();

  CLI::App* signature = app.add_subcommand("signature", "re-cluster stored fits into signatures");
  signature->add_option("--dir", dir, "output directory of a previous solve")->required();
  signature->add_option("--set", overrides, "clustering policy overrides")->take_all();

  CLI::App* table = app.add_subcommand("table", "print the eigenfrequency table");
  table->add_option("--dir", dir, "output directory of a previous solve");
  table->add_flag("--reference", reference, "print the built-in reference table");

  CLI::App* classify_cmd = app.add_subcommand("classify", "rank library bodies against query poles");
  classify_cmd->add_option("--input", input, "JSON pole list [[re,im],...] or {\"poles\": ...}")
      ->required();
  classify_cmd->add_option("--library", library_path, "signature library JSON (default: built-in)");
  classify_cmd->add_option("--m", query_m, "harmonic index of the query");
  classify_cmd->add_option("--w-re", w_re, "real-part weight");
  classify_cmd->add_option("--w-im", w_im, "imaginary-part weight");

  CLI::App* oracle = app.add_subcommand("oracle", "sphere validation run against the analytic pole");
  oracle->add_option("--set", overrides, "config overrides")->take_all();

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return run_solve(config_path, preset, overrides);
    if (extract->parsed()) return run_extract(dir, overrides);
    if (signature->parsed()) return run_signature(dir, overrides);
    if (table->parsed()) return run_table(dir, reference);
    if (classify_cmd->parsed()) return run_classify(input, library_path, query_m, w_re, w_im);
    if (oracle->parsed()) return run_oracle(overrides);
  } catch (const InstabilityError& e) {
    std::cerr << "instability: " << e.what() << "\n";
    return kExitInstability;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}
