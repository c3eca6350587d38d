#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "borsem/geometry.hpp"
#include "borsem/prony.hpp"
#include "borsem/signatures.hpp"
#include "borsem/solver.hpp"

namespace borsem {

/// One scatterer in an experiment. kind selects the generator: "cone",
/// "truncated_cone", "cylinder" (all sized by a and a/L ratio) or "sphere"
/// (sized by diameter a; ratio ignored). normalization_length overrides the
/// length used for gamma*l/c pole scaling when nonzero (the sphere oracle
/// quotes its pole in radius units).
struct BodySpec {
  std::string label;
  std::string kind;
  Real a = 1.0;
  Real ratio = 0.5;
  Real normalization_length = 0.0;

  [[nodiscard]] bool operator==(const BodySpec&) const = default;
};

[[nodiscard]] BorGeometry make_body(const BodySpec& spec);
[[nodiscard]] Real normalization_length(const BodySpec& spec);

/// Window placement and pole-selection policy applied to every response.
/// The window opens shortly after the causal forced-exit bound: heavily
/// damped modes only live in the first few transits of the ring-down.
struct ExtractionPolicy {
  Real window_guard = 0.25;         // light-transits of quiet time after the forced exit
  int max_order = 12;
  Real order_svd_threshold = 1e-4;  // relative Hankel singular-value cut
  Real pole_stability = 0.05;       // max relative pole drift between order fits
  Real cluster_radius = 0.25;
  Real min_support_fraction = 0.5;
  Real amplitude_floor = 5e-3;      // relative residue cut within one fit
  Real tail_floor = 0.05;           // end the window once |x| stays below this times its peak

  [[nodiscard]] bool operator==(const ExtractionPolicy&) const = default;
};

struct ExperimentConfig {
  std::vector<BodySpec> bodies;
  GaussianPulse pulse{1.0, 0.25, 0.0};
  SolverConfig solver;
  Polarization polarization = Polarization::theta;
  std::vector<int> m_list{0, 1, 2, 3};
  bool include_m_sum = true;
  std::vector<Real> incidence_list;
  std::vector<std::pair<Real, Real>> observation_list; // (theta, phi)
  ExtractionPolicy extraction;
  std::string output_dir = "borsem-out";
  std::uint64_t seed = 1;
};

[[nodiscard]] bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

/// One (body, m, incidence) sweep cell. m = kSumHarmonics marks the
/// summed-harmonic cell. File paths are relative to the output directory.
struct CellRecord {
  std::string body;
  int m = 0;
  int incidence_index = 0;
  std::string status; // "ok", "no_signal", "failed"
  std::string error;
  Real transit = 0.0;
  Real norm_length = 0.0;
  std::vector<std::string> response_files;
  std::vector<Real> forced_ends; // per response, on its own time axis
  std::vector<std::string> fit_files;
};

struct RunRecord {
  std::string config_hash;
  ExperimentConfig config;
  std::vector<CellRecord> cells;
  SignatureLibrary signatures;
  std::string signature_file;
  double wall_seconds = 0.0; // in-memory only; never serialized

  [[nodiscard]] int failed_count() const;
  [[nodiscard]] bool all_failed_unstable() const;
};

/// Late-window Prony extraction of one response, as applied per sweep cell.
struct ExtractionResult {
  bool no_signal = false;
  LateTimeWindow window;
  PronyFit fit;                          // stability-filtered, refined
  std::vector<ResidueTerm> stable_terms; // survivors used for the signature
  std::vector<NormalizedPole> poles;     // normalized, growing/aliased dropped
  int dropped_growing = 0;
};

/// band_limit, when positive, discards stable terms with |Im gamma| above it
/// (absolute angular frequency): the excitation carries no usable energy
/// there, so such poles are fit artifacts — typically interior-resonance
/// leakage of the closed surface.
[[nodiscard]] ExtractionResult extract_poles(const TimeSeries& response, Real forced_end_time,
                                             Real transit, const ExtractionPolicy& policy,
                                             Real norm_length, Real wave_speed,
                                             Real band_limit = 0.0);

/// Runs the full sweep, writes all artifacts under cfg.output_dir, and
/// returns the record (also persisted as record.json).
[[nodiscard]] RunRecord run_experiment(const ExperimentConfig& cfg);

/// Re-runs extraction on the stored responses of an existing record using
/// cfg.extraction, rewriting fits, signatures, and the record itself.
[[nodiscard]] RunRecord reextract(const RunRecord& record, const ExperimentConfig& cfg);

/// Pole table in the reference layout: rows m = 0..3 and the harmonic sum,
/// one column per body, entries "Re ± iIm" at two decimals ordered by
/// increasing Im. Returns the text; emit_table also writes table.txt and a
/// full-precision table.csv under the record's output directory.
[[nodiscard]] std::string format_table(const SignatureLibrary& lib,
                                       const std::vector<std::string>& body_order);
[[nodiscard]] std::string emit_table(const RunRecord& record);

/// Writes plots/poles.csv (pole scatter with spreads) and per-response
/// plots/envelope_*.csv (time, log10 |field|) under the output directory.
void emit_plot_data(const RunRecord& record);

[[nodiscard]] nlohmann::json config_to_json(const ExperimentConfig& cfg);
[[nodiscard]] ExperimentConfig config_from_json(const nlohmann::json& j);
[[nodiscard]] std::string config_hash(const ExperimentConfig& cfg);
void save_config(const ExperimentConfig& cfg, const std::string& path);
[[nodiscard]] ExperimentConfig load_config(const std::string& path);

/// Dotted-path override, e.g. set_config_field(cfg, "solver.density", "48")
/// or "bodies.0.a". Values parse as JSON scalars; bad paths throw.
void set_config_field(ExperimentConfig& cfg, const std::string& path, const std::string& value);

[[nodiscard]] nlohmann::json fit_to_json(const PronyFit& fit);
[[nodiscard]] PronyFit fit_from_json(const nlohmann::json& j);
[[nodiscard]] nlohmann::json library_to_json(const SignatureLibrary& lib);
[[nodiscard]] SignatureLibrary library_from_json(const nlohmann::json& j);

void save_record(const RunRecord& record);
[[nodiscard]] RunRecord load_record(const std::string& output_dir);

[[nodiscard]] TimeSeries load_response_csv(const std::string& path);
void save_response_csv(const TimeSeries& series, const std::string& path);

/// Three reference bodies, m = 0..3 plus the sum, oblique sweep angles.
[[nodiscard]] ExperimentConfig paper_bodies_preset();
/// Unit-diameter sphere, m = 1, axial incidence, backscatter; poles
/// normalized by the radius so the dominant pole lands on -0.5 + i0.866.
[[nodiscard]] ExperimentConfig sphere_oracle_preset();
[[nodiscard]] ExperimentConfig preset_by_name(const std::string& name);

} // namespace borsem
