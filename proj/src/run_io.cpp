#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "borsem/pipeline.hpp"

namespace borsem {

namespace {

using nlohmann::json;

std::string pol_name(Polarization pol) { return pol == Polarization::theta ? "theta" : "phi"; }

Polarization pol_from_name(const std::string& name) {
  if (name == "theta") return Polarization::theta;
  if (name == "phi") return Polarization::phi;
  throw ValidationError("polarization must be \"theta\" or \"phi\", got \"" + name + "\"");
}

void write_text_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), "cannot open for writing: " + path);
  out << text;
  require(out.good(), "write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string fmt(Real v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json body_to_json(const BodySpec& b) {
  return {{"label", b.label},
          {"kind", b.kind},
          {"a", b.a},
          {"ratio", b.ratio},
          {"normalization_length", b.normalization_length}};
}

BodySpec body_from_json(const json& j) {
  BodySpec b;
  b.label = j.at("label").get<std::string>();
  b.kind = j.at("kind").get<std::string>();
  b.a = j.value("a", b.a);
  b.ratio = j.value("ratio", b.ratio);
  b.normalization_length = j.value("normalization_length", b.normalization_length);
  return b;
}

json cell_to_json(const CellRecord& c) {
  return {{"body", c.body},
          {"m", c.m},
          {"incidence_index", c.incidence_index},
          {"status", c.status},
          {"error", c.error},
          {"transit", c.transit},
          {"norm_length", c.norm_length},
          {"response_files", c.response_files},
          {"forced_ends", c.forced_ends},
          {"fit_files", c.fit_files}};
}

CellRecord cell_from_json(const json& j) {
  CellRecord c;
  c.body = j.at("body").get<std::string>();
  c.m = j.at("m").get<int>();
  c.incidence_index = j.at("incidence_index").get<int>();
  c.status = j.at("status").get<std::string>();
  c.error = j.value("error", std::string());
  c.transit = j.at("transit").get<Real>();
  c.norm_length = j.at("norm_length").get<Real>();
  c.response_files = j.at("response_files").get<std::vector<std::string>>();
  c.forced_ends = j.at("forced_ends").get<std::vector<Real>>();
  c.fit_files = j.at("fit_files").get<std::vector<std::string>>();
  return c;
}

std::string pretty_body_name(const std::string& label) {
  std::string out = label;
  for (char& ch : out)
    if (ch == '_') ch = ' ';
  if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

std::string format_pole_cell(const PoleSignature& sig) {
  if (sig.poles.empty()) return "—";
  std::string out;
  char buf[64];
  for (size_t i = 0; i < sig.poles.size(); ++i) {
    if (i) out += "  ";
    std::snprintf(buf, sizeof buf, "%.2f ± i%.2f", sig.poles[i].value.real(),
                  sig.poles[i].value.imag());
    out += buf;
  }
  return out;
}

const PoleSignature* find_signature(const SignatureLibrary& lib, const std::string& body, int m) {
  for (const auto& e : lib.entries)
    if (e.body_label == body && e.m == m) return &e;
  return nullptr;
}

} // namespace

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return config_to_json(a) == config_to_json(b);
}

int RunRecord::failed_count() const {
  int n = 0;
  for (const auto& c : cells)
    if (c.status == "failed" || c.status == "unstable") ++n;
  return n;
}

bool RunRecord::all_failed_unstable() const {
  if (cells.empty()) return false;
  for (const auto& c : cells)
    if (c.status != "unstable") return false;
  return true;
}

json config_to_json(const ExperimentConfig& cfg) {
  json bodies = json::array();
  for (const auto& b : cfg.bodies) bodies.push_back(body_to_json(b));
  json obs = json::array();
  for (const auto& [th, ph] : cfg.observation_list) obs.push_back(json::array({th, ph}));
  return {{"bodies", bodies},
          {"pulse",
           {{"amplitude", cfg.pulse.amplitude},
            {"width", cfg.pulse.width},
            {"peak_time", cfg.pulse.peak_time}}},
          {"solver",
           {{"density", cfg.solver.density},
            {"courant", cfg.solver.courant},
            {"n_steps", cfg.solver.n_steps},
            {"record_time", cfg.solver.record_time},
            {"late_time_guard", cfg.solver.late_time_guard},
            {"stabilization", cfg.solver.stabilization},
            {"instability_growth", cfg.solver.instability_growth},
            {"wave_speed", cfg.solver.wave_speed},
            {"quadrature_order", cfg.solver.quadrature_order},
            {"phi_quadrature", cfg.solver.phi_quadrature}}},
          {"polarization", pol_name(cfg.polarization)},
          {"m_list", cfg.m_list},
          {"include_m_sum", cfg.include_m_sum},
          {"incidence_list", cfg.incidence_list},
          {"observation_list", obs},
          {"extraction",
           {{"window_guard", cfg.extraction.window_guard},
            {"max_order", cfg.extraction.max_order},
            {"order_svd_threshold", cfg.extraction.order_svd_threshold},
            {"pole_stability", cfg.extraction.pole_stability},
            {"cluster_radius", cfg.extraction.cluster_radius},
            {"min_support_fraction", cfg.extraction.min_support_fraction},
            {"amplitude_floor", cfg.extraction.amplitude_floor},
            {"tail_floor", cfg.extraction.tail_floor}}},
          {"output_dir", cfg.output_dir},
          {"seed", cfg.seed}};
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  cfg.bodies.clear();
  for (const auto& jb : j.value("bodies", json::array())) cfg.bodies.push_back(body_from_json(jb));
  if (j.contains("pulse")) {
    const json& jp = j.at("pulse");
    cfg.pulse.amplitude = jp.value("amplitude", cfg.pulse.amplitude);
    cfg.pulse.width = jp.value("width", cfg.pulse.width);
    cfg.pulse.peak_time = jp.value("peak_time", cfg.pulse.peak_time);
  }
  if (j.contains("solver")) {
    const json& js = j.at("solver");
    cfg.solver.density = js.value("density", cfg.solver.density);
    cfg.solver.courant = js.value("courant", cfg.solver.courant);
    cfg.solver.n_steps = js.value("n_steps", cfg.solver.n_steps);
    cfg.solver.record_time = js.value("record_time", cfg.solver.record_time);
    cfg.solver.late_time_guard = js.value("late_time_guard", cfg.solver.late_time_guard);
    cfg.solver.stabilization = js.value("stabilization", cfg.solver.stabilization);
    cfg.solver.instability_growth = js.value("instability_growth", cfg.solver.instability_growth);
    cfg.solver.wave_speed = js.value("wave_speed", cfg.solver.wave_speed);
    cfg.solver.quadrature_order = js.value("quadrature_order", cfg.solver.quadrature_order);
    cfg.solver.phi_quadrature = js.value("phi_quadrature", cfg.solver.phi_quadrature);
  }
  cfg.polarization = pol_from_name(j.value("polarization", std::string("theta")));
  cfg.m_list = j.value("m_list", cfg.m_list);
  cfg.include_m_sum = j.value("include_m_sum", cfg.include_m_sum);
  cfg.incidence_list = j.value("incidence_list", cfg.incidence_list);
  cfg.observation_list.clear();
  for (const auto& jo : j.value("observation_list", json::array())) {
    require(jo.is_array() && jo.size() == 2, "observation_list entries must be [theta, phi] pairs");
    cfg.observation_list.emplace_back(jo[0].get<Real>(), jo[1].get<Real>());
  }
  if (j.contains("extraction")) {
    const json& je = j.at("extraction");
    cfg.extraction.window_guard = je.value("window_guard", cfg.extraction.window_guard);
    cfg.extraction.max_order = je.value("max_order", cfg.extraction.max_order);
    cfg.extraction.order_svd_threshold =
        je.value("order_svd_threshold", cfg.extraction.order_svd_threshold);
    cfg.extraction.pole_stability = je.value("pole_stability", cfg.extraction.pole_stability);
    cfg.extraction.cluster_radius = je.value("cluster_radius", cfg.extraction.cluster_radius);
    cfg.extraction.min_support_fraction =
        je.value("min_support_fraction", cfg.extraction.min_support_fraction);
    cfg.extraction.amplitude_floor = je.value("amplitude_floor", cfg.extraction.amplitude_floor);
    cfg.extraction.tail_floor = je.value("tail_floor", cfg.extraction.tail_floor);
  }
  cfg.output_dir = j.value("output_dir", cfg.output_dir);
  cfg.seed = j.value("seed", cfg.seed);
  return cfg;
}

std::string config_hash(const ExperimentConfig& cfg) {
  // Identifies the experiment, not its storage location: records must stay
  // loadable after the output directory is moved or copied.
  ExperimentConfig keyed = cfg;
  keyed.output_dir.clear();
  const std::string text = config_to_json(keyed).dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void save_config(const ExperimentConfig& cfg, const std::string& path) {
  write_text_file(path, config_to_json(cfg).dump(2) + "\n");
}

ExperimentConfig load_config(const std::string& path) {
  return config_from_json(json::parse(read_text_file(path)));
}

void set_config_field(ExperimentConfig& cfg, const std::string& path, const std::string& value) {
  json root = config_to_json(cfg);
  json* node = &root;
  size_t pos = 0;
  std::vector<std::string> tokens;
  while (pos <= path.size()) {
    const size_t dot = path.find('.', pos);
    tokens.push_back(path.substr(pos, dot == std::string::npos ? dot : dot - pos));
    if (dot == std::string::npos) break;
    pos = dot + 1;
  }
  require(!tokens.empty() && !tokens.front().empty(), "empty config path");

  for (size_t i = 0; i + 1 < tokens.size(); ++i) {
    const std::string& tok = tokens[i];
    if (node->is_array()) {
      const size_t idx = std::stoul(tok);
      require(idx < node->size(), "config path index out of range: " + path);
      node = &(*node)[idx];
    } else {
      require(node->contains(tok), "unknown config field: " + path);
      node = &(*node)[tok];
    }
  }
  const std::string& leaf = tokens.back();
  json parsed = json::parse(value, nullptr, false);
  if (parsed.is_discarded()) parsed = value; // bare strings need no quotes
  if (node->is_array()) {
    const size_t idx = std::stoul(leaf);
    require(idx < node->size(), "config path index out of range: " + path);
    (*node)[idx] = parsed;
  } else {
    require(node->contains(leaf), "unknown config field: " + path);
    (*node)[leaf] = parsed;
  }
  cfg = config_from_json(root);
}

json fit_to_json(const PronyFit& fit) {
  json terms = json::array();
  for (const auto& t : fit.terms) {
    terms.push_back({{"re_gamma", t.gamma.real()},
                     {"im_gamma", t.gamma.imag()},
                     {"re_A", t.amplitude.real()},
                     {"im_A", t.amplitude.imag()}});
  }
  return {{"window", {{"start", fit.window.start}, {"length", fit.window.length}}},
          {"dt", fit.dt},
          {"t_ref", fit.t_ref},
          {"order", fit.order},
          {"requested_order", fit.requested_order},
          {"discarded_roots", fit.discarded_roots},
          {"refined", fit.refined},
          {"aliased", fit.aliased},
          {"residual_rms", fit.residual_rms},
          {"terms", terms}};
}

PronyFit fit_from_json(const json& j) {
  PronyFit fit;
  fit.window.start = j.at("window").at("start").get<Eigen::Index>();
  fit.window.length = j.at("window").at("length").get<Eigen::Index>();
  fit.dt = j.at("dt").get<Real>();
  fit.t_ref = j.at("t_ref").get<Real>();
  fit.order = j.at("order").get<int>();
  fit.requested_order = j.value("requested_order", fit.order);
  fit.discarded_roots = j.value("discarded_roots", 0);
  fit.refined = j.value("refined", false);
  fit.aliased = j.value("aliased", std::vector<int>());
  fit.residual_rms = j.at("residual_rms").get<Real>();
  for (const auto& jt : j.at("terms")) {
    fit.terms.push_back({Complex(jt.at("re_gamma").get<Real>(), jt.at("im_gamma").get<Real>()),
                         Complex(jt.at("re_A").get<Real>(), jt.at("im_A").get<Real>())});
  }
  return fit;
}

json library_to_json(const SignatureLibrary& lib) {
  json entries = json::array();
  for (const auto& e : lib.entries) {
    json poles = json::array();
    for (const auto& p : e.poles) {
      poles.push_back({{"re", p.value.real()},
                       {"im", p.value.imag()},
                       {"spread_re", p.spread.real()},
                       {"spread_im", p.spread.imag()},
                       {"support", p.support}});
    }
    entries.push_back({{"body", e.body_label}, {"m", e.m}, {"poles", poles}});
  }
  return {{"provenance", lib.provenance}, {"entries", entries}};
}

SignatureLibrary library_from_json(const json& j) {
  SignatureLibrary lib;
  lib.provenance = j.value("provenance", std::string());
  for (const auto& je : j.at("entries")) {
    PoleSignature sig;
    sig.body_label = je.at("body").get<std::string>();
    sig.m = je.at("m").get<int>();
    for (const auto& jp : je.at("poles")) {
      NormalizedPole p;
      p.value = Complex(jp.at("re").get<Real>(), jp.at("im").get<Real>());
      p.spread = Complex(jp.value("spread_re", 0.0), jp.value("spread_im", 0.0));
      p.support = jp.value("support", 1);
      sig.poles.push_back(p);
    }
    lib.entries.push_back(std::move(sig));
  }
  return lib;
}

void save_response_csv(const TimeSeries& series, const std::string& path) {
  std::string text = "t,value\n";
  for (Eigen::Index k = 0; k < series.size(); ++k) {
    text += fmt(series.time(k));
    text += ',';
    text += fmt(series.values[k]);
    text += '\n';
  }
  write_text_file(path, text);
}

TimeSeries load_response_csv(const std::string& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), "empty response file: " + path);
  std::vector<Real> times, values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const size_t comma = line.find(',');
    require(comma != std::string::npos, "malformed response row in " + path);
    times.push_back(std::stod(line.substr(0, comma)));
    values.push_back(std::stod(line.substr(comma + 1)));
  }
  require(times.size() >= 2, "response file too short: " + path);
  TimeGrid grid(times.front(), times[1] - times.front(), static_cast<Eigen::Index>(times.size()));
  Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(values.data(),
                                                        static_cast<Eigen::Index>(values.size()));
  return TimeSeries(grid, std::move(v));
}

void save_record(const RunRecord& record) {
  json cells = json::array();
  for (const auto& c : record.cells) cells.push_back(cell_to_json(c));
  const json j = {{"config_hash", record.config_hash},
                  {"config", config_to_json(record.config)},
                  {"cells", cells},
                  {"signature_file", record.signature_file}};
  write_text_file(record.config.output_dir + "/record.json", j.dump(2) + "\n");
}

RunRecord load_record(const std::string& output_dir) {
  const json j = json::parse(read_text_file(output_dir + "/record.json"));
  RunRecord rec;
  rec.config = config_from_json(j.at("config"));
  rec.config.output_dir = output_dir;
  rec.config_hash = j.at("config_hash").get<std::string>();
  require(rec.config_hash == config_hash(rec.config),
          "record.json config hash does not match its config");
  for (const auto& jc : j.at("cells")) rec.cells.push_back(cell_from_json(jc));
  rec.signature_file = j.value("signature_file", std::string());

  for (const auto& c : rec.cells) {
    for (const auto& f : c.response_files) {
      require(std::filesystem::exists(output_dir + "/" + f), "missing response file: " + f);
    }
    for (const auto& f : c.fit_files) {
      require(std::filesystem::exists(output_dir + "/" + f), "missing fit file: " + f);
    }
  }
  if (!rec.signature_file.empty()) {
    rec.signatures = library_from_json(json::parse(read_text_file(output_dir + "/" + rec.signature_file)));
  }
  return rec;
}

std::string format_table(const SignatureLibrary& lib, const std::vector<std::string>& body_order) {
  std::string text = "Complex eigenfrequencies (gamma*a/c) of bodies of revolution\n";
  const std::vector<int> rows = {0, 1, 2, 3, kSumHarmonics};
  size_t name_width = 0;
  for (const auto& b : body_order) name_width = std::max(name_width, pretty_body_name(b).size());
  for (int m : rows) {
    bool row_present = false;
    for (const auto& b : body_order)
      if (find_signature(lib, b, m)) row_present = true;
    if (!row_present) continue;
    text += m == kSumHarmonics ? "\nsum over m = 0..3\n" : "\nm = " + std::to_string(m) + "\n";
    for (const auto& b : body_order) {
      const PoleSignature* sig = find_signature(lib, b, m);
      std::string name = pretty_body_name(b);
      name.resize(name_width, ' ');
      text += "  " + name + "  ";
      text += sig ? format_pole_cell(*sig) : "—";
      text += '\n';
    }
  }
  return text;
}

std::string emit_table(const RunRecord& record) {
  std::vector<std::string> order;
  for (const auto& b : record.config.bodies) order.push_back(b.label);
  const std::string text = format_table(record.signatures, order);
  write_text_file(record.config.output_dir + "/table.txt", text);

  std::string csv = "body,m,re,im,spread_re,spread_im,support\n";
  for (const auto& e : record.signatures.entries) {
    const std::string mrow = e.m == kSumHarmonics ? "sum" : std::to_string(e.m);
    for (const auto& p : e.poles) {
      csv += e.body_label + "," + mrow + "," + fmt(p.value.real()) + "," + fmt(p.value.imag()) +
             "," + fmt(p.spread.real()) + "," + fmt(p.spread.imag()) + "," +
             std::to_string(p.support) + "\n";
    }
  }
  write_text_file(record.config.output_dir + "/table.csv", csv);
  return text;
}

void emit_plot_data(const RunRecord& record) {
  const std::string& dir = record.config.output_dir;
  std::string poles = "body,m,re,im,spread_re,spread_im,support\n";
  for (const auto& e : record.signatures.entries) {
    const std::string mrow = e.m == kSumHarmonics ? "sum" : std::to_string(e.m);
    for (const auto& p : e.poles) {
      poles += e.body_label + "," + mrow + "," + fmt(p.value.real()) + "," + fmt(p.value.imag()) +
               "," + fmt(p.spread.real()) + "," + fmt(p.spread.imag()) + "," +
               std::to_string(p.support) + "\n";
    }
  }
  write_text_file(dir + "/plots/poles.csv", poles);

  for (const auto& c : record.cells) {
    if (c.status != "ok") continue;
    for (const auto& f : c.response_files) {
      const TimeSeries resp = load_response_csv(dir + "/" + f);
      std::string env = "t,log10_abs\n";
      for (Eigen::Index k = 0; k < resp.size(); ++k) {
        const Real mag = std::max(std::abs(resp.values[k]), 1e-300);
        env += fmt(resp.time(k)) + "," + fmt(std::log10(mag)) + "\n";
      }
      std::string name = std::filesystem::path(f).stem().string();
      write_text_file(dir + "/plots/envelope_" + name + ".csv", env);
    }
  }
}

} // namespace borsem
