#include "qkr/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "qkr/error.hpp"
#include "qkr/version.hpp"

namespace qkr {

namespace {

using KeySet = std::set<std::string>;

void reject_unknown_keys(const json& obj, const KeySet& allowed, const std::string& where) {
  if (!obj.is_object()) throw ValidationError(where, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key)) {
      throw ValidationError(where.empty() ? key : where + "." + key, "unknown key");
    }
  }
}

std::string qualify(const std::string& where, const std::string& key) {
  if (where.empty()) return key;
  return key.starts_with('[') ? where + key : where + "." + key;
}

double get_number(const json& obj, const std::string& key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ValidationError(qualify(where, key), "expected a number");
  return v.get<double>();
}

long get_integer(const json& obj, const std::string& key, const std::string& where) {
  const auto& v = obj.at(key);
  if (v.is_number_integer()) return v.get<long>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isfinite(d) && d == std::round(d) && std::abs(d) < 9e15) return static_cast<long>(d);
  }
  throw ValidationError(qualify(where, key), "expected an integer");
}

std::string get_string(const json& obj, const std::string& key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_string()) throw ValidationError(qualify(where, key), "expected a string");
  return v.get<std::string>();
}

bool get_bool(const json& obj, const std::string& key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_boolean()) throw ValidationError(qualify(where, key), "expected true or false");
  return v.get<bool>();
}

template <class T>
std::vector<T> get_array(const json& obj, const std::string& key, const std::string& where,
                         T (*get)(const json&, const std::string&, const std::string&)) {
  const auto& v = obj.at(key);
  const auto field = qualify(where, key);
  if (!v.is_array()) throw ValidationError(field, "expected an array");
  std::vector<T> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const json wrapper{{"[" + std::to_string(i) + "]", v[i]}};
    out.push_back(get(wrapper, wrapper.begin().key(), field));
  }
  return out;
}

FitWindow parse_window(const json& v, const std::string& field) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw ValidationError(field, "expected [t_min, t_max]");
  }
  FitWindow w{std::lround(v[0].get<double>()), std::lround(v[1].get<double>())};
  if (w.t_min < 1 || w.t_max < w.t_min) throw ValidationError(field, "need 1 <= t_min <= t_max");
  return w;
}

void parse_params(const json& doc, RunConfig& c) {
  auto& p = c.params;
  if (doc.contains("method")) p.method = method_from_string(get_string(doc, "method", ""));
  if (doc.contains("K")) p.kick_strength = get_number(doc, "K", "");
  if (doc.contains("g")) p.coupling = get_number(doc, "g", "");
  if (doc.contains("hbar_eff")) p.hbar_eff = get_number(doc, "hbar_eff", "");
  if (doc.contains("gamma")) p.gamma = get_number(doc, "gamma", "");
  if (doc.contains("n_modes")) p.n_modes = get_integer(doc, "n_modes", "");
  if (doc.contains("dt")) p.dt = get_number(doc, "dt", "");
  if (doc.contains("n_kicks")) p.n_kicks = get_integer(doc, "n_kicks", "");
  if (doc.contains("boundary_threshold")) {
    p.boundary_threshold = get_number(doc, "boundary_threshold", "");
  }
  if (doc.contains("n0")) c.n0 = get_integer(doc, "n0", "");
}

void parse_ensemble(const json& e, EnsembleConfig& c) {
  const std::string w = "ensemble";
  reject_unknown_keys(e, {"initial_momenta", "seed", "record_times", "samples_per_decade"}, w);
  if (e.contains("initial_momenta")) {
    c.initial_momenta = get_array<long>(e, "initial_momenta", w, get_integer);
  }
  if (e.contains("seed")) {
    const long s = get_integer(e, "seed", w);
    if (s < 0) throw ValidationError("ensemble.seed", "must be non-negative");
    c.seed = static_cast<std::uint64_t>(s);
  }
  if (e.contains("record_times")) {
    c.record_times = get_array<long>(e, "record_times", w, get_integer);
  }
  if (e.contains("samples_per_decade")) {
    c.samples_per_decade = static_cast<int>(get_integer(e, "samples_per_decade", w));
    if (c.samples_per_decade < 1) {
      throw ValidationError("ensemble.samples_per_decade", "must be positive");
    }
  }
}

void parse_sweep(const json& s, SweepConfig& c) {
  const std::string w = "sweep";
  reject_unknown_keys(s, {"g_values", "K_values", "methods", "fit_window"}, w);
  if (s.contains("g_values")) c.g_values = get_array<double>(s, "g_values", w, get_number);
  if (s.contains("K_values")) c.k_values = get_array<double>(s, "K_values", w, get_number);
  if (s.contains("methods")) {
    c.methods.clear();
    for (const auto& name : get_array<std::string>(s, "methods", w, get_string)) {
      c.methods.push_back(method_from_string(name));
    }
  }
  if (s.contains("fit_window")) c.fit_window = parse_window(s.at("fit_window"), "sweep.fit_window");
  for (double g : c.g_values) {
    if (!(g > 0.0)) throw ValidationError("sweep.g_values", "values must be positive");
  }
  for (double k : c.k_values) {
    if (!(k > 0.0)) throw ValidationError("sweep.K_values", "values must be positive");
  }
}

void parse_diagnose(const json& d, DiagnoseConfig& c) {
  const std::string w = "diagnose";
  reject_unknown_keys(d, {"kicks", "randomized_draws", "correlation_draws", "population_cutoff",
                          "functional_cutoff"},
                      w);
  if (d.contains("kicks")) c.kicks = get_integer(d, "kicks", w);
  if (d.contains("randomized_draws")) c.randomized_draws = get_integer(d, "randomized_draws", w);
  if (d.contains("correlation_draws")) c.correlation_draws = get_integer(d, "correlation_draws", w);
  if (d.contains("population_cutoff")) c.population_cutoff = get_number(d, "population_cutoff", w);
  if (d.contains("functional_cutoff")) c.functional_cutoff = get_number(d, "functional_cutoff", w);
  if (c.kicks < 1) throw ValidationError("diagnose.kicks", "must be positive");
  if (c.randomized_draws < 1) throw ValidationError("diagnose.randomized_draws", "must be positive");
  if (c.correlation_draws < 0) {
    throw ValidationError("diagnose.correlation_draws", "must be non-negative");
  }
}

void parse_convergence(const json& v, ConvergenceConfig& c) {
  const std::string w = "convergence";
  reject_unknown_keys(v, {"dt_values", "horizon"}, w);
  if (v.contains("dt_values")) {
    c.dt_values = get_array<double>(v, "dt_values", w, get_number);
  }
  if (v.contains("horizon")) c.horizon = get_integer(v, "horizon", w);
  if (c.horizon < 1) throw ValidationError("convergence.horizon", "must be positive");
  for (double dt : c.dt_values) {
    SimulationParams probe;
    probe.dt = dt;
    try {
      probe.validate();
    } catch (const ValidationError& e) {
      throw ValidationError("convergence.dt_values", e.what());
    }
  }
}

void parse_output(const json& o, OutputConfig& c) {
  const std::string w = "output";
  reject_unknown_keys(o, {"directory", "prefix", "csv", "json"}, w);
  if (o.contains("directory")) c.directory = get_string(o, "directory", w);
  if (o.contains("prefix")) c.prefix = get_string(o, "prefix", w);
  if (o.contains("csv")) c.csv = get_bool(o, "csv", w);
  if (o.contains("json")) c.json = get_bool(o, "json", w);
}

}  // namespace

std::vector<long> RunConfig::record_times() const {
  if (!ensemble.record_times.empty()) return ensemble.record_times;
  auto times = log_spaced_times(params.n_kicks, ensemble.samples_per_decade);
  times.insert(times.begin(), 0L);
  return times;
}

FitWindow RunConfig::default_fit_window() const {
  FitWindow w = scale == "paper" ? FitWindow{10000, 100000} : FitWindow{100, 10000};
  w.t_max = std::min(w.t_max, params.n_kicks);
  w.t_min = std::min(w.t_min, std::max(1L, w.t_max / 10));
  return w;
}

EnsembleSpec RunConfig::ensemble_spec() const {
  EnsembleSpec spec;
  spec.initial_momenta = ensemble.initial_momenta;
  spec.seed = ensemble.seed;
  spec.params = params;
  spec.record_times = record_times();
  return spec;
}

void apply_scale(RunConfig& config, const std::string& scale) {
  if (scale == "desk") {
    config.params.n_kicks = 10000;
    config.params.dt = 1e-3;
  } else if (scale == "paper") {
    config.params.n_kicks = 100000;
    config.params.dt = 1e-4;
  } else {
    throw ValidationError("scale", "expected 'desk' or 'paper'");
  }
  config.scale = scale;
}

RunConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError("<document>", std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("<document>", "expected a JSON object");
  reject_unknown_keys(doc,
                      {"method", "K", "g", "hbar_eff", "gamma", "n_modes", "dt", "n_kicks",
                       "boundary_threshold", "n0", "scale", "ensemble", "sweep", "diagnose",
                       "convergence", "output"},
                      "");
  RunConfig c;
  if (doc.contains("scale")) apply_scale(c, get_string(doc, "scale", ""));
  parse_params(doc, c);
  if (doc.contains("ensemble")) parse_ensemble(doc.at("ensemble"), c.ensemble);
  if (doc.contains("sweep")) parse_sweep(doc.at("sweep"), c.sweep);
  if (doc.contains("diagnose")) parse_diagnose(doc.at("diagnose"), c.diagnose);
  if (doc.contains("convergence")) parse_convergence(doc.at("convergence"), c.convergence);
  if (doc.contains("output")) parse_output(doc.at("output"), c.output);

  c.params.validate();
  const auto grid = ModeGrid::from(c.params);
  if (!grid.contains(c.n0)) throw ValidationError("n0", "initial momentum off the grid");
  c.ensemble_spec().validate();
  return c;
}

RunConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

json to_json(const SimulationParams& p) {
  return json{{"method", std::string(to_string(p.method))},
              {"K", p.kick_strength},
              {"g", p.coupling},
              {"hbar_eff", p.hbar_eff},
              {"gamma", p.gamma},
              {"n_modes", p.n_modes},
              {"dt", p.dt},
              {"n_kicks", p.n_kicks},
              {"boundary_threshold", p.boundary_threshold}};
}

json to_json(const RunConfig& c) {
  json doc = to_json(c.params);
  doc["n0"] = c.n0;
  doc["scale"] = c.scale;
  doc["ensemble"] = {{"initial_momenta", c.ensemble.initial_momenta},
                     {"seed", c.ensemble.seed},
                     {"record_times", c.record_times()},
                     {"samples_per_decade", c.ensemble.samples_per_decade}};
  json methods = json::array();
  for (Method m : c.sweep.methods) methods.push_back(std::string(to_string(m)));
  const FitWindow w = c.sweep.fit_window.value_or(c.default_fit_window());
  doc["sweep"] = {{"g_values", c.sweep.g_values},
                  {"K_values", c.sweep.k_values},
                  {"methods", methods},
                  {"fit_window", {w.t_min, w.t_max}}};
  doc["diagnose"] = {{"kicks", c.diagnose.kicks},
                     {"randomized_draws", c.diagnose.randomized_draws},
                     {"correlation_draws", c.diagnose.correlation_draws},
                     {"population_cutoff", c.diagnose.population_cutoff},
                     {"functional_cutoff", c.diagnose.functional_cutoff}};
  doc["convergence"] = {{"dt_values", c.convergence.dt_values}, {"horizon", c.convergence.horizon}};
  doc["output"] = {{"directory", c.output.directory.string()},
                   {"prefix", c.output.prefix},
                   {"csv", c.output.csv},
                   {"json", c.output.json}};
  return doc;
}

json to_json(const RunMetadata& m) {
  json doc{{"code", "qkr"},
           {"code_version", kVersion},
           {"params", to_json(m.params)},
           {"seed", m.seed},
           {"initial_momenta", m.initial_momenta},
           {"scale", m.scale},
           {"status", m.status},
           {"energy_convention", m.energy_convention}};
  doc["fit_window"] = m.fit_window ? json{m.fit_window->t_min, m.fit_window->t_max} : json(nullptr);
  return doc;
}

RunMetadata metadata_from_json(const json& j) {
  try {
    RunMetadata m;
    const auto& p = j.at("params");
    m.params.method = method_from_string(p.at("method").get<std::string>());
    m.params.kick_strength = p.at("K").get<double>();
    m.params.coupling = p.at("g").get<double>();
    m.params.hbar_eff = p.at("hbar_eff").get<double>();
    m.params.gamma = p.at("gamma").get<double>();
    m.params.n_modes = p.at("n_modes").get<long>();
    m.params.dt = p.at("dt").get<double>();
    m.params.n_kicks = p.at("n_kicks").get<long>();
    m.params.boundary_threshold = p.at("boundary_threshold").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.initial_momenta = j.at("initial_momenta").get<std::vector<long>>();
    m.scale = j.at("scale").get<std::string>();
    m.status = j.at("status").get<std::string>();
    m.energy_convention = j.at("energy_convention").get<std::string>();
    if (j.contains("fit_window") && !j.at("fit_window").is_null()) {
      m.fit_window = parse_window(j.at("fit_window"), "metadata.fit_window");
    }
    return m;
  } catch (const json::exception& e) {
    throw ValidationError("metadata", std::string("malformed metadata: ") + e.what());
  }
}

json to_json(const ExponentFit& fit) {
  return json{{"alpha", fit.alpha},
              {"intercept", fit.intercept},
              {"intercept_log_base", "e"},
              {"stderr", fit.stderr_alpha},
              {"window", {fit.window.t_min, fit.window.t_max}},
              {"n_samples", fit.n_samples}};
}

json to_json(const KsResult& ks) {
  return json{{"statistic", ks.statistic}, {"p_value", ks.p_value}, {"n_samples", ks.n_samples}};
}

json to_json(const RandomizedPhaseReport& r) {
  return json{{"n_draws", r.n_draws},
              {"n_modes_compared", r.n_modes_compared},
              {"median_log10_ratio", r.median_log10_ratio},
              {"mean_log10_ratio", r.mean_log10_ratio},
              {"max_abs_log10_ratio", r.max_abs_log10_ratio},
              {"per_draw_median", r.per_draw_median}};
}

namespace {
json complex_array(const std::vector<cplx>& v) {
  json re = json::array(), im = json::array();
  for (auto z : v) {
    re.push_back(z.real());
    im.push_back(z.imag());
  }
  return json{{"re", re}, {"im", im}};
}
}  // namespace

json to_json(const PhaseCorrelationReport& r) {
  return json{{"n_draws", r.n_draws},
              {"modes", r.modes},
              {"population", r.population},
              {"mean_F", complex_array(r.mean_F)},
              {"mean_F_dephased", complex_array(r.mean_F_dephased)},
              {"mean_abs2_F", r.mean_abs2_F},
              {"stderr_abs2_F", r.stderr_abs2_F},
              {"closed_form_abs2_F", r.closed_form_abs2_F},
              {"mean_F_psi_conj", complex_array(r.mean_F_psi_conj)},
              {"offdiag_FF_rms", r.offdiag_FF_rms},
              {"offdiag_FF_max", r.offdiag_FF_max},
              {"offdiag_Fpsi_rms", r.offdiag_Fpsi_rms},
              {"offdiag_Fpsi_max", r.offdiag_Fpsi_max}};
}

json to_json(const FunctionalFidelity& f) {
  return json{{"n_modes_compared", f.n_modes_compared},
              {"median_abs_log10_ratio", f.median_abs_log10_ratio},
              {"max_abs_log10_ratio", f.max_abs_log10_ratio}};
}

json to_json(const DiagnosticsReport& r) {
  json members = json::array();
  for (const auto& m : r.members) {
    members.push_back({{"n0", m.n0},
                       {"ks", to_json(m.ks)},
                       {"ks_rejected", m.ks_rejected},
                       {"paa_fidelity", to_json(m.fidelity)},
                       {"randomized_phase", to_json(m.randomized)}});
  }
  return json{{"metadata", to_json(r.metadata)},
              {"kicks", r.options.kicks},
              {"randomized_draws", r.options.randomized_draws},
              {"phase_population_cutoff", r.options.phase_population_cutoff},
              {"functional_cutoff", r.options.functional_cutoff},
              {"ks_level", r.options.ks_level},
              {"ks_not_rejected", r.ks_not_rejected},
              {"median_randomized_log10_ratio", r.median_randomized_log10_ratio},
              {"median_paa_abs_log10_ratio", r.median_paa_abs_log10_ratio},
              {"members", members}};
}

json to_json(const ConvergenceTable& t) {
  return json{{"horizon", t.horizon},
              {"dt_values", t.dt_values},
              {"energies", t.energies},
              {"differences", t.differences},
              {"ratios", t.ratios}};
}

json to_json(const SweepResult& r) {
  json entries = json::array();
  for (const auto& e : r.entries) {
    json item{{"g", e.coupling}, {"K", e.kick_strength}, {"method", std::string(to_string(e.method))}};
    item["fit"] = e.fit ? to_json(*e.fit) : json(nullptr);
    item["error"] = e.error;
    entries.push_back(item);
  }
  json hists = json::object();
  for (const auto& [m, h] : r.histograms) {
    hists[std::string(to_string(m))] = {{"lo", h.lo},
                                        {"hi", h.hi},
                                        {"bin_width", h.bin_width},
                                        {"counts", h.counts},
                                        {"underflow", h.underflow},
                                        {"overflow", h.overflow}};
  }
  return json{{"metadata", to_json(r.metadata)},
              {"fit_window", {r.window.t_min, r.window.t_max}},
              {"entries", entries},
              {"histograms", hists}};
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_json(const json& doc, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

namespace {

void write_metadata_header(std::ostream& out, const RunMetadata& m) {
  const auto& p = m.params;
  out << "# qkr " << kVersion << '\n'
      << "# method: " << to_string(p.method) << '\n'
      << "# K: " << format_double(p.kick_strength) << '\n'
      << "# g: " << format_double(p.coupling) << '\n'
      << "# hbar_eff: " << format_double(p.hbar_eff) << '\n'
      << "# gamma: " << format_double(p.gamma) << '\n'
      << "# n_modes: " << p.n_modes << '\n'
      << "# dt: " << format_double(p.dt) << '\n'
      << "# n_kicks: " << p.n_kicks << '\n'
      << "# boundary_threshold: " << format_double(p.boundary_threshold) << '\n'
      << "# seed: " << m.seed << '\n'
      << "# initial_momenta:";
  for (long n0 : m.initial_momenta) out << ' ' << n0;
  out << '\n';
  if (m.fit_window) out << "# fit_window: " << m.fit_window->t_min << ' ' << m.fit_window->t_max << '\n';
  out << "# scale: " << m.scale << '\n'
      << "# status: " << m.status << '\n'
      << "# energy: " << m.energy_convention << '\n'
      << "# metadata: " << to_json(m).dump() << '\n';
}

}  // namespace

void write_timeseries(const TimeSeries& series, const std::filesystem::path& path, Format format) {
  series.validate();
  if (format == Format::JSON) {
    write_json(json{{"metadata", to_json(series.metadata)},
                    {"times", series.times},
                    {"energies", series.energies}},
               path);
    return;
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_metadata_header(out, series.metadata);
  out << "kick_index,energy\n";
  for (std::size_t i = 0; i < series.times.size(); ++i) {
    out << series.times[i] << ',' << format_double(series.energies[i]) << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

TimeSeries read_timeseries(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  TimeSeries s;
  if (first != std::string::npos && text[first] == '{') {
    try {
      const json doc = json::parse(text);
      s.metadata = metadata_from_json(doc.at("metadata"));
      s.times = doc.at("times").get<std::vector<long>>();
      s.energies = doc.at("energies").get<std::vector<double>>();
    } catch (const json::exception& e) {
      throw ValidationError("input", std::string("malformed time-series document: ") + e.what());
    }
  } else {
    std::istringstream lines(text);
    std::string line;
    bool header_seen = false;
    const std::string meta_tag = "# metadata: ";
    while (std::getline(lines, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (line.rfind(meta_tag, 0) == 0) {
        try {
          s.metadata = metadata_from_json(json::parse(line.substr(meta_tag.size())));
        } catch (const json::exception& e) {
          throw ValidationError("metadata", e.what());
        }
        continue;
      }
      if (line[0] == '#') continue;
      if (!header_seen) {
        if (line != "kick_index,energy") {
          throw ValidationError("input", "expected CSV header 'kick_index,energy'");
        }
        header_seen = true;
        continue;
      }
      const auto comma = line.find(',');
      if (comma == std::string::npos) throw ValidationError("input", "bad CSV row: " + line);
      try {
        s.times.push_back(std::stol(line.substr(0, comma)));
        s.energies.push_back(std::stod(line.substr(comma + 1)));
      } catch (const std::exception&) {
        throw ValidationError("input", "bad CSV row: " + line);
      }
    }
    if (!header_seen) throw ValidationError("input", "no CSV header found");
  }
  s.validate();
  return s;
}

void write_histogram(const SweepResult& result, const std::filesystem::path& path, Format format) {
  if (format == Format::JSON) {
    write_json(to_json(result), path);
    return;
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_metadata_header(out, result.metadata);
  out << "method,bin_lo,bin_hi,count\n";
  for (const auto& [m, h] : result.histograms) {
    out << to_string(m) << ",-inf," << format_double(h.lo) << ',' << h.underflow << '\n';
    for (std::size_t i = 0; i < h.bin_count(); ++i) {
      out << to_string(m) << ',' << format_double(h.bin_lo(i)) << ','
          << format_double(h.bin_lo(i + 1)) << ',' << h.counts[i] << '\n';
    }
    out << to_string(m) << ',' << format_double(h.hi) << ",inf," << h.overflow << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace qkr
