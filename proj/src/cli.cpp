#include "qkr/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"

#include "qkr/error.hpp"
#include "qkr/io.hpp"
#include "qkr/runner.hpp"
#include "qkr/version.hpp"

namespace qkr {

namespace {

namespace fs = std::filesystem;

// (g, K) pairs for the fig1 preset, from localization (g = 0) to strong
// subdiffusion.
struct PresetPair {
  double g;
  double k;
};
constexpr PresetPair kPaperFig1[] = {{0.0, 5.0}, {5.0, 8.0}, {10.0, 12.0}, {12.0, 12.0}};

/// Flags shared by the simulation subcommands. Unset flags leave the config alone.
struct Overrides {
  std::string config_path;
  std::optional<std::string> method;
  std::optional<double> k, g, hbar_eff, gamma, dt, threshold;
  std::optional<long> n_modes, n_kicks, n0;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> scale;
  std::vector<long> initial_momenta;
  std::optional<std::string> out_dir, prefix, format;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config_path, "JSON run configuration");
    app->add_option("--method", method, "GPE, LMA, PAA or NONINTERACTING");
    app->add_option("--K", k, "kick strength");
    app->add_option("--g", g, "interaction strength");
    app->add_option("--hbar-eff", hbar_eff, "effective Planck constant");
    app->add_option("--gamma", gamma, "LMA prefactor");
    app->add_option("--n-modes", n_modes, "momentum modes (even)");
    app->add_option("--dt", dt, "split-step time step (1/dt integer)");
    app->add_option("--kicks", n_kicks, "number of kicks");
    app->add_option("--n0", n0, "initial momentum index (simulate)");
    app->add_option("--momenta", initial_momenta, "ensemble initial momentum indices");
    app->add_option("--seed", seed, "random seed");
    app->add_option("--boundary-threshold", threshold, "edge population abort level");
    app->add_option("--scale", scale, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
    app->add_option("-o,--out-dir", out_dir, "output directory");
    app->add_option("--prefix", prefix, "output file prefix");
    app->add_option("--format", format, "csv, json or both")
        ->check(CLI::IsMember({"csv", "json", "both"}));
  }

  RunConfig load() const {
    RunConfig c = config_path.empty() ? parse_config("{}") : parse_config_file(config_path);
    if (scale) apply_scale(c, *scale);
    auto& p = c.params;
    if (method) p.method = method_from_string(*method);
    if (k) p.kick_strength = *k;
    if (g) p.coupling = *g;
    if (hbar_eff) p.hbar_eff = *hbar_eff;
    if (gamma) p.gamma = *gamma;
    if (dt) p.dt = *dt;
    if (threshold) p.boundary_threshold = *threshold;
    if (n_modes) p.n_modes = *n_modes;
    if (n_kicks) p.n_kicks = *n_kicks;
    if (n0) c.n0 = *n0;
    if (seed) c.ensemble.seed = *seed;
    if (!initial_momenta.empty()) c.ensemble.initial_momenta = initial_momenta;
    if (out_dir) c.output.directory = *out_dir;
    if (prefix) c.output.prefix = *prefix;
    if (format) {
      c.output.csv = *format != "json";
      c.output.json = *format != "csv";
    }
    // Record times derived from an earlier n_kicks would now be out of range.
    if (n_kicks || scale) {
      std::erase_if(c.ensemble.record_times, [&](long t) { return t > p.n_kicks; });
    }
    p.validate();
    if (!ModeGrid::from(p).contains(c.n0)) {
      throw ValidationError("n0", "initial momentum off the grid");
    }
    return c;
  }
};

fs::path prepare_output(const RunConfig& c, const std::string& stem) {
  std::error_code ec;
  fs::create_directories(c.output.directory, ec);
  if (ec) throw IoError("cannot create " + c.output.directory.string() + ": " + ec.message());
  return c.output.directory / (c.output.prefix + "_" + stem);
}

std::vector<fs::path> write_series(const RunConfig& c, const TimeSeries& s, const std::string& stem) {
  const fs::path base = prepare_output(c, stem);
  std::vector<fs::path> written;
  if (c.output.csv) {
    written.push_back(fs::path(base.string() + ".csv"));
    write_timeseries(s, written.back(), Format::CSV);
  }
  if (c.output.json) {
    written.push_back(fs::path(base.string() + ".json"));
    write_timeseries(s, written.back(), Format::JSON);
  }
  return written;
}

fs::path write_document(const RunConfig& c, const json& doc, const std::string& stem) {
  const fs::path path = prepare_output(c, stem).string() + ".json";
  write_json(doc, path);
  return path;
}

std::string partial_status(const std::vector<MemberFailure>& failures) {
  std::ostringstream os;
  os << "partial:";
  for (const auto& f : failures) {
    os << " n0=" << f.n0;
    if (f.kick) os << " aborted at kick " << *f.kick;
    os << ";";
  }
  return os.str();
}

std::string tag(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

struct EnsembleOutcome {
  json summary;
  bool complete = true;
};

EnsembleOutcome run_and_write_ensemble(const RunConfig& c, const std::string& stem, std::ostream& out) {
  const auto spec = c.ensemble_spec();
  auto result = run_ensemble(spec);
  TimeSeries mean = std::move(result.mean);
  mean.metadata.scale = c.scale;
  const FitWindow window = c.sweep.fit_window.value_or(c.default_fit_window());

  EnsembleOutcome outcome;
  outcome.complete = result.complete();
  json entry{{"g", c.params.coupling}, {"K", c.params.kick_strength}, {"stem", stem}};
  if (!outcome.complete) {
    mean.metadata.status = partial_status(result.failures);
    json failures = json::array();
    for (const auto& f : result.failures) {
      failures.push_back({{"n0", f.n0},
                          {"kick", f.kick ? json(*f.kick) : json(nullptr)},
                          {"edge_population", f.edge_population},
                          {"message", f.message}});
    }
    entry["failures"] = failures;
  }
  if (!mean.times.empty()) {
    try {
      mean.metadata.fit_window = window;
      entry["fit"] = to_json(fit_subdiffusion(mean, window));
    } catch (const ValidationError& e) {
      mean.metadata.fit_window.reset();
      entry["fit"] = nullptr;
      entry["fit_error"] = e.what();
    }
    for (const auto& p : write_series(c, mean, stem)) out << "wrote " << p.string() << '\n';
  }
  entry["status"] = mean.metadata.status;
  outcome.summary = entry;
  return outcome;
}

// --- subcommands ---------------------------------------------------------

int cmd_simulate(const Overrides& o, std::ostream& out, std::ostream& err) {
  RunConfig c = o.load();
  EnsembleSpec spec = c.ensemble_spec();
  spec.initial_momenta = {c.n0};
  auto result = run_ensemble(spec);
  TimeSeries series;
  if (result.complete()) {
    series = std::move(result.members.front());
  } else {
    series = std::move(result.failures.front().partial);
    series.metadata.status = partial_status(result.failures);
  }
  series.metadata.seed = c.ensemble.seed;
  series.metadata.scale = c.scale;
  for (const auto& p : write_series(c, series, "simulate")) out << "wrote " << p.string() << '\n';
  if (!result.complete()) {
    err << "error: " << result.failures.front().message << '\n';
    return kExitAborted;
  }
  if (!series.energies.empty()) {
    out << "final <p^2> = " << format_double(series.energies.back()) << '\n';
  }
  return kExitOk;
}

int cmd_ensemble(const Overrides& o, const std::string& preset, std::ostream& out,
                 std::ostream& err) {
  RunConfig c = o.load();
  json runs = json::array();
  bool complete = true;
  if (preset.empty()) {
    auto r = run_and_write_ensemble(c, "ensemble", out);
    complete = r.complete;
    runs.push_back(r.summary);
  } else {
    c.params.hbar_eff = 2.89;
    c.params.validate();
    for (const auto& pair : kPaperFig1) {
      RunConfig run = c;
      run.params.coupling = pair.g;
      run.params.kick_strength = pair.k;
      auto r = run_and_write_ensemble(run, "fig1_g" + tag(pair.g) + "_K" + tag(pair.k), out);
      complete = complete && r.complete;
      runs.push_back(r.summary);
    }
  }
  json doc{{"config", to_json(c)}, {"code_version", kVersion}, {"runs", runs}};
  if (!preset.empty()) doc["preset"] = preset;
  out << "wrote " << write_document(c, doc, "ensemble_summary").string() << '\n';
  if (!complete) {
    err << "error: boundary overflow in at least one member; outputs flagged partial\n";
    return kExitAborted;
  }
  return kExitOk;
}

int cmd_sweep(const Overrides& o, const std::vector<double>& g_values,
              const std::vector<double>& k_values, const std::vector<std::string>& methods,
              std::ostream& out) {
  RunConfig c = o.load();
  if (!g_values.empty()) c.sweep.g_values = g_values;
  if (!k_values.empty()) c.sweep.k_values = k_values;
  if (!methods.empty()) {
    c.sweep.methods.clear();
    for (const auto& m : methods) c.sweep.methods.push_back(method_from_string(m));
  }
  if (c.sweep.g_values.empty()) throw ValidationError("sweep.g_values", "must not be empty");
  if (c.sweep.k_values.empty()) throw ValidationError("sweep.K_values", "must not be empty");
  const FitWindow window = c.sweep.fit_window.value_or(c.default_fit_window());
  auto result = sweep_parameters(c.sweep.g_values, c.sweep.k_values, c.sweep.methods,
                                 c.ensemble_spec(), window);
  result.metadata.scale = c.scale;
  const bool failed = std::any_of(result.entries.begin(), result.entries.end(),
                                  [](const SweepEntry& e) { return !e.error.empty(); });
  if (failed) result.metadata.status = "partial: some entries failed, see entries[].error";
  const fs::path base = prepare_output(c, "sweep");
  if (c.output.csv) {
    write_histogram(result, base.string() + ".csv", Format::CSV);
    out << "wrote " << base.string() << ".csv\n";
  }
  if (c.output.json) {
    write_histogram(result, base.string() + ".json", Format::JSON);
    out << "wrote " << base.string() << ".json\n";
  }
  return failed ? kExitAborted : kExitOk;
}

int cmd_fit(const std::string& input, const std::vector<double>& window_values,
            const std::string& output, std::ostream& out) {
  const TimeSeries series = read_timeseries(input);
  FitWindow window;
  if (window_values.empty()) {
    if (!series.metadata.fit_window) {
      throw ValidationError("window", "not given and not present in the input metadata");
    }
    window = *series.metadata.fit_window;
  } else {
    for (double v : window_values) {
      if (!(v >= 1.0) || v != std::round(v)) {
        throw ValidationError("window", "bounds must be kick indices >= 1");
      }
    }
    window = {static_cast<long>(window_values[0]), static_cast<long>(window_values[1])};
    if (window.t_max < window.t_min) throw ValidationError("window", "need t_min <= t_max");
  }
  const auto fit = fit_subdiffusion(series, window);
  RunMetadata meta = series.metadata;
  meta.fit_window = window;
  json doc{{"fit", to_json(fit)}, {"metadata", to_json(meta)}, {"input", input}};
  if (!output.empty()) write_json(doc, output);
  out << doc.dump(2) << '\n';
  return kExitOk;
}

int cmd_diagnose(const Overrides& o, std::optional<long> kicks, std::optional<long> draws,
                 std::optional<long> corr_draws, std::ostream& out) {
  RunConfig c = o.load();
  if (kicks) c.diagnose.kicks = *kicks;
  if (draws) c.diagnose.randomized_draws = *draws;
  if (corr_draws) c.diagnose.correlation_draws = *corr_draws;
  if (c.diagnose.kicks < 1) throw ValidationError("kicks", "must be positive");
  if (c.diagnose.randomized_draws < 1) throw ValidationError("draws", "must be positive");
  if (c.diagnose.correlation_draws < 0) {
    throw ValidationError("correlation_draws", "must be non-negative");
  }

  DiagnosticsOptions opt;
  opt.kicks = c.diagnose.kicks;
  opt.randomized_draws = c.diagnose.randomized_draws;
  opt.seed = c.ensemble.seed;
  opt.phase_population_cutoff = c.diagnose.population_cutoff;
  opt.functional_cutoff = c.diagnose.functional_cutoff;
  auto report = run_diagnostics(c.ensemble.initial_momenta, c.params, opt);
  report.metadata.scale = c.scale;
  json doc = to_json(report);
  if (c.diagnose.correlation_draws > 0) {
    const auto psi = evolve_state(c.n0, c.params, c.diagnose.kicks);
    std::vector<double> amps(psi.size());
    for (std::size_t i = 0; i < amps.size(); ++i) amps[i] = std::abs(psi.amplitudes()[i]);
    doc["phase_correlation"] = to_json(phase_correlation_check(
        amps, c.diagnose.correlation_draws, c.ensemble.seed, c.diagnose.population_cutoff));
    doc["phase_correlation"]["n0"] = c.n0;
  }
  out << "KS not rejected at 1%: " << report.ks_not_rejected << " of " << report.members.size()
      << '\n'
      << "median randomized-phase log10 ratio: "
      << format_double(report.median_randomized_log10_ratio) << '\n'
      << "median |log10(|F_PAA|/|F|)|: " << format_double(report.median_paa_abs_log10_ratio)
      << '\n';
  out << "wrote " << write_document(c, doc, "diagnose").string() << '\n';
  return kExitOk;
}

int cmd_convergence(const Overrides& o, const std::vector<double>& dt_values,
                    std::optional<long> horizon, std::ostream& out) {
  RunConfig c = o.load();
  if (!dt_values.empty()) c.convergence.dt_values = dt_values;
  if (horizon) c.convergence.horizon = *horizon;
  for (double dt : c.convergence.dt_values) {
    SimulationParams probe = c.params;
    probe.dt = dt;
    probe.validate();
  }
  const auto table = convergence_study(c.params, c.ensemble.initial_momenta,
                                       c.convergence.dt_values, c.convergence.horizon);
  RunMetadata meta;
  meta.params = c.params;
  meta.seed = c.ensemble.seed;
  meta.initial_momenta = c.ensemble.initial_momenta;
  meta.scale = c.scale;
  json doc = to_json(table);
  doc["metadata"] = to_json(meta);
  out << "dt, <p^2>(" << table.horizon << ")\n";
  for (std::size_t i = 0; i < table.dt_values.size(); ++i) {
    out << format_double(table.dt_values[i]) << ", " << format_double(table.energies[i]) << '\n';
  }
  for (std::size_t i = 0; i < table.ratios.size(); ++i) {
    out << "error ratio " << i << ": " << format_double(table.ratios[i]) << '\n';
  }
  out << "wrote " << write_document(c, doc, "convergence").string() << '\n';
  return kExitOk;
}

struct UnitOptions {
  PhysicalParams phys = PhysicalParams::potassium_example();
  double a_bohr = 50.0;
  double atoms = 1600.0;
  double omega_hz = 62.0;
  double l_perp_um = 5.0;
  double wavelength_nm = 766.7;
  double mass_amu = 38.9637064864;
  std::optional<double> hbar_eff;
  std::optional<double> period_us;
  std::string output;
};

int cmd_convert_units(const UnitOptions& u, std::ostream& out) {
  PhysicalParams p;
  p.scattering_length = u.a_bohr * kBohrRadius;
  p.atom_number = u.atoms;
  p.transverse_freq = kTwoPi * u.omega_hz;
  p.laser_wavenumber = kTwoPi / (u.wavelength_nm * 1e-9);
  p.mass = u.mass_amu * kAtomicMass;
  if (u.hbar_eff && u.period_us) {
    throw ValidationError("period", "give either --hbar-eff or --period-us, not both");
  }
  if (u.period_us) {
    p.kick_period = *u.period_us * 1e-6;
  } else {
    const double h = u.hbar_eff.value_or(2.89);
    if (!(h > 0.0)) throw ValidationError("hbar_eff", "must be positive");
    p.kick_period = h * p.mass / (4.0 * kHbar * p.laser_wavenumber * p.laser_wavenumber);
  }
  const auto by_freq = to_dimensionless(p, TransverseSpec::Frequency);
  const auto by_size = to_dimensionless(p, TransverseSpec::Size, u.l_perp_um * 1e-6);

  json doc{{"code_version", kVersion},
           {"input",
            {{"scattering_length_bohr", u.a_bohr},
             {"atom_number", u.atoms},
             {"transverse_freq_hz", u.omega_hz},
             {"transverse_size_um", u.l_perp_um},
             {"wavelength_nm", u.wavelength_nm},
             {"mass_amu", u.mass_amu},
             {"kick_period_s", p.kick_period}}},
           {"hbar_eff", by_freq.hbar_eff},
           {"recoil_freq_rad_s", by_freq.recoil_freq},
           {"g_from_transverse_size", by_size.coupling},
           {"g_from_transverse_freq", by_freq.coupling},
           {"attractive", by_freq.attractive}};
  out << std::setprecision(6) << "hbar_eff = " << by_freq.hbar_eff << '\n'
      << "kick period = " << p.kick_period << " s\n"
      << "g (L_perp = " << u.l_perp_um << " um) = " << by_size.coupling << '\n'
      << "g (omega_perp/2pi = " << u.omega_hz << " Hz) = " << by_freq.coupling << '\n';
  if (!u.output.empty()) write_json(doc, u.output);
  return kExitOk;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mean-field quantum kicked rotor simulator", "qkr"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Overrides sim_o, ens_o, sweep_o, diag_o, conv_o;

  auto* simulate = app.add_subcommand("simulate", "single trajectory from a plane wave");
  sim_o.attach(simulate);

  std::string preset;
  auto* ensemble = app.add_subcommand("ensemble", "ensemble average over initial momenta");
  ens_o.attach(ensemble);
  ensemble->add_option("--preset", preset, "parameter preset")
      ->check(CLI::IsMember({"paper-fig1"}));

  std::vector<double> g_values, k_values;
  std::vector<std::string> methods;
  auto* sweep = app.add_subcommand("sweep", "exponent histogram over a (g, K) grid");
  sweep_o.attach(sweep);
  sweep->add_option("--g-values", g_values, "interaction strengths");
  sweep->add_option("--K-values", k_values, "kick strengths");
  sweep->add_option("--methods", methods, "propagators to compare");

  std::string fit_input, fit_output;
  std::vector<double> fit_window;
  auto* fit = app.add_subcommand("fit", "subdiffusive exponent of a stored time series");
  fit->add_option("-i,--input", fit_input, "CSV or JSON time series")->required();
  fit->add_option("--window", fit_window, "t_min t_max")->expected(2);
  fit->add_option("--output", fit_output, "also write the result here");

  std::optional<long> diag_kicks, diag_draws, diag_corr;
  auto* diagnose = app.add_subcommand("diagnose", "phase statistics and functional fidelity");
  diag_o.attach(diagnose);
  diagnose->add_option("--diag-kicks", diag_kicks, "kicks before the diagnostics");
  diagnose->add_option("--draws", diag_draws, "randomized-phase draws per member");
  diagnose->add_option("--correlation-draws", diag_corr, "Monte-Carlo draws (0 disables)");

  std::vector<double> dt_values;
  std::optional<long> horizon;
  auto* convergence = app.add_subcommand("convergence", "time-step self-convergence");
  conv_o.attach(convergence);
  convergence->add_option("--dt-values", dt_values, "time steps to compare");
  convergence->add_option("--horizon", horizon, "comparison kick");

  UnitOptions units;
  auto* convert = app.add_subcommand("convert-units", "laboratory to dimensionless parameters");
  convert->add_option("--a-bohr", units.a_bohr, "scattering length in Bohr radii");
  convert->add_option("--atoms", units.atoms, "atom number");
  convert->add_option("--omega-perp-hz", units.omega_hz, "transverse trap frequency / 2pi");
  convert->add_option("--l-perp-um", units.l_perp_um, "transverse size in micrometres");
  convert->add_option("--wavelength-nm", units.wavelength_nm, "lattice laser wavelength");
  convert->add_option("--mass-amu", units.mass_amu, "atomic mass");
  convert->add_option("--hbar-eff", units.hbar_eff, "target effective Planck constant");
  convert->add_option("--period-us", units.period_us, "kick period in microseconds");
  convert->add_option("--output", units.output, "also write JSON here");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*simulate) return cmd_simulate(sim_o, out, err);
    if (*ensemble) return cmd_ensemble(ens_o, preset, out, err);
    if (*sweep) return cmd_sweep(sweep_o, g_values, k_values, methods, out);
    if (*fit) return cmd_fit(fit_input, fit_window, fit_output, out);
    if (*diagnose) return cmd_diagnose(diag_o, diag_kicks, diag_draws, diag_corr, out);
    if (*convergence) return cmd_convergence(conv_o, dt_values, horizon, out);
    if (*convert) return cmd_convert_units(units, out);
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const BoundaryOverflow& e) {
    err << "aborted: " << e.what() << '\n';
    return kExitAborted;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitValidation;
}

}  // namespace qkr
