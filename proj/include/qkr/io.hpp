#pragma once

// Run configuration (JSON, strictly validated) and result serialization.
//
// Every file written here embeds the complete metadata: parameters, seed,
// initial momenta, fit window when present and the code version.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "qkr/analysis.hpp"
#include "qkr/core.hpp"
#include "qkr/runner.hpp"

namespace qkr {

using json = nlohmann::json;

struct EnsembleConfig {
  std::vector<long> initial_momenta = default_initial_momenta();
  std::uint64_t seed = 0;
  std::vector<long> record_times;  // empty: log-spaced
  int samples_per_decade = 30;
};

struct SweepConfig {
  std::vector<double> g_values;
  std::vector<double> k_values;
  std::vector<Method> methods{Method::GPE};
  std::optional<FitWindow> fit_window;  // empty: scale default
};

struct DiagnoseConfig {
  long kicks = 200;
  long randomized_draws = 20;
  long correlation_draws = 0;  // 0 disables phase_correlation_check
  double population_cutoff = kPhasePopulationCutoff;
  double functional_cutoff = 1e-10;  // populated-mode cutoff for F comparisons
};

struct ConvergenceConfig {
  std::vector<double> dt_values{1e-2, 1e-3, 1e-4};
  long horizon = 100;
};

struct OutputConfig {
  std::filesystem::path directory = ".";
  std::string prefix = "qkr";
  bool csv = true;
  bool json = true;
};

struct RunConfig {
  SimulationParams params;
  long n0 = 1;
  std::string scale = "desk";
  EnsembleConfig ensemble;
  SweepConfig sweep;
  DiagnoseConfig diagnose;
  ConvergenceConfig convergence;
  OutputConfig output;

  /// Record times for the configured ensemble/simulation.
  std::vector<long> record_times() const;
  /// [10², 10⁴] at desk scale, [10⁴, 10⁵] at paper scale, clipped to n_kicks.
  FitWindow default_fit_window() const;
  EnsembleSpec ensemble_spec() const;
};

/// Applies the named scale preset ("desk" or "paper") to the parameters.
void apply_scale(RunConfig& config, const std::string& scale);

/// Parses and validates a JSON document. Unknown keys, wrong types and
/// constraint violations throw ValidationError naming the field.
RunConfig parse_config(const std::string& text);
RunConfig parse_config_file(const std::filesystem::path& path);

/// Resolved configuration with every default filled in.
json to_json(const RunConfig& config);

json to_json(const SimulationParams& p);
json to_json(const RunMetadata& m);
RunMetadata metadata_from_json(const json& j);
json to_json(const ExponentFit& fit);
json to_json(const KsResult& ks);
json to_json(const RandomizedPhaseReport& r);
json to_json(const PhaseCorrelationReport& r);
json to_json(const ConvergenceTable& t);
json to_json(const FunctionalFidelity& f);
json to_json(const DiagnosticsReport& r);
json to_json(const SweepResult& r);

enum class Format { CSV, JSON };

/// CSV: '#' comment header carrying the metadata (one human-readable line per
/// field plus a compact JSON line), then `kick_index,energy` rows with 17
/// significant digits. JSON: {"metadata": ..., "times": [...], "energies": [...]}.
void write_timeseries(const TimeSeries& series, const std::filesystem::path& path, Format format);
/// Reads either format (decided by content).
TimeSeries read_timeseries(const std::filesystem::path& path);

/// CSV: method,bin_lo,bin_hi,count rows (plus underflow/overflow) under a
/// metadata header. JSON: the full SweepResult.
void write_histogram(const SweepResult& result, const std::filesystem::path& path, Format format);

void write_json(const json& doc, const std::filesystem::path& path);

/// printf("%.17g").
std::string format_double(double v);

}  // namespace qkr
