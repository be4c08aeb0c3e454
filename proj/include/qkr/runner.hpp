#pragma once

// Trajectories, ensemble averages over initial momenta, (g, K) sweeps and
// time-step convergence studies.
//
// Parallelism is at trajectory level only: ensemble members run on OpenMP
// worker threads, each with its own propagator. Member results are reduced in
// a canonical order (sorted by initial momentum) so averages are bit-identical
// for any member order or thread count.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qkr/analysis.hpp"
#include "qkr/core.hpp"

namespace qkr {

struct EnsembleSpec {
  std::vector<long> initial_momenta;
  std::uint64_t seed = 0;
  SimulationParams params;
  std::vector<long> record_times;

  void validate() const;
};

/// Kick indices 1..n_kicks, roughly `per_decade` per decade, deduplicated
/// after rounding; n_kicks itself is always included.
std::vector<long> log_spaced_times(long n_kicks, int per_decade = 30);

/// Default ensemble: n₀ = 1..10.
std::vector<long> default_initial_momenta();

/// Plane wave at n0, then params.method periods; <p²> at each record time.
/// Throws BoundaryOverflow carrying the kick index reached.
TimeSeries run_trajectory(long n0, const SimulationParams& params,
                          std::span<const long> record_times);

/// Plane wave at n0 advanced by `kicks` periods. Throws BoundaryOverflow.
WaveFunction evolve_state(long n0, const SimulationParams& params, long kicks);

struct MemberFailure {
  std::size_t member_index = 0;
  long n0 = 0;
  std::optional<long> kick;
  double edge_population = 0.0;
  std::string message;
  TimeSeries partial;  // samples recorded before the failure
};

struct EnsembleResult {
  TimeSeries mean;  // over successful members
  std::vector<TimeSeries> members;  // successful members, in spec order
  std::vector<MemberFailure> failures;

  bool complete() const { return failures.empty(); }
};

EnsembleResult run_ensemble(const EnsembleSpec& spec);

struct Histogram {
  double lo = 0.0;
  double hi = 1.0;
  double bin_width = 0.05;
  std::vector<long> counts;  // bin i covers [lo + i·w, lo + (i+1)·w)
  long underflow = 0;
  long overflow = 0;

  std::size_t bin_count() const { return counts.size(); }
  double bin_lo(std::size_t i) const { return lo + static_cast<double>(i) * bin_width; }
};

Histogram make_histogram(std::span<const double> values, double lo = 0.0, double hi = 1.0,
                         double bin_width = 0.05);

struct SweepEntry {
  double coupling = 0.0;
  double kick_strength = 0.0;
  Method method = Method::GPE;
  std::optional<ExponentFit> fit;
  std::string error;  // non-empty when the run or the fit failed
};

struct SweepResult {
  FitWindow window;
  RunMetadata metadata;
  std::vector<SweepEntry> entries;
  std::map<Method, Histogram> histograms;
};

/// Runs an ensemble and exponent fit for every (g, K, method). Failures are
/// recorded on the entry and the sweep continues.
SweepResult sweep_parameters(std::span<const double> g_values, std::span<const double> k_values,
                             std::span<const Method> methods, const EnsembleSpec& base,
                             FitWindow window);

struct ConvergenceTable {
  long horizon = 0;
  std::vector<double> dt_values;
  std::vector<double> energies;     // ensemble-mean <p²>(horizon) per dt
  std::vector<double> differences;  // |E(dt_i) - E(dt_{i+1})|
  std::vector<double> ratios;       // differences[i] / differences[i+1]
};

/// Identical (ensemble-averaged) runs at each dt, compared at `horizon`.
ConvergenceTable convergence_study(const SimulationParams& params,
                                   std::span<const long> initial_momenta,
                                   std::span<const double> dt_values, long horizon);

struct DiagnosticsOptions {
  long kicks = 200;
  long randomized_draws = 20;
  std::uint64_t seed = 0;
  double phase_population_cutoff = kPhasePopulationCutoff;
  double functional_cutoff = 1e-10;
  double ks_level = 0.01;
};

struct MemberDiagnostics {
  long n0 = 0;
  KsResult ks;
  bool ks_rejected = false;
  FunctionalFidelity fidelity;
  RandomizedPhaseReport randomized;
};

struct DiagnosticsReport {
  DiagnosticsOptions options;
  RunMetadata metadata;
  std::vector<MemberDiagnostics> members;
  long ks_not_rejected = 0;
  /// Medians across members of the per-member medians.
  double median_randomized_log10_ratio = 0.0;
  double median_paa_abs_log10_ratio = 0.0;
};

/// Evolves every initial momentum for options.kicks periods and runs the
/// phase-uniformity, randomized-phase and functional-fidelity checks on each
/// final state. Member m uses randomized-phase seed stream (seed, m).
DiagnosticsReport run_diagnostics(std::span<const long> initial_momenta,
                                  const SimulationParams& params, DiagnosticsOptions options);

}  // namespace qkr
