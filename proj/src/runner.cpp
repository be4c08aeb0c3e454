#include "qkr/runner.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <random>

#include "qkr/error.hpp"
#include "qkr/propagators.hpp"

namespace qkr {

void EnsembleSpec::validate() const {
  params.validate();
  if (initial_momenta.empty()) {
    throw ValidationError("initial_momenta", "ensemble needs at least one member");
  }
  const auto grid = ModeGrid::from(params);
  for (long n0 : initial_momenta) {
    if (!grid.contains(n0)) {
      throw ValidationError("initial_momenta", "n0 = " + std::to_string(n0) + " is off the grid");
    }
  }
  for (std::size_t i = 0; i < record_times.size(); ++i) {
    if (record_times[i] < 0 || record_times[i] > params.n_kicks) {
      throw ValidationError("record_times", "must lie in [0, n_kicks]");
    }
    if (i > 0 && record_times[i] <= record_times[i - 1]) {
      throw ValidationError("record_times", "must be strictly increasing");
    }
  }
}

std::vector<long> log_spaced_times(long n_kicks, int per_decade) {
  if (n_kicks < 1) throw ValidationError("n_kicks", "must be positive");
  if (per_decade < 1) throw ValidationError("samples_per_decade", "must be positive");
  std::vector<long> out;
  const double top = std::log10(static_cast<double>(n_kicks));
  for (int k = 0;; ++k) {
    const double e = static_cast<double>(k) / per_decade;
    if (e > top) break;
    const long t = std::lround(std::pow(10.0, e));
    if (out.empty() || t > out.back()) out.push_back(t);
  }
  if (out.back() != n_kicks) out.push_back(n_kicks);
  return out;
}

std::vector<long> default_initial_momenta() {
  std::vector<long> v(10);
  std::iota(v.begin(), v.end(), 1L);
  return v;
}

namespace {

struct TrajectoryOutcome {
  TimeSeries series;
  std::optional<BoundaryOverflow> overflow;
};

/// Runs until the last record time; boundary failures are returned, not thrown.
TrajectoryOutcome integrate(long n0, const SimulationParams& params,
                            std::span<const long> record_times) {
  TrajectoryOutcome out;
  out.series.metadata.params = params;
  out.series.metadata.initial_momenta = {n0};

  WaveFunction psi = make_plane_wave(n0, ModeGrid::from(params));
  auto prop = make_propagator(params);
  auto next = record_times.begin();
  auto record = [&](long t) {
    out.series.times.push_back(t);
    out.series.energies.push_back(kinetic_energy(psi));
    ++next;
  };
  if (next != record_times.end() && *next == 0) record(0);
  const long last = record_times.empty() ? 0 : record_times.back();
  for (long t = 1; t <= last; ++t) {
    prop->advance(psi);
    const double edge = edge_population(psi);
    if (edge > params.boundary_threshold) {
      out.overflow.emplace(t, edge, params.boundary_threshold);
      return out;
    }
    if (next != record_times.end() && *next == t) record(t);
  }
  return out;
}

void check_record_times(std::span<const long> record_times, long n_kicks) {
  for (std::size_t i = 0; i < record_times.size(); ++i) {
    if (record_times[i] < 0 || record_times[i] > n_kicks) {
      throw ValidationError("record_times", "must lie in [0, n_kicks]");
    }
    if (i > 0 && record_times[i] <= record_times[i - 1]) {
      throw ValidationError("record_times", "must be strictly increasing");
    }
  }
}

}  // namespace

TimeSeries run_trajectory(long n0, const SimulationParams& params,
                          std::span<const long> record_times) {
  params.validate();
  check_record_times(record_times, params.n_kicks);
  auto outcome = integrate(n0, params, record_times);
  if (outcome.overflow) throw *outcome.overflow;
  return std::move(outcome.series);
}

EnsembleResult run_ensemble(const EnsembleSpec& spec) {
  spec.validate();
  const std::size_t members = spec.initial_momenta.size();
  std::vector<TrajectoryOutcome> outcomes(members);
  std::vector<std::string> errors(members);

  const long count = static_cast<long>(members);
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < count; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      outcomes[idx] = integrate(spec.initial_momenta[idx], spec.params, spec.record_times);
    } catch (const std::exception& e) {
      errors[idx] = e.what();
    }
  }

  EnsembleResult result;
  std::vector<std::size_t> ok;
  for (std::size_t i = 0; i < members; ++i) {
    auto& o = outcomes[i];
    if (o.overflow || !errors[i].empty()) {
      MemberFailure f;
      f.member_index = i;
      f.n0 = spec.initial_momenta[i];
      if (o.overflow) {
        f.kick = o.overflow->kick();
        f.edge_population = o.overflow->edge_population();
        f.message = o.overflow->what();
      } else {
        f.message = errors[i];
      }
      o.series.metadata.seed = spec.seed;
      f.partial = std::move(o.series);
      result.failures.push_back(std::move(f));
    } else {
      o.series.metadata.seed = spec.seed;
      ok.push_back(i);
    }
  }

  // Canonical reduction order: by initial momentum, then spec position.
  std::vector<std::size_t> order = ok;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return spec.initial_momenta[a] < spec.initial_momenta[b];
  });

  TimeSeries& mean = result.mean;
  mean.metadata.params = spec.params;
  mean.metadata.seed = spec.seed;
  mean.metadata.initial_momenta = spec.initial_momenta;
  if (!order.empty()) {
    mean.times = spec.record_times;
    mean.energies.assign(spec.record_times.size(), 0.0);
    for (auto i : order) {
      const auto& e = outcomes[i].series.energies;
      for (std::size_t k = 0; k < e.size(); ++k) mean.energies[k] += e[k];
    }
    for (auto& e : mean.energies) e /= static_cast<double>(order.size());
  }
  for (auto i : ok) result.members.push_back(std::move(outcomes[i].series));
  return result;
}

Histogram make_histogram(std::span<const double> values, double lo, double hi, double bin_width) {
  if (!(bin_width > 0.0) || !(hi > lo)) {
    throw ValidationError("bin_width", "need bin_width > 0 and hi > lo");
  }
  Histogram h;
  h.lo = lo;
  h.hi = hi;
  h.bin_width = bin_width;
  const auto bins = static_cast<std::size_t>(std::llround((hi - lo) / bin_width));
  h.counts.assign(bins, 0);
  for (double v : values) {
    if (v < lo) {
      ++h.underflow;
      continue;
    }
    if (v >= hi) {
      ++h.overflow;
      continue;
    }
    auto i = static_cast<long>(std::floor((v - lo) / bin_width));
    // Correct for rounding in the division so edges follow lo + i·w exactly.
    while (i > 0 && v < h.bin_lo(static_cast<std::size_t>(i))) --i;
    while (i + 1 < static_cast<long>(bins) && v >= h.bin_lo(static_cast<std::size_t>(i + 1))) ++i;
    ++h.counts[static_cast<std::size_t>(std::clamp(i, 0L, static_cast<long>(bins) - 1))];
  }
  return h;
}

SweepResult sweep_parameters(std::span<const double> g_values, std::span<const double> k_values,
                             std::span<const Method> methods, const EnsembleSpec& base,
                             FitWindow window) {
  for (double g : g_values) {
    if (!(g > 0.0)) throw ValidationError("g_values", "sweep values must be positive");
  }
  for (double kk : k_values) {
    if (!(kk > 0.0)) throw ValidationError("K_values", "sweep values must be positive");
  }
  SweepResult result;
  result.window = window;
  result.metadata.params = base.params;
  result.metadata.seed = base.seed;
  result.metadata.initial_momenta = base.initial_momenta;
  result.metadata.fit_window = window;

  std::map<Method, std::vector<double>> alphas;
  for (Method m : methods) alphas[m];
  for (Method m : methods) {
    for (double g : g_values) {
      for (double kk : k_values) {
        SweepEntry entry{g, kk, m, std::nullopt, {}};
        try {
          EnsembleSpec spec = base;
          spec.params.coupling = g;
          spec.params.kick_strength = kk;
          spec.params.method = m;
          const auto run = run_ensemble(spec);
          if (!run.complete()) {
            entry.error = run.failures.front().message;
          } else {
            entry.fit = fit_subdiffusion(run.mean, window);
            alphas[m].push_back(entry.fit->alpha);
          }
        } catch (const Error& e) {
          entry.error = e.what();
        }
        result.entries.push_back(std::move(entry));
      }
    }
  }
  for (auto& [m, values] : alphas) result.histograms[m] = make_histogram(values);
  return result;
}

ConvergenceTable convergence_study(const SimulationParams& params,
                                   std::span<const long> initial_momenta,
                                   std::span<const double> dt_values, long horizon) {
  if (horizon < 1) throw ValidationError("horizon", "must be positive");
  ConvergenceTable table;
  table.horizon = horizon;
  const std::vector<long> times{horizon};
  for (double dt : dt_values) {
    EnsembleSpec spec;
    spec.params = params;
    spec.params.dt = dt;
    spec.params.n_kicks = horizon;
    spec.initial_momenta.assign(initial_momenta.begin(), initial_momenta.end());
    spec.record_times = times;
    const auto run = run_ensemble(spec);
    if (!run.complete()) {
      const auto& f = run.failures.front();
      if (!f.kick) throw Error(f.message);
      throw BoundaryOverflow(f.kick, f.edge_population, params.boundary_threshold);
    }
    table.dt_values.push_back(dt);
    table.energies.push_back(run.mean.energies.back());
  }
  for (std::size_t i = 0; i + 1 < table.energies.size(); ++i) {
    table.differences.push_back(std::abs(table.energies[i] - table.energies[i + 1]));
  }
  for (std::size_t i = 0; i + 1 < table.differences.size(); ++i) {
    table.ratios.push_back(table.differences[i] / table.differences[i + 1]);
  }
  return table;
}

WaveFunction evolve_state(long n0, const SimulationParams& params, long kicks) {
  params.validate();
  if (kicks < 0) throw ValidationError("kicks", "must be non-negative");
  WaveFunction psi = make_plane_wave(n0, ModeGrid::from(params));
  auto prop = make_propagator(params);
  for (long t = 1; t <= kicks; ++t) {
    prop->advance(psi);
    check_boundary(psi, params.boundary_threshold, t);
  }
  return psi;
}

DiagnosticsReport run_diagnostics(std::span<const long> initial_momenta,
                                  const SimulationParams& params, DiagnosticsOptions options) {
  if (initial_momenta.empty()) throw ValidationError("initial_momenta", "must not be empty");
  if (options.kicks < 0) throw ValidationError("kicks", "must be non-negative");
  params.validate();

  const long count = static_cast<long>(initial_momenta.size());
  std::vector<MemberDiagnostics> members(initial_momenta.size());
  std::vector<std::exception_ptr> errors(initial_momenta.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < count; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      auto& m = members[idx];
      m.n0 = initial_momenta[idx];
      const auto psi = evolve_state(m.n0, params, options.kicks);
      m.ks = phase_uniformity_test(psi, options.phase_population_cutoff);
      m.ks_rejected = m.ks.p_value < options.ks_level;
      m.fidelity = paa_fidelity(psi, options.functional_cutoff);
      // Independent stream per member, derived deterministically from the seed.
      std::seed_seq mix{static_cast<std::uint32_t>(options.seed),
                        static_cast<std::uint32_t>(options.seed >> 32),
                        static_cast<std::uint32_t>(idx)};
      std::uint32_t derived[2];
      mix.generate(derived, derived + 2);
      const std::uint64_t member_seed = (std::uint64_t{derived[0]} << 32) | derived[1];
      m.randomized = randomized_phase_check(psi, options.randomized_draws, member_seed,
                                            {options.functional_cutoff, 1e-14});
    } catch (...) {
      errors[idx] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  DiagnosticsReport report;
  report.options = options;
  report.metadata.params = params;
  report.metadata.params.n_kicks = options.kicks;
  report.metadata.seed = options.seed;
  report.metadata.initial_momenta.assign(initial_momenta.begin(), initial_momenta.end());
  std::vector<double> rand_medians, paa_medians;
  for (const auto& m : members) {
    if (!m.ks_rejected) ++report.ks_not_rejected;
    rand_medians.push_back(m.randomized.median_log10_ratio);
    paa_medians.push_back(m.fidelity.median_abs_log10_ratio);
  }
  auto median_of = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
  };
  report.median_randomized_log10_ratio = median_of(rand_medians);
  report.median_paa_abs_log10_ratio = median_of(paa_medians);
  report.members = std::move(members);
  return report;
}

}  // namespace qkr
