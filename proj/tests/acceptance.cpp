// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance            run every criterion
//   acceptance 1 6 10     run only the listed ones
//
// Grid sizes are the smallest for which the boundary monitor stays quiet
// over each run; see the README for the measurements behind them.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qkr/analysis.hpp"
#include "qkr/cli.hpp"
#include "qkr/error.hpp"
#include "qkr/io.hpp"
#include "qkr/propagators.hpp"
#include "qkr/runner.hpp"

using namespace qkr;
namespace fs = std::filesystem;

namespace {

constexpr double kHbarEff = 2.89;
constexpr long kGridLocalized = 512;     // g = 0 runs
constexpr long kGridShort = 2048;        // interacting runs up to 10³ kicks
constexpr long kGridLong = 2048;         // interacting runs up to 10⁴ kicks
constexpr long kGridDiagnostics = 1024;  // 200-kick states
constexpr long kGridConvergence = 2048;  // 10² kicks at dt up to 10⁻²

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

SimulationParams params(Method m, double g, double k, long n_modes, long kicks, double dt = 1e-3) {
  SimulationParams p;
  p.method = m;
  p.coupling = g;
  p.kick_strength = k;
  p.hbar_eff = kHbarEff;
  p.n_modes = n_modes;
  p.n_kicks = kicks;
  p.dt = dt;
  return p;
}

EnsembleResult ensemble(const SimulationParams& p, std::vector<long> record) {
  EnsembleSpec spec;
  spec.params = p;
  spec.initial_momenta = default_initial_momenta();
  spec.record_times = std::move(record);
  return run_ensemble(spec);
}

std::string failure_text(const EnsembleResult& r) {
  if (r.complete()) return "";
  const auto& f = r.failures.front();
  long first = -1, last = -1;
  for (const auto& m : r.failures) {
    if (!m.kick) continue;
    first = first < 0 ? *m.kick : std::min(first, *m.kick);
    last = std::max(last, *m.kick);
  }
  std::string text = " [" + std::to_string(r.failures.size()) + " member(s) aborted";
  if (first >= 0) text += " between kicks " + std::to_string(first) + " and " + std::to_string(last);
  return text + "; first: n0=" + std::to_string(f.n0) + ": " + f.message + "]";
}

double value_at(const TimeSeries& s, long t) {
  const auto it = std::find(s.times.begin(), s.times.end(), t);
  if (it == s.times.end()) throw std::runtime_error("time not recorded");
  return s.energies[static_cast<std::size_t>(it - s.times.begin())];
}

// Shared between criteria 3 and 4, which need the same GPE ensemble.
struct InteractingRuns {
  bool done = false;
  EnsembleResult gpe_long;  // kGridLong, 10⁴ kicks
  EnsembleResult gpe_short, paa, lma;  // kGridShort, 10³ kicks
};
InteractingRuns& interacting_runs() {
  static InteractingRuns runs;
  return runs;
}

// --- criteria ---------------------------------------------------------------

Outcome criterion1() {
  const double K = 12.0, kappa = K / kHbarEff;
  auto p = params(Method::GPE, 0.0, K, 256, 1);
  const auto psi = gpe_period(make_plane_wave(0, ModeGrid::from(p)), p);
  double worst = 0.0;
  for (long n = -40; n <= 40; ++n) {
    const double j = oracle::bessel_j(n, kappa);
    worst = std::max(worst, std::abs(std::norm(psi.at_mode(n)) - j * j));
  }
  const double e = kinetic_energy(psi);
  const bool pass = worst <= 1e-8 && std::abs(e - K * K / 2.0) <= 1e-6;
  return {pass, "max |P_n - J_n^2| = " + fmt(worst) + " (tol 1e-8), <p^2> - 72 = " +
                    fmt(e - 72.0) + " (tol 1e-6)"};
}

Outcome criterion2() {
  auto p = params(Method::GPE, 0.0, 5.0, kGridLocalized, 1000);
  const auto r = ensemble(p, log_spaced_times(1000, 30));
  if (!r.complete()) return {false, "ensemble incomplete" + failure_text(r)};
  const auto fit = fit_subdiffusion(r.mean, {100, 1000});
  return {std::abs(fit.alpha) <= 0.05,
          "alpha[1e2,1e3] = " + fmt(fit.alpha) + " +- " + fmt(fit.stderr_alpha) + " (need |alpha| <= 0.05)"};
}

void ensure_interacting_runs(bool need_long) {
  auto& runs = interacting_runs();
  if (!runs.done) {
    const auto times = log_spaced_times(1000, 30);
    runs.paa = ensemble(params(Method::PAA, 10.0, 12.0, kGridShort, 1000), times);
    runs.lma = ensemble(params(Method::LMA, 10.0, 12.0, kGridShort, 1000), times);
    runs.done = true;
  }
  const bool have_long = !runs.gpe_long.mean.times.empty() || !runs.gpe_long.failures.empty();
  if (need_long && !have_long) {
    runs.gpe_long = ensemble(params(Method::GPE, 10.0, 12.0, kGridLong, 10000),
                             log_spaced_times(10000, 30));
  }
  const bool have_short = !runs.gpe_short.mean.times.empty() || !runs.gpe_short.failures.empty();
  if (!need_long && !have_short) {
    if (have_long && runs.gpe_long.complete()) {
      // The first 10³ kicks of the long run, on the same record times.
      runs.gpe_short = runs.gpe_long;
      auto& m = runs.gpe_short.mean;
      const auto keep = static_cast<std::size_t>(
          std::upper_bound(m.times.begin(), m.times.end(), 1000L) - m.times.begin());
      m.times.resize(keep);
      m.energies.resize(keep);
    } else {
      runs.gpe_short = ensemble(params(Method::GPE, 10.0, 12.0, kGridShort, 1000),
                                log_spaced_times(1000, 30));
    }
  }
}

double g0_plateau() {
  const auto lin = ensemble(params(Method::GPE, 0.0, 12.0, kGridLocalized, 10000),
                            log_spaced_times(10000, 30));
  if (!lin.complete()) throw std::runtime_error("g = 0 ensemble incomplete" + failure_text(lin));
  // Plateau: mean over the recorded samples in [10³, 10⁴].
  double plateau = 0.0;
  long count = 0;
  for (std::size_t i = 0; i < lin.mean.times.size(); ++i) {
    if (lin.mean.times[i] >= 1000) {
      plateau += lin.mean.energies[i];
      ++count;
    }
  }
  return plateau / static_cast<double>(count);
}

Outcome criterion3() {
  ensure_interacting_runs(true);
  const auto& r = interacting_runs().gpe_long;
  const double plateau = g0_plateau();
  if (!r.complete()) {
    // Report what the surviving window shows: every member's samples up to
    // the earliest abort, averaged and fitted from 10² on.
    long horizon = 10000;
    for (const auto& f : r.failures) horizon = std::min(horizon, f.kick.value_or(0) - 1);
    std::vector<const TimeSeries*> all;
    for (const auto& m : r.members) all.push_back(&m);
    for (const auto& f : r.failures) all.push_back(&f.partial);
    std::size_t samples = all.front()->times.size();
    for (const auto* m : all) samples = std::min(samples, m->times.size());
    TimeSeries mean;
    for (std::size_t i = 0; i < samples && all.front()->times[i] <= horizon; ++i) {
      double sum = 0.0;
      for (const auto* m : all) sum += m->energies[i];
      mean.times.push_back(all.front()->times[i]);
      mean.energies.push_back(sum / static_cast<double>(all.size()));
    }
    std::string partial;
    if (horizon >= 1000) {
      const auto fit = fit_subdiffusion(mean, {100, horizon});
      partial = "; before the first abort, alpha[1e2," + std::to_string(horizon) + "] = " +
                fmt(fit.alpha) + ", <p^2>(" + std::to_string(mean.times.back()) +
                ") = " + fmt(mean.energies.back()) + " vs g=0 plateau " + fmt(plateau);
    }
    return {false, "GPE ensemble incomplete" + failure_text(r) + partial};
  }
  const auto fit = fit_subdiffusion(r.mean, {100, 10000});
  const double e_end = value_at(r.mean, 10000);
  const bool pass = fit.alpha >= 0.2 && e_end >= 5.0 * plateau;
  return {pass, "alpha[1e2,1e4] = " + fmt(fit.alpha) + " (need >= 0.2), <p^2>(1e4) = " +
                    fmt(e_end) + " vs g=0 plateau " + fmt(plateau) + " (ratio " +
                    fmt(e_end / plateau) + ", need >= 5)"};
}

Outcome criterion4() {
  ensure_interacting_runs(false);
  const auto& runs = interacting_runs();
  const auto& gpe = runs.gpe_short;
  for (const auto* r : {&gpe, &runs.paa, &runs.lma}) {
    if (!r->complete()) return {false, "ensemble incomplete" + failure_text(*r)};
  }
  double paa_worst = 0.0, lma_worst_late = 0.0;
  if (gpe.mean.times != runs.paa.mean.times) return {false, "record times differ"};
  for (std::size_t i = 0; i < gpe.mean.times.size(); ++i) {
    const long t = gpe.mean.times[i];
    const double e = gpe.mean.energies[i];
    paa_worst = std::max(paa_worst, std::abs(runs.paa.mean.energies[i] - e) / e);
    if (t >= 100) lma_worst_late = std::max(lma_worst_late, std::abs(runs.lma.mean.energies[i] - e) / e);
  }
  const bool pass = paa_worst <= 0.25 && lma_worst_late > 0.25;
  return {pass, "max PAA deviation (t <= 1e3) = " + fmt(paa_worst) +
                    " (need <= 0.25), max LMA deviation on [1e2,1e3] = " + fmt(lma_worst_late) +
                    " (need > 0.25)"};
}

DiagnosticsReport& diagnostics() {
  static std::optional<DiagnosticsReport> report;
  if (!report) {
    DiagnosticsOptions opt;
    opt.kicks = 200;
    opt.randomized_draws = 20;
    opt.seed = 20240611;
    report = run_diagnostics(default_initial_momenta(),
                             params(Method::GPE, 12.0, 12.0, kGridDiagnostics, 200), opt);
  }
  return *report;
}

Outcome criterion5() {
  const auto& d = diagnostics();
  double worst = 0.0;
  for (const auto& m : d.members) worst = std::max(worst, m.fidelity.median_abs_log10_ratio);
  const auto& first = d.members.front();
  return {worst <= 0.3, "median |log10(|F_PAA|/|F|)| over populated modes: worst member " +
                            fmt(worst) + ", n0=1 member " + fmt(first.fidelity.median_abs_log10_ratio) +
                            " on " + std::to_string(first.fidelity.n_modes_compared) +
                            " modes (need <= 0.3)"};
}

Outcome criterion6() {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst_exact = 0.0, worst_paa = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    WaveFunction psi(ModeGrid{64, kHbarEff});
    for (auto& z : psi.amplitudes()) z = {normal(rng), normal(rng)};
    psi.normalize();
    const std::vector<cplx> amps(psi.amplitudes().begin(), psi.amplitudes().end());
    const auto spectral = compute_F_exact(psi);
    const auto direct = oracle::direct_F(amps);
    const auto paa = compute_F_paa(psi);
    const auto mag = oracle::direct_paa_magnitude(amps);
    for (std::size_t i = 0; i < amps.size(); ++i) {
      worst_exact = std::max(worst_exact, std::abs(spectral.values[i] - direct[i]));
      const cplx ref = std::polar(mag[i], std::arg(amps[i]));
      worst_paa = std::max(worst_paa, std::abs(paa.values[i] - ref));
    }
  }
  return {worst_exact <= 1e-10 && worst_paa <= 1e-10,
          "max |F_spectral - F_direct| = " + fmt(worst_exact) + ", max |F_PAA - direct| = " +
              fmt(worst_paa) + " (tol 1e-10, 100 states of 64 modes)"};
}

Outcome criterion7() {
  const auto p = params(Method::GPE, 10.0, 12.0, kGridConvergence, 100);
  const std::vector<double> dts{1e-2, 1e-3, 1e-4};
  const auto t = convergence_study(p, default_initial_momenta(), dts, 100);
  const double ratio = t.ratios.front();
  return {ratio >= 50.0 && ratio <= 200.0,
          "<p^2>(100) at dt=1e-2,1e-3,1e-4: " + fmt(t.energies[0], 10) + ", " +
              fmt(t.energies[1], 10) + ", " + fmt(t.energies[2], 10) + "; error ratio " + fmt(ratio) +
              " (need [50, 200])"};
}

Outcome criterion8() {
  const auto& d = diagnostics();
  std::string pvals;
  for (const auto& m : d.members) pvals += (pvals.empty() ? "" : ",") + fmt(m.ks.p_value, 2);
  const bool pass = d.ks_not_rejected >= 8 && std::abs(d.median_randomized_log10_ratio) <= 0.15;
  return {pass, "KS not rejected at 1% for " + std::to_string(d.ks_not_rejected) +
                    "/10 members (p = " + pvals + "); randomized-phase median log10 ratio " +
                    fmt(d.median_randomized_log10_ratio) + " (need |.| <= 0.15)"};
}

Outcome criterion9() {
  // Broad profile: Gaussian in A² with σ = 64 modes on a 256-mode window.
  const std::size_t n = 256;
  std::vector<double> a(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double m = static_cast<double>(i) - 128.0;
    a[i] = std::exp(-m * m / (4.0 * 64.0 * 64.0));
    total += a[i] * a[i];
  }
  for (auto& x : a) x /= std::sqrt(total);

  const std::uint64_t seed = 99;
  const auto big = phase_correlation_check(a, 10000, seed);
  // The closed form drops O(A²) self-correlated terms. The exact random-phase
  // mean is reported alongside so a miss can be told apart from a sampling bug.
  const auto exact = oracle::exact_mean_abs2_F(a);
  long within = 0, within_exact = 0;
  double worst_z = 0.0;
  for (std::size_t k = 0; k < big.modes.size(); ++k) {
    const double z = (big.mean_abs2_F[k] - big.closed_form_abs2_F[k]) / big.stderr_abs2_F[k];
    const auto i = static_cast<std::size_t>(big.modes[k] + static_cast<long>(n / 2));
    const double ze = (big.mean_abs2_F[k] - exact[i]) / big.stderr_abs2_F[k];
    within += std::abs(z) <= 3.0;
    within_exact += std::abs(ze) <= 3.0;
    worst_z = std::max(worst_z, std::abs(z));
  }
  const double frac = static_cast<double>(within) / static_cast<double>(big.modes.size());

  std::vector<double> lx, lff, lfp;
  for (long draws : {100L, 1000L, 10000L}) {
    const auto r = draws == 10000 ? big : phase_correlation_check(a, draws, seed);
    lx.push_back(std::log(static_cast<double>(draws)));
    lff.push_back(std::log(r.offdiag_FF_rms));
    lfp.push_back(std::log(r.offdiag_Fpsi_rms));
  }
  const double s_ff = oracle::ols_slope(lx, lff);
  const double s_fp = oracle::ols_slope(lx, lfp);
  const bool slopes = std::abs(s_ff + 0.5) <= 0.1 && std::abs(s_fp + 0.5) <= 0.1;
  return {frac >= 0.99 && slopes,
          "diagonal within 3 SE of closed form: " + fmt(100.0 * frac) + "% of " +
              std::to_string(big.modes.size()) + " modes (need >= 99%, worst |z| " + fmt(worst_z) +
              "; exact random-phase mean: " +
              std::to_string(within_exact) + "/" + std::to_string(big.modes.size()) +
              " within 3 SE); off-diagonal slopes vs n_draws: FF " + fmt(s_ff) + ", F psi* " + fmt(s_fp) +
              " (need -0.5 +- 0.1)"};
}

Outcome criterion10() {
  const fs::path out = fs::temp_directory_path() / "qkr_acceptance_units.json";
  std::ostringstream so, se;
  const int code = run_command({"convert-units", "--output", out.string()}, so, se);
  if (code != 0) return {false, "convert-units exited with " + std::to_string(code) + ": " + se.str()};
  std::ifstream in(out);
  const auto doc = json::parse(in);
  const double g_size = doc.at("g_from_transverse_size").get<double>();
  const double g_freq = doc.at("g_from_transverse_freq").get<double>();
  const bool pass = std::abs(g_size - 1.0) <= 0.1 && std::abs(g_freq - 1.0) <= 0.1;
  return {pass, "g(L_perp = 5 um) = " + fmt(g_size) + ", g(omega_perp/2pi = 62 Hz) = " +
                    fmt(g_freq) + " (need 1 +- 10%)"};
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion11() {
  const fs::path root = fs::temp_directory_path() / "qkr_acceptance_determinism";
  fs::remove_all(root);
  const std::vector<std::vector<std::string>> commands{
      {"simulate", "--K", "12", "--g", "10", "--n-modes", "512", "--kicks", "30", "--n0", "3"},
      {"ensemble", "--K", "12", "--g", "10", "--n-modes", "512", "--kicks", "30", "--seed", "7"},
      {"sweep", "--g-values", "5", "10", "--K-values", "12", "--methods", "GPE", "PAA", "LMA",
       "--n-modes", "512", "--kicks", "30", "--momenta", "1", "2", "3"},
      {"diagnose", "--K", "12", "--g", "12", "--n-modes", "512", "--diag-kicks", "30", "--draws",
       "4", "--correlation-draws", "20", "--seed", "11", "--momenta", "1", "2", "3"},
      {"convergence", "--K", "12", "--g", "10", "--n-modes", "512", "--dt-values", "0.01",
       "0.001", "--horizon", "5", "--momenta", "1", "2"},
  };
  // Summaries record the output directory, so both passes share one.
  std::map<std::string, std::string> first;
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t c = 0; c < commands.size(); ++c) {
      auto args = commands[c];
      args.insert(args.end(), {"-o", root.string(), "--prefix", "cmd" + std::to_string(c),
                               "--format", "both"});
      std::ostringstream so, se;
      if (run_command(args, so, se) != 0) return {false, args[0] + " failed: " + se.str()};
    }
    for (const auto& entry : fs::directory_iterator(root)) {
      const auto name = entry.path().filename().string();
      const auto bytes = read_bytes(entry.path());
      if (pass == 0) {
        first[name] = bytes;
      } else if (!first.contains(name) || first[name] != bytes) {
        return {false, name + " differs between repeated runs"};
      }
    }
  }
  const auto files = static_cast<long>(first.size());
  return {files >= 8, std::to_string(files) + " output files from 5 seeded commands are byte-identical"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria{
      criterion1, criterion2, criterion3, criterion4,  criterion5, criterion6,
      criterion7, criterion8, criterion9, criterion10, criterion11};
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (int c = 1; c <= static_cast<int>(criteria.size()); ++c) {
    if (!selected.empty() && !selected.contains(c)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[static_cast<std::size_t>(c - 1)]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << "criterion " << c << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail
              << "  (" << fmt(secs, 3) << " s)" << std::endl;
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
