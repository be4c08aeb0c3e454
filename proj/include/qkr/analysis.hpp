#pragma once

// Observables over time, exponent extraction and the phase-statistics
// diagnostics that motivate the phase-averaging approximation.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qkr/core.hpp"

namespace qkr {

struct FitWindow {
  long t_min = 0;
  long t_max = 0;
  friend bool operator==(const FitWindow&, const FitWindow&) = default;
};

/// Everything needed to regenerate a result file.
struct RunMetadata {
  SimulationParams params;
  std::uint64_t seed = 0;
  std::vector<long> initial_momenta;
  std::optional<FitWindow> fit_window;
  std::string scale = "desk";
  std::string status = "complete";  // "partial: ..." when a run aborted
  std::string energy_convention = "<p^2> = sum_n |psi(n)|^2 (n hbar_eff)^2, no factor 1/2";

  friend bool operator==(const RunMetadata&, const RunMetadata&);
};

struct TimeSeries {
  std::vector<long> times;       // kick indices, strictly increasing
  std::vector<double> energies;  // <p^2> at those kicks
  RunMetadata metadata;

  /// Throws ValidationError if the invariants do not hold.
  void validate() const;
};

struct ExponentFit {
  double alpha = 0.0;
  double intercept = 0.0;  // natural-log intercept: ln<p^2> ≈ intercept + alpha ln t
  double stderr_alpha = 0.0;
  FitWindow window;
  long n_samples = 0;
};

/// Least squares of ln<p²> against ln t for t_min <= t <= t_max.
/// Needs at least 5 samples in the window and positive energies there.
ExponentFit fit_subdiffusion(const TimeSeries& series, FitWindow window);

struct KsResult {
  double statistic = 0.0;  // sup |F_n - F|
  double p_value = 1.0;
  long n_samples = 0;
};

/// Asymptotic Kolmogorov distribution tail P(D_n > d), with Stephens'
/// finite-n correction to the argument.
double kolmogorov_pvalue(long n, double d);

/// One-sample KS test of `u` against Uniform[0, 1).
KsResult ks_test_uniform(std::vector<double> u);

/// Population cutoff below which phases are treated as meaningless.
inline constexpr double kPhasePopulationCutoff = 1e-12;

/// KS test of the phases φ(p) ∈ [0, 2π) of modes with |ψ̂(p)|² above
/// `population_cutoff` against the uniform law. Requires >= 50 such modes.
KsResult phase_uniformity_test(const WaveFunction& psi,
                               double population_cutoff = kPhasePopulationCutoff);

struct RandomizedPhaseOptions {
  double population_cutoff = 1e-10;  // compare only on populated modes
  double functional_floor = 1e-14;   // and only where |F(ψ̂)| exceeds this
};

struct RandomizedPhaseReport {
  long n_draws = 0;
  long n_modes_compared = 0;
  /// Pooled over draws and compared modes: log10(|F(ψ̂_rand)| / |F(ψ̂)|).
  double median_log10_ratio = 0.0;
  double mean_log10_ratio = 0.0;
  double max_abs_log10_ratio = 0.0;
  std::vector<double> per_draw_median;
};

/// Replaces every phase of ψ̂ by an i.i.d. uniform phase and compares the
/// modulus of the exact interaction functional with the original.
RandomizedPhaseReport randomized_phase_check(const WaveFunction& psi, long n_draws,
                                             std::uint64_t seed,
                                             RandomizedPhaseOptions options = {});

struct FunctionalFidelity {
  long n_modes_compared = 0;
  /// Over populated modes: |log10(|F_PAA(p)| / |F_exact(p)|)|.
  double median_abs_log10_ratio = 0.0;
  double max_abs_log10_ratio = 0.0;
};

/// Compares the phase-averaged functional with the exact one on modes with
/// |ψ̂(p)|² above `population_cutoff`.
FunctionalFidelity paa_fidelity(const WaveFunction& psi, double population_cutoff = 1e-10);

struct PhaseCorrelationReport {
  long n_draws = 0;
  std::vector<long> modes;                 // mode indices included (A² above cutoff)
  std::vector<double> population;          // A(p)²
  std::vector<cplx> mean_F;                // mean F(p)
  std::vector<cplx> mean_F_dephased;       // mean F(p) e^{-iφ(p)}
  std::vector<double> mean_abs2_F;         // mean |F(p)|²
  std::vector<double> stderr_abs2_F;       // Monte-Carlo standard error of the above
  std::vector<double> closed_form_abs2_F;  // (1/2π)²(4A² + 2 Σ A²A²A²)
  std::vector<cplx> mean_F_psi_conj;       // mean F(p) ψ̂*(p)
  /// Off-diagonal (p ≠ p') estimates normalised by the diagonal scale:
  /// |mean F(p)F*(p')| / √(mean|F(p)|² mean|F(p')|²) and
  /// |mean F(p)ψ̂*(p')| / √(mean|F(p)|² A(p')²).
  double offdiag_FF_rms = 0.0;
  double offdiag_FF_max = 0.0;
  double offdiag_Fpsi_rms = 0.0;
  double offdiag_Fpsi_max = 0.0;
};

/// Monte-Carlo estimates over i.i.d. uniform phase assignments for the given
/// amplitude profile (centred mode order, Σ A² = 1).
PhaseCorrelationReport phase_correlation_check(std::span<const double> amplitudes,
                                               long n_draws, std::uint64_t seed,
                                               double population_cutoff = kPhasePopulationCutoff);

/// Deterministic i.i.d. uniform phases in [0, 2π) for draw `draw`.
void draw_uniform_phases(std::uint64_t seed, std::uint64_t draw, std::span<double> out);

}  // namespace qkr
