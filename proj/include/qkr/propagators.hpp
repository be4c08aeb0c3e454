#pragma once

// One-kick-period evolution operators and the interaction functionals they use.
//
// A period is free evolution on (t, t+1) followed by the kick at t+1. The
// exact GPE step is a second-order Strang split (kinetic/2, nonlinear,
// kinetic/2) on the 2·n_modes oversampled grid; content generated outside the
// momentum window is discarded after every substep. LMA and PAA integrate the
// between-kick evolution exactly in momentum space.

#include <memory>
#include <span>
#include <vector>

#include "qkr/core.hpp"
#include "qkr/spectral.hpp"

namespace qkr {

/// Modes with |ψ̂(p)| below this receive only the kinetic phase under the PAA.
inline constexpr double kAmplitudeFloor = 1e-30;

enum class FunctionalKind { EXACT, LMA, PAA };

struct InteractionFunctional {
  std::vector<cplx> values;  // centred mode order, one per mode
  FunctionalKind kind = FunctionalKind::EXACT;
};

/// Reusable workspace for repeated evaluation of the interaction functionals
/// on one grid. Not thread-safe; give each thread its own.
class FunctionalEvaluator {
 public:
  explicit FunctionalEvaluator(long n_modes);

  /// F(p) = (1/2π) Σ ψ̂*(p₁) ψ̂(p₂) ψ̂(p+p₁-p₂) via the real-space cube.
  void exact(std::span<const cplx> amps, std::span<cplx> out);

  /// S(p) = Σ B(p₁) B(p₂) B(p+p₁-p₂): the autocorrelation of B convolved
  /// with B, evaluated in the transformed domain.
  void triple_convolution(std::span<const double> b, std::span<double> out);

  /// |F_PAA(p)| = (1/2π) √(4A² + 2S[A²]).
  void paa_magnitude(std::span<const cplx> amps, std::span<double> out);

 private:
  long n_modes_;
  SpectralWorkspace ws_;
  std::vector<cplx> scratch_;
};

InteractionFunctional compute_F_exact(const WaveFunction& psi);
InteractionFunctional compute_F_lma(const WaveFunction& psi, double gamma = 1.0);
/// Magnitude from the random-phase closed form, phase copied from ψ̂(p).
InteractionFunctional compute_F_paa(const WaveFunction& psi);

/// Multiply ψ(x) by exp(-i K cos x / ħ̄k).
WaveFunction apply_kick(const WaveFunction& psi, double kick_strength);

/// One Strang substep of the interacting free evolution (no kick).
WaveFunction gpe_free_substep(const WaveFunction& psi, double dt, double coupling);

/// Single-period maps. Each checks the boundary monitor after the kick and
/// throws BoundaryOverflow if params.boundary_threshold is exceeded.
WaveFunction gpe_period(const WaveFunction& psi, const SimulationParams& params);
WaveFunction lma_period(const WaveFunction& psi, const SimulationParams& params);
WaveFunction paa_period(const WaveFunction& psi, const SimulationParams& params);
/// Standard linear kicked-rotor period: exp(-i p²/2ħ̄k) then the kick.
WaveFunction linear_period(const WaveFunction& psi, const SimulationParams& params);

/// Stateful propagator for long runs: owns transforms and precomputed phase
/// tables. advance() does not check the boundary; callers do.
class PeriodPropagator {
 public:
  virtual ~PeriodPropagator() = default;
  virtual void advance(WaveFunction& psi) = 0;
};

std::unique_ptr<PeriodPropagator> make_propagator(const SimulationParams& params);

}  // namespace qkr
