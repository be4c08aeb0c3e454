#pragma once

// State representation for the mean-field kicked rotor on a 2π-periodic ring.
//
// Momentum is quantised as p = n·ħ̄k with the symmetric window
// n ∈ [-n_modes/2, n_modes/2). Amplitudes are stored in centred order:
// array index i holds mode n = i - n_modes/2. The real-space view uses the
// Fourier series ψ(x) = (2π)^{-1/2} Σₙ ψ̂(n) e^{inx} on x_j = 2πj/n_x.

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qkr {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

enum class Method { GPE, LMA, PAA, NONINTERACTING };

std::string_view to_string(Method m);
Method method_from_string(std::string_view name);

struct SimulationParams {
  double hbar_eff = 2.89;
  double kick_strength = 0.0;
  double coupling = 0.0;
  double gamma = 1.0;
  long n_modes = 2048;
  double dt = 1e-3;
  long n_kicks = 10000;
  Method method = Method::GPE;
  double boundary_threshold = 1e-10;

  /// Number of split-step substeps per kick period (1/dt).
  long substeps() const;

  /// Throws ValidationError naming the first violated constraint.
  void validate() const;
};

/// Mode layout shared by a WaveFunction and every operator acting on it.
struct ModeGrid {
  long n_modes = 0;
  double hbar_eff = 1.0;

  long n_min() const { return -n_modes / 2; }
  long n_max() const { return n_modes / 2 - 1; }
  bool contains(long n) const { return n >= n_min() && n <= n_max(); }
  std::size_t index_of(long n) const { return static_cast<std::size_t>(n + n_modes / 2); }
  long mode_at(std::size_t index) const { return static_cast<long>(index) - n_modes / 2; }
  double momentum(long n) const { return static_cast<double>(n) * hbar_eff; }

  /// Real-space points used by the nonlinear and kick steps (2·n_modes).
  long oversampled_points() const { return 2 * n_modes; }

  /// Modes per side counted as "outermost 1%" by the boundary monitor.
  long edge_width() const;

  static ModeGrid from(const SimulationParams& p);

  friend bool operator==(const ModeGrid&, const ModeGrid&) = default;
};

class WaveFunction {
 public:
  WaveFunction() = default;
  explicit WaveFunction(ModeGrid grid);
  WaveFunction(ModeGrid grid, std::vector<cplx> amplitudes);

  const ModeGrid& grid() const noexcept { return grid_; }
  std::span<cplx> amplitudes() noexcept { return amps_; }
  std::span<const cplx> amplitudes() const noexcept { return amps_; }
  std::size_t size() const noexcept { return amps_.size(); }

  cplx& at_mode(long n) { return amps_[grid_.index_of(n)]; }
  cplx at_mode(long n) const { return amps_[grid_.index_of(n)]; }

  /// Σₙ |ψ̂(n)|².
  double norm_squared() const;
  void normalize();

 private:
  ModeGrid grid_;
  std::vector<cplx> amps_;
};

inline constexpr double kHbar = 1.054571817e-34;        // J·s
inline constexpr double kAtomicMass = 1.66053906660e-27;  // kg
inline constexpr double kBohrRadius = 5.29177210903e-11;  // m

struct PhysicalParams {
  double scattering_length = 0.0;  // m
  double atom_number = 0.0;
  double transverse_freq = 0.0;    // rad/s
  double laser_wavenumber = 0.0;   // 1/m
  double mass = 0.0;               // kg
  double kick_period = 0.0;        // s

  /// ³⁹K, 766.7 nm standing wave, ω⊥/2π = 62 Hz, N = 1600, a = 50 a₀,
  /// kick period chosen so that ħ̄k = 2.89.
  static PhysicalParams potassium_example();
};

enum class TransverseSpec { Frequency, Size };

struct DimensionlessParams {
  double hbar_eff = 0.0;
  double coupling = 0.0;
  double recoil_freq = 0.0;     // ω_R, rad/s
  bool attractive = false;      // set when a < 0
};

/// ħ̄k = 4ħk_L²T₁/M and the 1D coupling g. With TransverseSpec::Frequency the
/// harmonic form g = (ħ̄k²/2)·k_L·a·(ω⊥/ω_R)·N is used; with
/// TransverseSpec::Size `transverse_size` is L⊥ and
/// g = π ħ̄k² k_L a ħ N / (ω_R M L⊥²).
DimensionlessParams to_dimensionless(const PhysicalParams& phys,
                                     TransverseSpec spec = TransverseSpec::Frequency,
                                     double transverse_size = 0.0);

WaveFunction make_plane_wave(long n0, const ModeGrid& grid);

/// ⟨p²⟩ = Σₙ |ψ̂(n)|² (nħ̄k)². No factor 1/2.
double kinetic_energy(const WaveFunction& psi);

/// Population in the outermost edge_width() modes on each side.
double edge_population(const WaveFunction& psi);

/// Throws BoundaryOverflow if edge_population exceeds `threshold`.
void check_boundary(const WaveFunction& psi, double threshold, long kick = -1);

/// ψ(x_j) on n_x equally spaced points. n_x < n_modes is rejected (aliasing).
std::vector<cplx> to_real_space(const WaveFunction& psi, long n_x);

/// Inverse of to_real_space; modes outside the grid window are discarded.
WaveFunction from_real_space(std::span<const cplx> values, const ModeGrid& grid);

}  // namespace qkr
