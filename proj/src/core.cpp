#include "qkr/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "qkr/error.hpp"
#include "qkr/kernels.hpp"
#include "qkr/spectral.hpp"

namespace qkr {

namespace {

std::string format_edge_message(std::optional<long> kick, double pop, double threshold) {
  std::ostringstream os;
  os << "population " << pop << " in the outermost modes exceeds boundary_threshold "
     << threshold;
  if (kick) os << " at kick " << *kick;
  os << "; increase n_modes";
  return os.str();
}

}  // namespace

BoundaryOverflow::BoundaryOverflow(std::optional<long> kick, double edge_population,
                                   double threshold)
    : Error(format_edge_message(kick, edge_population, threshold)),
      kick_(kick),
      edge_population_(edge_population) {}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::GPE: return "GPE";
    case Method::LMA: return "LMA";
    case Method::PAA: return "PAA";
    case Method::NONINTERACTING: return "NONINTERACTING";
  }
  return "?";
}

Method method_from_string(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (upper == "GPE") return Method::GPE;
  if (upper == "LMA") return Method::LMA;
  if (upper == "PAA") return Method::PAA;
  if (upper == "NONINTERACTING" || upper == "LINEAR") return Method::NONINTERACTING;
  throw ValidationError("method", "unknown method '" + std::string(name) +
                                      "' (expected GPE, LMA, PAA or NONINTERACTING)");
}

long SimulationParams::substeps() const { return std::lround(1.0 / dt); }

void SimulationParams::validate() const {
  if (!(hbar_eff > 0.0) || !std::isfinite(hbar_eff)) {
    throw ValidationError("hbar_eff", "must be a positive finite number");
  }
  if (!(kick_strength >= 0.0) || !std::isfinite(kick_strength)) {
    throw ValidationError("K", "must be non-negative");
  }
  if (!(coupling >= 0.0) || !std::isfinite(coupling)) {
    throw ValidationError("g", "must be non-negative");
  }
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw ValidationError("gamma", "must be non-negative");
  }
  if (n_modes < 16 || n_modes % 2 != 0) {
    throw ValidationError("n_modes", "must be even and at least 16");
  }
  if (!(dt > 0.0) || dt > 1.0) {
    throw ValidationError("dt", "must lie in (0, 1]");
  }
  const double inv = 1.0 / dt;
  const double rounded = std::round(inv);
  if (std::abs(inv - rounded) > 1e-9 * rounded) {
    throw ValidationError("dt", "1/dt must be an integer number of substeps per kick period");
  }
  if (n_kicks < 1) throw ValidationError("n_kicks", "must be positive");
  if (!(boundary_threshold >= 0.0)) {
    throw ValidationError("boundary_threshold", "must be non-negative");
  }
}

long ModeGrid::edge_width() const {
  // 1% of the modes in total, split over both ends.
  return std::max(1L, (n_modes + 199) / 200);
}

ModeGrid ModeGrid::from(const SimulationParams& p) { return ModeGrid{p.n_modes, p.hbar_eff}; }

WaveFunction::WaveFunction(ModeGrid grid)
    : grid_(grid), amps_(static_cast<std::size_t>(grid.n_modes)) {}

WaveFunction::WaveFunction(ModeGrid grid, std::vector<cplx> amplitudes)
    : grid_(grid), amps_(std::move(amplitudes)) {
  if (static_cast<long>(amps_.size()) != grid_.n_modes) {
    throw ValidationError("amplitudes", "length does not match n_modes");
  }
}

double WaveFunction::norm_squared() const { return kernels::parallel::sum_abs2(amps_); }

void WaveFunction::normalize() {
  const double n2 = norm_squared();
  if (!(n2 > 0.0)) throw ValidationError("amplitudes", "cannot normalize the zero state");
  kernels::parallel::scale(amps_, 1.0 / std::sqrt(n2));
}

PhysicalParams PhysicalParams::potassium_example() {
  PhysicalParams p;
  p.mass = 38.9637064864 * kAtomicMass;
  p.laser_wavenumber = kTwoPi / 766.7e-9;
  p.scattering_length = 50.0 * kBohrRadius;
  p.atom_number = 1600;
  p.transverse_freq = kTwoPi * 62.0;
  const double hbar_eff = 2.89;
  p.kick_period = hbar_eff * p.mass / (4.0 * kHbar * p.laser_wavenumber * p.laser_wavenumber);
  return p;
}

DimensionlessParams to_dimensionless(const PhysicalParams& phys, TransverseSpec spec,
                                     double transverse_size) {
  if (!(phys.mass > 0.0)) throw ValidationError("mass", "must be positive");
  if (!(phys.laser_wavenumber > 0.0)) throw ValidationError("laser_wavenumber", "must be positive");
  if (!(phys.kick_period > 0.0)) throw ValidationError("kick_period", "must be positive");
  if (!(phys.atom_number >= 0.0)) throw ValidationError("atom_number", "must be non-negative");
  if (!std::isfinite(phys.scattering_length)) {
    throw ValidationError("scattering_length", "must be finite");
  }

  const double kl = phys.laser_wavenumber;
  DimensionlessParams out;
  out.hbar_eff = 4.0 * kHbar * kl * kl * phys.kick_period / phys.mass;
  out.recoil_freq = kHbar * kl * kl / (2.0 * phys.mass);
  out.attractive = phys.scattering_length < 0.0;

  const double h2 = out.hbar_eff * out.hbar_eff;
  if (spec == TransverseSpec::Frequency) {
    if (!(phys.transverse_freq > 0.0)) {
      throw ValidationError("transverse_freq", "must be positive");
    }
    out.coupling = 0.5 * h2 * kl * phys.scattering_length *
                   (phys.transverse_freq / out.recoil_freq) * phys.atom_number;
  } else {
    if (!(transverse_size > 0.0)) throw ValidationError("transverse_size", "must be positive");
    out.coupling = kPi * h2 * kl * phys.scattering_length * kHbar /
                   (out.recoil_freq * phys.mass * transverse_size * transverse_size) *
                   phys.atom_number;
  }
  return out;
}

WaveFunction make_plane_wave(long n0, const ModeGrid& grid) {
  if (!grid.contains(n0)) {
    throw ValidationError("n0", "initial momentum index " + std::to_string(n0) +
                                    " lies outside the mode window [" +
                                    std::to_string(grid.n_min()) + ", " +
                                    std::to_string(grid.n_max()) + "]");
  }
  WaveFunction psi(grid);
  psi.at_mode(n0) = 1.0;
  return psi;
}

double kinetic_energy(const WaveFunction& psi) {
  const auto& grid = psi.grid();
  std::vector<double> p2(psi.size());
  for (std::size_t i = 0; i < p2.size(); ++i) {
    const double p = grid.momentum(grid.mode_at(i));
    p2[i] = p * p;
  }
  return kernels::parallel::weighted_abs2(psi.amplitudes(), p2);
}

double edge_population(const WaveFunction& psi) {
  const auto amps = psi.amplitudes();
  const auto w = static_cast<std::size_t>(psi.grid().edge_width());
  return kernels::serial::sum_abs2(amps.first(w)) + kernels::serial::sum_abs2(amps.last(w));
}

void check_boundary(const WaveFunction& psi, double threshold, long kick) {
  const double pop = edge_population(psi);
  if (pop > threshold) {
    throw BoundaryOverflow(kick >= 0 ? std::optional<long>(kick) : std::nullopt, pop, threshold);
  }
}

std::vector<cplx> to_real_space(const WaveFunction& psi, long n_x) {
  if (n_x < psi.grid().n_modes) {
    throw ValidationError("n_x", "real-space grid of " + std::to_string(n_x) +
                                     " points is smaller than the " +
                                     std::to_string(psi.grid().n_modes) + " modes (aliasing)");
  }
  SpectralWorkspace ws(psi.grid().n_modes, n_x);
  ws.load_modes(psi.amplitudes());
  ws.to_real();
  auto buf = ws.buffer();
  std::vector<cplx> out(buf.begin(), buf.end());
  kernels::parallel::scale(out, 1.0 / std::sqrt(kTwoPi));
  return out;
}

WaveFunction from_real_space(std::span<const cplx> values, const ModeGrid& grid) {
  const long n_x = static_cast<long>(values.size());
  SpectralWorkspace ws(grid.n_modes, n_x);
  std::copy(values.begin(), values.end(), ws.buffer().begin());
  ws.to_momentum();
  WaveFunction psi(grid);
  ws.store_modes(psi.amplitudes(), std::sqrt(kTwoPi) / static_cast<double>(n_x));
  return psi;
}

}  // namespace qkr
