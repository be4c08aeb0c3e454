#include "qkr/propagators.hpp"

#include <cmath>

#include "qkr/error.hpp"
#include "qkr/kernels.hpp"

namespace qkr {

namespace k = kernels::parallel;

namespace {

cplx phase_factor(double theta) { return {std::cos(theta), -std::sin(theta)}; }

/// Per-mode table in wrapped (FFT) order: factor(n)·scale inside the window,
/// zero outside. Multiplying by it also truncates to the window.
std::vector<cplx> wrapped_kinetic_table(const SpectralWorkspace& ws, double hbar_eff,
                                        double duration, double scale) {
  std::vector<cplx> table(static_cast<std::size_t>(ws.n_x()), cplx{});
  const long half = ws.n_modes() / 2;
  for (long n = -half; n < half; ++n) {
    const double theta = 0.5 * static_cast<double>(n * n) * hbar_eff * duration;
    table[ws.wrapped_index(n)] = scale * phase_factor(theta);
  }
  return table;
}

/// Kinetic phase angle n²ħ̄k/2 per full period, centred order.
std::vector<double> centred_kinetic_angles(const ModeGrid& grid) {
  std::vector<double> out(static_cast<std::size_t>(grid.n_modes));
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto n = static_cast<double>(grid.mode_at(i));
    out[i] = 0.5 * n * n * grid.hbar_eff;
  }
  return out;
}

std::vector<cplx> kick_table(long n_x, double kick_strength, double hbar_eff) {
  std::vector<cplx> table(static_cast<std::size_t>(n_x));
  for (long j = 0; j < n_x; ++j) {
    const double x = kTwoPi * static_cast<double>(j) / static_cast<double>(n_x);
    table[static_cast<std::size_t>(j)] = phase_factor(kick_strength * std::cos(x) / hbar_eff);
  }
  return table;
}

/// Applies the kick through the oversampled real-space grid.
class KickStep {
 public:
  KickStep(SpectralWorkspace& ws, double kick_strength, double hbar_eff)
      : ws_(&ws), factors_(kick_table(ws.n_x(), kick_strength, hbar_eff)),
        identity_(kick_strength == 0.0) {}

  void apply(std::span<cplx> amps) {
    if (identity_) return;
    ws_->load_modes(amps);
    ws_->to_real();
    k::multiply(ws_->buffer(), factors_);
    ws_->to_momentum();
    ws_->store_modes(amps, 1.0 / static_cast<double>(ws_->n_x()));
  }

 private:
  SpectralWorkspace* ws_;
  std::vector<cplx> factors_;
  bool identity_;
};

class LinearPropagator final : public PeriodPropagator {
 public:
  explicit LinearPropagator(const SimulationParams& p)
      : ws_(p.n_modes, 2 * p.n_modes), kick_(ws_, p.kick_strength, p.hbar_eff) {
    const auto angles = centred_kinetic_angles(ModeGrid::from(p));
    free_.reserve(angles.size());
    for (double a : angles) free_.push_back(phase_factor(a));
  }

  void advance(WaveFunction& psi) override {
    k::multiply(psi.amplitudes(), free_);
    kick_.apply(psi.amplitudes());
  }

 private:
  SpectralWorkspace ws_;
  KickStep kick_;
  std::vector<cplx> free_;
};

class GpePropagator final : public PeriodPropagator {
 public:
  explicit GpePropagator(const SimulationParams& p)
      : ws_(p.n_modes, 2 * p.n_modes),
        kick_(ws_, p.kick_strength, p.hbar_eff),
        substeps_(p.substeps()),
        interacting_(p.coupling != 0.0) {
    const double dt = 1.0 / static_cast<double>(substeps_);
    const double inv_nx = 1.0 / static_cast<double>(ws_.n_x());
    half_ = wrapped_kinetic_table(ws_, p.hbar_eff, 0.5 * dt, 1.0);
    half_scaled_ = wrapped_kinetic_table(ws_, p.hbar_eff, 0.5 * dt, inv_nx);
    full_scaled_ = wrapped_kinetic_table(ws_, p.hbar_eff, dt, inv_nx);
    // |ψ|² = |u|²/2π for the unnormalised inverse transform u.
    nonlinear_coeff_ = p.coupling * dt / (p.hbar_eff * kTwoPi);
    if (!interacting_) {
      const auto angles = centred_kinetic_angles(ModeGrid::from(p));
      for (double a : angles) free_.push_back(phase_factor(a));
    }
  }

  void advance(WaveFunction& psi) override {
    if (!interacting_) {
      // All kinetic substeps commute; their product is the exact free period.
      k::multiply(psi.amplitudes(), free_);
      kick_.apply(psi.amplitudes());
      return;
    }
    auto buf = ws_.buffer();
    ws_.load_modes(psi.amplitudes());
    k::multiply(buf, half_);
    // Adjacent half kinetic steps of consecutive substeps are fused.
    for (long s = 0; s < substeps_; ++s) {
      ws_.to_real();
      k::nonlinear_phase(buf, nonlinear_coeff_);
      ws_.to_momentum();
      k::multiply(buf, s + 1 < substeps_ ? full_scaled_ : half_scaled_);
    }
    ws_.store_modes(psi.amplitudes());
    kick_.apply(psi.amplitudes());
  }

 private:
  SpectralWorkspace ws_;
  KickStep kick_;
  long substeps_;
  bool interacting_;
  double nonlinear_coeff_ = 0.0;
  std::vector<cplx> half_, half_scaled_, full_scaled_, free_;
};

class LmaPropagator final : public PeriodPropagator {
 public:
  explicit LmaPropagator(const SimulationParams& p)
      : ws_(p.n_modes, 2 * p.n_modes),
        kick_(ws_, p.kick_strength, p.hbar_eff),
        angles_(centred_kinetic_angles(ModeGrid::from(p))),
        coeff_(p.coupling * p.gamma / (kTwoPi * p.hbar_eff)) {}

  void advance(WaveFunction& psi) override {
    k::local_phase(psi.amplitudes(), angles_, coeff_);
    kick_.apply(psi.amplitudes());
  }

 private:
  SpectralWorkspace ws_;
  KickStep kick_;
  std::vector<double> angles_;
  double coeff_;
};

class PaaPropagator final : public PeriodPropagator {
 public:
  explicit PaaPropagator(const SimulationParams& p)
      : ws_(p.n_modes, 2 * p.n_modes),
        kick_(ws_, p.kick_strength, p.hbar_eff),
        evaluator_(p.n_modes),
        angles_(centred_kinetic_angles(ModeGrid::from(p))),
        f_abs_(static_cast<std::size_t>(p.n_modes)),
        coeff_(p.coupling / p.hbar_eff) {}

  void advance(WaveFunction& psi) override {
    if (coeff_ != 0.0) evaluator_.paa_magnitude(psi.amplitudes(), f_abs_);
    k::ratio_phase(psi.amplitudes(), angles_, f_abs_, coeff_, kAmplitudeFloor);
    kick_.apply(psi.amplitudes());
  }

 private:
  SpectralWorkspace ws_;
  KickStep kick_;
  FunctionalEvaluator evaluator_;
  std::vector<double> angles_;
  std::vector<double> f_abs_;
  double coeff_;
};

WaveFunction run_one_period(const WaveFunction& psi, SimulationParams params, Method method) {
  params.method = method;
  params.n_modes = psi.grid().n_modes;
  params.hbar_eff = psi.grid().hbar_eff;
  params.validate();
  auto prop = make_propagator(params);
  WaveFunction out = psi;
  prop->advance(out);
  check_boundary(out, params.boundary_threshold);
  return out;
}

}  // namespace

FunctionalEvaluator::FunctionalEvaluator(long n_modes)
    : n_modes_(n_modes), ws_(n_modes, 2 * n_modes),
      scratch_(static_cast<std::size_t>(n_modes)) {}

void FunctionalEvaluator::exact(std::span<const cplx> amps, std::span<cplx> out) {
  ws_.load_modes(amps);
  ws_.to_real();
  k::cubic(ws_.buffer());
  ws_.to_momentum();
  ws_.store_modes(out, 1.0 / (kTwoPi * static_cast<double>(ws_.n_x())));
}

void FunctionalEvaluator::triple_convolution(std::span<const double> b, std::span<double> out) {
  for (std::size_t i = 0; i < scratch_.size(); ++i) scratch_[i] = b[i];
  ws_.load_modes(scratch_);
  // Transformed B; its squared modulus is the transform of the
  // autocorrelation R(d) = Σ B(p)B(p-d), and S = R * B.
  ws_.to_real();
  for (auto& z : ws_.buffer()) z *= std::norm(z);
  ws_.to_momentum();
  ws_.store_modes(scratch_, 1.0 / static_cast<double>(ws_.n_x()));
  for (std::size_t i = 0; i < scratch_.size(); ++i) out[i] = scratch_[i].real();
}

void FunctionalEvaluator::paa_magnitude(std::span<const cplx> amps, std::span<double> out) {
  std::vector<double> b(amps.size());
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = std::norm(amps[i]);
  triple_convolution(b, out);
  for (std::size_t i = 0; i < b.size(); ++i) {
    // Round-off can leave tiny negative values where S vanishes.
    const double s = std::max(out[i], 0.0);
    out[i] = std::sqrt(4.0 * b[i] + 2.0 * s) / kTwoPi;
  }
}

InteractionFunctional compute_F_exact(const WaveFunction& psi) {
  FunctionalEvaluator eval(psi.grid().n_modes);
  InteractionFunctional f{std::vector<cplx>(psi.size()), FunctionalKind::EXACT};
  eval.exact(psi.amplitudes(), f.values);
  return f;
}

InteractionFunctional compute_F_lma(const WaveFunction& psi, double gamma) {
  InteractionFunctional f{std::vector<cplx>(psi.size()), FunctionalKind::LMA};
  const auto a = psi.amplitudes();
  for (std::size_t i = 0; i < a.size(); ++i) f.values[i] = gamma / kTwoPi * std::norm(a[i]) * a[i];
  return f;
}

InteractionFunctional compute_F_paa(const WaveFunction& psi) {
  FunctionalEvaluator eval(psi.grid().n_modes);
  std::vector<double> mag(psi.size());
  eval.paa_magnitude(psi.amplitudes(), mag);
  InteractionFunctional f{std::vector<cplx>(psi.size()), FunctionalKind::PAA};
  const auto a = psi.amplitudes();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double amp = std::abs(a[i]);
    f.values[i] = amp > kAmplitudeFloor ? mag[i] * (a[i] / amp) : cplx{mag[i], 0.0};
  }
  return f;
}

WaveFunction apply_kick(const WaveFunction& psi, double kick_strength) {
  SpectralWorkspace ws(psi.grid().n_modes, psi.grid().oversampled_points());
  KickStep kick(ws, kick_strength, psi.grid().hbar_eff);
  WaveFunction out = psi;
  kick.apply(out.amplitudes());
  return out;
}

WaveFunction gpe_free_substep(const WaveFunction& psi, double dt, double coupling) {
  const auto& grid = psi.grid();
  SpectralWorkspace ws(grid.n_modes, grid.oversampled_points());
  const double inv_nx = 1.0 / static_cast<double>(ws.n_x());
  const auto half = wrapped_kinetic_table(ws, grid.hbar_eff, 0.5 * dt, 1.0);
  const auto half_scaled = wrapped_kinetic_table(ws, grid.hbar_eff, 0.5 * dt, inv_nx);

  ws.load_modes(psi.amplitudes());
  k::multiply(ws.buffer(), half);
  ws.to_real();
  k::nonlinear_phase(ws.buffer(), coupling * dt / (grid.hbar_eff * kTwoPi));
  ws.to_momentum();
  k::multiply(ws.buffer(), half_scaled);
  WaveFunction out(grid);
  ws.store_modes(out.amplitudes());
  return out;
}

WaveFunction gpe_period(const WaveFunction& psi, const SimulationParams& params) {
  return run_one_period(psi, params, Method::GPE);
}

WaveFunction lma_period(const WaveFunction& psi, const SimulationParams& params) {
  return run_one_period(psi, params, Method::LMA);
}

WaveFunction paa_period(const WaveFunction& psi, const SimulationParams& params) {
  return run_one_period(psi, params, Method::PAA);
}

WaveFunction linear_period(const WaveFunction& psi, const SimulationParams& params) {
  return run_one_period(psi, params, Method::NONINTERACTING);
}

std::unique_ptr<PeriodPropagator> make_propagator(const SimulationParams& params) {
  params.validate();
  switch (params.method) {
    case Method::GPE: return std::make_unique<GpePropagator>(params);
    case Method::LMA: return std::make_unique<LmaPropagator>(params);
    case Method::PAA: return std::make_unique<PaaPropagator>(params);
    case Method::NONINTERACTING: return std::make_unique<LinearPropagator>(params);
  }
  throw ValidationError("method", "unsupported method");
}

}  // namespace qkr
