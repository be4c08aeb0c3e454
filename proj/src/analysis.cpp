#include "qkr/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "qkr/error.hpp"
#include "qkr/propagators.hpp"

namespace qkr {

bool operator==(const RunMetadata& a, const RunMetadata& b) {
  const auto& p = a.params;
  const auto& q = b.params;
  const bool params_equal = p.hbar_eff == q.hbar_eff && p.kick_strength == q.kick_strength &&
                            p.coupling == q.coupling && p.gamma == q.gamma &&
                            p.n_modes == q.n_modes && p.dt == q.dt && p.n_kicks == q.n_kicks &&
                            p.method == q.method && p.boundary_threshold == q.boundary_threshold;
  return params_equal && a.seed == b.seed && a.initial_momenta == b.initial_momenta &&
         a.fit_window == b.fit_window && a.scale == b.scale && a.status == b.status &&
         a.energy_convention == b.energy_convention;
}

void TimeSeries::validate() const {
  if (times.size() != energies.size()) {
    throw ValidationError("energies", "length differs from times");
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < 0) throw ValidationError("times", "kick indices must be non-negative");
    if (i > 0 && times[i] <= times[i - 1]) {
      throw ValidationError("times", "kick indices must be strictly increasing");
    }
    if (!(energies[i] >= 0.0)) throw ValidationError("energies", "must be non-negative");
  }
}

ExponentFit fit_subdiffusion(const TimeSeries& series, FitWindow window) {
  if (series.times.size() != series.energies.size()) {
    throw ValidationError("energies", "length differs from times");
  }
  if (window.t_min < 1 || window.t_max < window.t_min) {
    throw ValidationError("window", "need 1 <= t_min <= t_max");
  }
  std::vector<double> x, y;
  for (std::size_t i = 0; i < series.times.size(); ++i) {
    const long t = series.times[i];
    if (t < window.t_min || t > window.t_max) continue;
    if (!(series.energies[i] > 0.0)) {
      throw ValidationError("energies", "non-positive energy at kick " + std::to_string(t) +
                                            " inside the fit window");
    }
    x.push_back(std::log(static_cast<double>(t)));
    y.push_back(std::log(series.energies[i]));
  }
  const auto n = static_cast<long>(x.size());
  if (n < 5) {
    throw ValidationError("window", "only " + std::to_string(n) +
                                        " samples inside the fit window; need at least 5");
  }

  double mx = 0.0, my = 0.0;
  for (long i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (long i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw ValidationError("window", "all samples at the same time");

  ExponentFit fit;
  fit.alpha = sxy / sxx;
  fit.intercept = my - fit.alpha * mx;
  double sse = 0.0;
  for (long i = 0; i < n; ++i) {
    const double r = y[i] - (fit.intercept + fit.alpha * x[i]);
    sse += r * r;
  }
  fit.stderr_alpha = std::sqrt(sse / static_cast<double>(n - 2) / sxx);
  fit.window = window;
  fit.n_samples = n;
  return fit;
}

double kolmogorov_pvalue(long n, double d) {
  if (n <= 0) throw ValidationError("n", "sample size must be positive");
  if (d <= 0.0) return 1.0;
  if (d >= 1.0) return 0.0;
  const double sqn = std::sqrt(static_cast<double>(n));
  const double lambda = (sqn + 0.12 + 0.11 / sqn) * d;
  double p;
  if (lambda < 1.18) {
    // Jacobi-transformed series converges fast for small λ.
    const double c = -kPi * kPi / (8.0 * lambda * lambda);
    double sum = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double odd = 2.0 * k - 1.0;
      sum += std::exp(c * odd * odd);
    }
    p = 1.0 - std::sqrt(kTwoPi) / lambda * sum;
  } else {
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
      const double term = std::exp(-2.0 * k * k * lambda * lambda);
      sum += (k % 2 == 1 ? term : -term);
      if (term < 1e-300) break;
    }
    p = 2.0 * sum;
  }
  return std::clamp(p, 0.0, 1.0);
}

KsResult ks_test_uniform(std::vector<double> u) {
  if (u.empty()) throw ValidationError("samples", "KS test needs at least one sample");
  std::sort(u.begin(), u.end());
  const auto n = static_cast<double>(u.size());
  double d = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double above = static_cast<double>(i + 1) / n - u[i];
    const double below = u[i] - static_cast<double>(i) / n;
    d = std::max({d, above, below});
  }
  const auto count = static_cast<long>(u.size());
  return {d, kolmogorov_pvalue(count, d), count};
}

KsResult phase_uniformity_test(const WaveFunction& psi, double population_cutoff) {
  std::vector<double> u;
  for (auto a : psi.amplitudes()) {
    if (std::norm(a) <= population_cutoff) continue;
    double phi = std::arg(a);
    if (phi < 0.0) phi += kTwoPi;
    u.push_back(std::min(phi / kTwoPi, std::nextafter(1.0, 0.0)));
  }
  if (u.size() < 50) {
    throw ValidationError("amplitude_cutoff", "only " + std::to_string(u.size()) +
                                                  " modes above the cutoff; need at least 50");
  }
  return ks_test_uniform(std::move(u));
}

void draw_uniform_phases(std::uint64_t seed, std::uint64_t draw, std::span<double> out) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(draw), static_cast<std::uint32_t>(draw >> 32)};
  std::mt19937_64 gen(seq);
  // Top 53 bits -> [0, 1); explicit so that results do not depend on the
  // standard library's distribution implementation.
  for (auto& phi : out) phi = kTwoPi * (static_cast<double>(gen() >> 11) * 0x1.0p-53);
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  double m = *mid;
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), mid));
  return m;
}

}  // namespace

FunctionalFidelity paa_fidelity(const WaveFunction& psi, double population_cutoff) {
  const auto exact = compute_F_exact(psi);
  const auto paa = compute_F_paa(psi);
  const auto amps = psi.amplitudes();
  FunctionalFidelity out;
  std::vector<double> ratios;
  for (std::size_t i = 0; i < amps.size(); ++i) {
    if (std::norm(amps[i]) <= population_cutoff) continue;
    const double fe = std::abs(exact.values[i]);
    if (fe == 0.0) continue;
    const double r = std::abs(std::log10(std::abs(paa.values[i]) / fe));
    ratios.push_back(r);
    out.max_abs_log10_ratio = std::max(out.max_abs_log10_ratio, r);
  }
  out.n_modes_compared = static_cast<long>(ratios.size());
  if (!ratios.empty()) out.median_abs_log10_ratio = median(std::move(ratios));
  return out;
}

RandomizedPhaseReport randomized_phase_check(const WaveFunction& psi, long n_draws,
                                             std::uint64_t seed, RandomizedPhaseOptions options) {
  if (n_draws < 1) throw ValidationError("n_draws", "must be at least 1");
  const auto amps = psi.amplitudes();
  const std::size_t n = amps.size();
  FunctionalEvaluator eval(psi.grid().n_modes);

  std::vector<cplx> f(n), f_rand(n), rand_state(n);
  eval.exact(amps, f);

  std::vector<std::size_t> compared;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::norm(amps[i]) > options.population_cutoff && std::abs(f[i]) > options.functional_floor) {
      compared.push_back(i);
    }
  }

  RandomizedPhaseReport report;
  report.n_draws = n_draws;
  report.n_modes_compared = static_cast<long>(compared.size());
  if (compared.empty()) return report;

  std::vector<double> pooled;
  pooled.reserve(compared.size() * static_cast<std::size_t>(n_draws));
  std::vector<double> phases(n);
  for (long d = 0; d < n_draws; ++d) {
    draw_uniform_phases(seed, static_cast<std::uint64_t>(d), phases);
    for (std::size_t i = 0; i < n; ++i) rand_state[i] = std::polar(std::abs(amps[i]), phases[i]);
    eval.exact(rand_state, f_rand);
    std::vector<double> ratios;
    ratios.reserve(compared.size());
    for (auto i : compared) {
      const double r = std::log10(std::abs(f_rand[i]) / std::abs(f[i]));
      ratios.push_back(r);
      pooled.push_back(r);
      report.max_abs_log10_ratio = std::max(report.max_abs_log10_ratio, std::abs(r));
    }
    report.per_draw_median.push_back(median(std::move(ratios)));
  }
  double sum = 0.0;
  for (double r : pooled) sum += r;
  report.mean_log10_ratio = sum / static_cast<double>(pooled.size());
  report.median_log10_ratio = median(std::move(pooled));
  return report;
}

PhaseCorrelationReport phase_correlation_check(std::span<const double> amplitudes, long n_draws,
                                               std::uint64_t seed, double population_cutoff) {
  if (n_draws < 1) throw ValidationError("n_draws", "must be at least 1");
  const std::size_t n = amplitudes.size();
  if (n < 16 || n % 2 != 0) {
    throw ValidationError("amplitudes", "profile length must be even and at least 16");
  }
  double total = 0.0;
  for (double a : amplitudes) total += a * a;
  if (std::abs(total - 1.0) > 1e-8) {
    throw ValidationError("amplitudes", "sum of A^2 must be 1");
  }

  const ModeGrid grid{static_cast<long>(n), 1.0};
  PhaseCorrelationReport r;
  r.n_draws = n_draws;
  std::vector<std::size_t> sel;
  for (std::size_t i = 0; i < n; ++i) {
    if (amplitudes[i] * amplitudes[i] > population_cutoff) {
      sel.push_back(i);
      r.modes.push_back(grid.mode_at(i));
      r.population.push_back(amplitudes[i] * amplitudes[i]);
    }
  }
  const std::size_t m = sel.size();
  if (m < 2) throw ValidationError("amplitudes", "fewer than two populated modes");

  FunctionalEvaluator eval(static_cast<long>(n));
  {
    std::vector<double> b(n), s(n);
    for (std::size_t i = 0; i < n; ++i) b[i] = amplitudes[i] * amplitudes[i];
    eval.triple_convolution(b, s);
    for (auto i : sel) {
      const double v = (4.0 * b[i] + 2.0 * std::max(s[i], 0.0)) / (kTwoPi * kTwoPi);
      r.closed_form_abs2_F.push_back(v);
    }
  }

  std::vector<cplx> sum_f(m), sum_fd(m), sum_fpsi(m);
  std::vector<double> sum_abs2(m), sum_abs4(m);
  // Off-diagonal accumulators, row-major over the selected modes.
  std::vector<cplx> sum_ff(m * m), sum_fp(m * m);

  std::vector<double> phases(n);
  std::vector<cplx> psi(n), f(n), fs(m), ps(m);
  const long mm = static_cast<long>(m);
  for (long d = 0; d < n_draws; ++d) {
    draw_uniform_phases(seed, static_cast<std::uint64_t>(d), phases);
    for (std::size_t i = 0; i < n; ++i) psi[i] = std::polar(amplitudes[i], phases[i]);
    eval.exact(psi, f);
    for (std::size_t k = 0; k < m; ++k) {
      fs[k] = f[sel[k]];
      ps[k] = psi[sel[k]];
      const double a2 = std::norm(fs[k]);
      sum_f[k] += fs[k];
      sum_fd[k] += fs[k] * std::polar(1.0, -phases[sel[k]]);
      sum_abs2[k] += a2;
      sum_abs4[k] += a2 * a2;
    }
    // Each matrix element is accumulated by exactly one thread, in draw
    // order, so the result is independent of the thread count.
#pragma omp parallel for schedule(static)
    for (long row = 0; row < mm; ++row) {
      const cplx fr = fs[static_cast<std::size_t>(row)];
      cplx* ff = sum_ff.data() + static_cast<std::size_t>(row) * m;
      cplx* fp = sum_fp.data() + static_cast<std::size_t>(row) * m;
      for (std::size_t col = 0; col < m; ++col) {
        ff[col] += fr * std::conj(fs[col]);
        fp[col] += fr * std::conj(ps[col]);
      }
    }
  }

  const auto nd = static_cast<double>(n_draws);
  for (std::size_t k = 0; k < m; ++k) {
    r.mean_F.push_back(sum_f[k] / nd);
    r.mean_F_dephased.push_back(sum_fd[k] / nd);
    const double mean2 = sum_abs2[k] / nd;
    r.mean_abs2_F.push_back(mean2);
    const double var = n_draws > 1 ? std::max(0.0, (sum_abs4[k] / nd - mean2 * mean2)) * nd / (nd - 1.0)
                                   : 0.0;
    r.stderr_abs2_F.push_back(std::sqrt(var / nd));
    r.mean_F_psi_conj.push_back(sum_fp[k * m + k] / nd);
  }

  double ff2 = 0.0, fp2 = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j) continue;
      const double ff = std::abs(sum_ff[i * m + j] / nd) /
                        std::sqrt(r.mean_abs2_F[i] * r.mean_abs2_F[j]);
      const double fp = std::abs(sum_fp[i * m + j] / nd) /
                        std::sqrt(r.mean_abs2_F[i] * r.population[j]);
      ff2 += ff * ff;
      fp2 += fp * fp;
      r.offdiag_FF_max = std::max(r.offdiag_FF_max, ff);
      r.offdiag_Fpsi_max = std::max(r.offdiag_Fpsi_max, fp);
    }
  }
  const auto pairs = static_cast<double>(m * (m - 1));
  r.offdiag_FF_rms = std::sqrt(ff2 / pairs);
  r.offdiag_Fpsi_rms = std::sqrt(fp2 / pairs);
  return r;
}

}  // namespace qkr
