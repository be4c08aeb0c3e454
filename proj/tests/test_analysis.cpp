#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "qkr/analysis.hpp"
#include "qkr/error.hpp"

using namespace qkr;

namespace {

TimeSeries power_law(double c, double alpha, std::vector<long> times) {
  TimeSeries s;
  s.times = std::move(times);
  for (long t : s.times) s.energies.push_back(c * std::pow(static_cast<double>(t), alpha));
  return s;
}

WaveFunction random_phase_state(long n_modes, double width, std::uint64_t seed) {
  std::vector<double> phases(static_cast<std::size_t>(n_modes));
  draw_uniform_phases(seed, 0, phases);
  WaveFunction psi(ModeGrid{n_modes, 2.89});
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const double n = static_cast<double>(psi.grid().mode_at(i));
    psi.amplitudes()[i] = std::polar(std::exp(-std::abs(n) / width), phases[i]);
  }
  psi.normalize();
  return psi;
}

std::vector<double> gaussian_profile(std::size_t n, double sigma) {
  std::vector<double> a(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double m = static_cast<double>(i) - static_cast<double>(n / 2);
    a[i] = std::exp(-m * m / (4.0 * sigma * sigma));
    total += a[i] * a[i];
  }
  for (auto& x : a) x /= std::sqrt(total);
  return a;
}

}  // namespace

TEST_CASE("fit recovers an exact power law") {
  std::vector<long> times;
  for (long t = 1; t <= 100000; t = t * 3 / 2 + 1) times.push_back(t);
  const auto s = power_law(3.0, 0.45, times);
  const auto fit = fit_subdiffusion(s, {100, 100000});
  CHECK(fit.alpha == doctest::Approx(0.45).epsilon(1e-12));
  CHECK(fit.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(fit.stderr_alpha < 1e-10);
  CHECK(fit.window.t_min == 100);
  long inside = 0;
  for (long t : times) inside += (t >= 100 && t <= 100000);
  CHECK(fit.n_samples == inside);
}

TEST_CASE("fit agrees with an independent least-squares slope") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0.0, 0.05);
  TimeSeries s;
  std::vector<double> lx, ly;
  for (long t = 10; t <= 5000; t += 37) {
    s.times.push_back(t);
    s.energies.push_back(2.0 * std::pow(t, 0.3) * std::exp(noise(rng)));
    if (t >= 50 && t <= 4000) {
      lx.push_back(std::log(static_cast<double>(t)));
      ly.push_back(std::log(s.energies.back()));
    }
  }
  const auto fit = fit_subdiffusion(s, {50, 4000});
  CHECK(fit.alpha == doctest::Approx(oracle::ols_slope(lx, ly)).epsilon(1e-10));
  CHECK(fit.stderr_alpha > 0.0);
  CHECK(std::abs(fit.alpha - 0.3) < 5 * fit.stderr_alpha);
}

TEST_CASE("fit rejects thin windows and bad data") {
  const auto s = power_law(1.0, 0.5, {1, 2, 3, 4, 5, 6, 7, 8});
  CHECK_NOTHROW(fit_subdiffusion(s, {1, 5}));
  try {
    fit_subdiffusion(s, {1, 4});
    FAIL("expected rejection");
  } catch (const ValidationError& e) {
    CHECK(e.field() == "window");
  }
  CHECK_THROWS_AS(fit_subdiffusion(s, {0, 8}), ValidationError);
  CHECK_THROWS_AS(fit_subdiffusion(s, {6, 5}), ValidationError);
  auto z = s;
  z.energies[2] = 0.0;
  CHECK_THROWS_AS(fit_subdiffusion(z, {1, 8}), ValidationError);
}

TEST_CASE("time series invariants") {
  TimeSeries s = power_law(1.0, 1.0, {0, 1, 2});
  CHECK_NOTHROW(s.validate());
  s.times = {0, 2, 2};
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s.times = {0, 1};
  CHECK_THROWS_AS(s.validate(), ValidationError);
}

TEST_CASE("Kolmogorov tail matches tabulated critical values") {
  // Large n so that Stephens' correction is negligible: λ ≈ √n·d.
  const long n = 100000000;
  const double rn = std::sqrt(static_cast<double>(n)) + 0.12 + 0.11 / std::sqrt(static_cast<double>(n));
  CHECK(kolmogorov_pvalue(n, 1.3581 / rn) == doctest::Approx(0.05).epsilon(1e-3));
  CHECK(kolmogorov_pvalue(n, 1.6276 / rn) == doctest::Approx(0.01).epsilon(1e-3));
  CHECK(kolmogorov_pvalue(n, 1.2238 / rn) == doctest::Approx(0.10).epsilon(1e-3));
  for (double lambda : {0.3, 0.5, 0.8, 1.0, 1.17, 1.19, 1.5, 2.5}) {
    CAPTURE(lambda);
    CHECK(kolmogorov_pvalue(n, lambda / rn) ==
          doctest::Approx(oracle::kolmogorov_q(lambda)).epsilon(1e-9));
  }
  CHECK(kolmogorov_pvalue(n, 0.0) == doctest::Approx(1.0));
  CHECK(kolmogorov_pvalue(n, 1.0) < 1e-100);
}

TEST_CASE("KS statistic on hand-computed samples") {
  auto r = ks_test_uniform({0.5});
  CHECK(r.statistic == doctest::Approx(0.5));
  CHECK(r.n_samples == 1);
  std::vector<double> even;
  for (int i = 0; i < 100; ++i) even.push_back((i + 0.5) / 100.0);
  r = ks_test_uniform(even);
  CHECK(r.statistic == doctest::Approx(0.005));
  CHECK(r.p_value > 0.999);
  r = ks_test_uniform({0.1, 0.2, 0.3, 0.4});
  CHECK(r.statistic == doctest::Approx(0.6));
}

TEST_CASE("phase uniformity separates random from coherent phases") {
  const auto random = random_phase_state(512, 40.0, 17);
  const auto ks = phase_uniformity_test(random);
  CHECK(ks.n_samples > 100);
  CHECK(ks.p_value > 0.01);

  auto coherent = random;
  for (auto& z : coherent.amplitudes()) z = std::abs(z);
  CHECK(phase_uniformity_test(coherent).p_value < 1e-10);

  const auto narrow = make_plane_wave(0, ModeGrid{64, 1.0});
  CHECK_THROWS_AS(phase_uniformity_test(narrow), ValidationError);
}

TEST_CASE("uniform phase draws are deterministic and well spread") {
  std::vector<double> a(4096), b(4096), c(4096);
  draw_uniform_phases(5, 0, a);
  draw_uniform_phases(5, 0, b);
  draw_uniform_phases(5, 1, c);
  CHECK(a == b);
  CHECK(a != c);
  double mean = 0.0;
  for (double x : a) {
    REQUIRE(x >= 0.0);
    REQUIRE(x < 2.0 * kPi);
    mean += x;
  }
  CHECK(mean / 4096.0 == doctest::Approx(kPi).epsilon(0.05));
  std::vector<double> u(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) u[i] = a[i] / (2.0 * kPi);
  CHECK(ks_test_uniform(u).p_value > 0.001);
}

TEST_CASE("randomized-phase check on a state with random phases") {
  const auto psi = random_phase_state(256, 20.0, 23);
  const auto r = randomized_phase_check(psi, 8, 99);
  CHECK(r.n_draws == 8);
  CHECK(r.per_draw_median.size() == 8);
  CHECK(r.n_modes_compared > 50);
  CHECK(std::abs(r.median_log10_ratio) < 0.15);
  const auto again = randomized_phase_check(psi, 8, 99);
  CHECK(again.median_log10_ratio == r.median_log10_ratio);
  CHECK_THROWS_AS(randomized_phase_check(psi, 0, 1), ValidationError);
}

TEST_CASE("PAA fidelity is exact for a plane wave") {
  const auto psi = make_plane_wave(2, ModeGrid{32, 1.0});
  const auto f = paa_fidelity(psi);
  CHECK(f.n_modes_compared == 1);
  // |F| = 1/2π, |F_PAA| = √6/2π.
  CHECK(f.median_abs_log10_ratio == doctest::Approx(std::log10(std::sqrt(6.0))));
}

TEST_CASE("Monte-Carlo |F|² matches the exact random-phase mean") {
  const auto a = gaussian_profile(32, 3.0);
  const long draws = 4000;
  const auto r = phase_correlation_check(a, draws, 2024, 1e-12);
  const auto exact = oracle::exact_mean_abs2_F(a);
  const double norm = 1.0;
  long within = 0;
  for (std::size_t k = 0; k < r.modes.size(); ++k) {
    const auto i = static_cast<std::size_t>(r.modes[k] + 16);
    const double z = (r.mean_abs2_F[k] - exact[i]) / r.stderr_abs2_F[k];
    within += std::abs(z) < 3.5;
    // Coherent part: E[F ψ*] = (2A·ΣA² − A³)·A / 2π exactly.
    const double expected_fpsi = (2.0 * a[i] * norm - a[i] * a[i] * a[i]) * a[i] / (2.0 * kPi);
    CHECK(std::abs(r.mean_F_psi_conj[k] - expected_fpsi) < 5.0 * std::sqrt(exact[i] * a[i] * a[i] / draws));
  }
  CHECK(static_cast<double>(within) >= 0.95 * static_cast<double>(r.modes.size()));

  // The closed form agrees with the double sum.
  std::vector<oracle::cplx> psi(a.begin(), a.end());
  const auto mag = oracle::direct_paa_magnitude(psi);
  for (std::size_t k = 0; k < r.modes.size(); ++k) {
    const auto i = static_cast<std::size_t>(r.modes[k] + 16);
    CHECK(r.closed_form_abs2_F[k] == doctest::Approx(mag[i] * mag[i]).epsilon(1e-10));
  }
}

TEST_CASE("off-diagonal correlations shrink like n_draws^(-1/2)") {
  const auto a = gaussian_profile(32, 4.0);
  const auto small = phase_correlation_check(a, 200, 1, 1e-10);
  const auto large = phase_correlation_check(a, 20000, 1, 1e-10);
  const double ratio = small.offdiag_FF_rms / large.offdiag_FF_rms;
  CHECK(ratio == doctest::Approx(10.0).epsilon(0.25));
  CHECK(small.offdiag_Fpsi_rms / large.offdiag_Fpsi_rms == doctest::Approx(10.0).epsilon(0.25));
  CHECK_THROWS_AS(phase_correlation_check(std::vector<double>(32, 0.1), 10, 1), ValidationError);
}
