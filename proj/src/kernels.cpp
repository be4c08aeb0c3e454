#include "qkr/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace qkr::kernels {

namespace {

inline cplx unit_phase(double theta) { return {std::cos(theta), -std::sin(theta)}; }

// exp(-iθ) for |θ| <= kSmallAngle by truncated Taylor series; the first
// omitted terms are below 1e-19. Falls back to cos/sin otherwise. The split
// step's nonlinear phase is almost always in the small-angle branch.
constexpr double kSmallAngle = 0.05;

inline cplx small_unit_phase(double theta) {
  if (std::abs(theta) > kSmallAngle) return unit_phase(theta);
  const double t2 = theta * theta;
  const double c = 1.0 + t2 * (-1.0 / 2 + t2 * (1.0 / 24 + t2 * (-1.0 / 720 + t2 * (1.0 / 40320))));
  const double s =
      theta * (1.0 + t2 * (-1.0 / 6 + t2 * (1.0 / 120 + t2 * (-1.0 / 5040 + t2 * (1.0 / 362880)))));
  return {c, -s};
}

inline double abs2(cplx z) { return z.real() * z.real() + z.imag() * z.imag(); }

inline long as_long(std::size_t n) { return static_cast<long>(n); }

}  // namespace

namespace serial {

void multiply(std::span<cplx> data, std::span<const cplx> factors) {
  for (std::size_t i = 0; i < data.size(); ++i) data[i] *= factors[i];
}

void scale(std::span<cplx> data, double s) {
  for (auto& z : data) z *= s;
}

void nonlinear_phase(std::span<cplx> u, double coeff) {
  for (auto& z : u) z *= small_unit_phase(coeff * abs2(z));
}

void cubic(std::span<cplx> u) {
  for (auto& z : u) z *= abs2(z);
}

void local_phase(std::span<cplx> a, std::span<const double> base, double coeff) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] *= unit_phase(base[i] + coeff * abs2(a[i]));
}

void ratio_phase(std::span<cplx> a, std::span<const double> base, std::span<const double> f,
                 double coeff, double floor) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double amp = std::abs(a[i]);
    const double theta = amp >= floor ? base[i] + coeff * f[i] / amp : base[i];
    a[i] *= unit_phase(theta);
  }
}

double sum_abs2(std::span<const cplx> u) {
  double s = 0.0;
  for (auto z : u) s += abs2(z);
  return s;
}

double weighted_abs2(std::span<const cplx> u, std::span<const double> w) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += w[i] * abs2(u[i]);
  return s;
}

}  // namespace serial

namespace parallel {

void multiply(std::span<cplx> data, std::span<const cplx> factors) {
  const long n = as_long(data.size());
#pragma omp parallel for schedule(static) if (data.size() >= kParallelThreshold)
  for (long i = 0; i < n; ++i) data[i] *= factors[i];
}

void scale(std::span<cplx> data, double s) {
  const long n = as_long(data.size());
#pragma omp parallel for schedule(static) if (data.size() >= kParallelThreshold)
  for (long i = 0; i < n; ++i) data[i] *= s;
}

void nonlinear_phase(std::span<cplx> u, double coeff) {
  const long n = as_long(u.size());
#pragma omp parallel for schedule(static) if (u.size() >= kParallelThreshold)
  for (long i = 0; i < n; ++i) u[i] *= small_unit_phase(coeff * abs2(u[i]));
}

void cubic(std::span<cplx> u) {
  const long n = as_long(u.size());
#pragma omp parallel for schedule(static) if (u.size() >= kParallelThreshold)
  for (long i = 0; i < n; ++i) u[i] *= abs2(u[i]);
}

void local_phase(std::span<cplx> a, std::span<const double> base, double coeff) {
  const long n = as_long(a.size());
#pragma omp parallel for schedule(static) if (a.size() >= kParallelThreshold)
  for (long i = 0; i < n; ++i) a[i] *= unit_phase(base[i] + coeff * abs2(a[i]));
}

void ratio_phase(std::span<cplx> a, std::span<const double> base, std::span<const double> f,
                 double coeff, double floor) {
  const long n = as_long(a.size());
#pragma omp parallel for schedule(static) if (a.size() >= kParallelThreshold)
  for (long i = 0; i < n; ++i) {
    const double amp = std::abs(a[i]);
    const double theta = amp >= floor ? base[i] + coeff * f[i] / amp : base[i];
    a[i] *= unit_phase(theta);
  }
}

namespace {

template <class Term>
double blocked_sum(std::size_t n, Term term) {
  const std::size_t n_blocks = (n + kReductionBlock - 1) / kReductionBlock;
  if (n_blocks <= 1) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += term(i);
    return s;
  }
  std::vector<double> partial(n_blocks, 0.0);
  const long nb = as_long(n_blocks);
#pragma omp parallel for schedule(static) if (n >= kParallelThreshold)
  for (long b = 0; b < nb; ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kReductionBlock;
    const std::size_t hi = std::min(n, lo + kReductionBlock);
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += term(i);
    partial[static_cast<std::size_t>(b)] = s;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace

double sum_abs2(std::span<const cplx> u) {
  return blocked_sum(u.size(), [&](std::size_t i) { return abs2(u[i]); });
}

double weighted_abs2(std::span<const cplx> u, std::span<const double> w) {
  return blocked_sum(u.size(), [&](std::size_t i) { return w[i] * abs2(u[i]); });
}

}  // namespace parallel

}  // namespace qkr::kernels
