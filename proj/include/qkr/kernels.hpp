#pragma once

// Pointwise and reduction kernels used by the propagators.
//
// Every kernel exists twice: `serial` is the plain reference loop, `parallel`
// is the OpenMP version the propagators call. Pointwise kernels are
// bit-identical between the two. Reductions in `parallel` sum fixed-size
// blocks and then combine the block partials in index order, so the result
// does not depend on the thread count.

#include <cstddef>
#include <span>

#include "qkr/core.hpp"

namespace qkr::kernels {

/// Arrays shorter than this are processed without spawning a team.
inline constexpr std::size_t kParallelThreshold = 1 << 14;
inline constexpr std::size_t kReductionBlock = 1024;

namespace serial {
void multiply(std::span<cplx> data, std::span<const cplx> factors);
void scale(std::span<cplx> data, double s);
/// u ← u · exp(-i·coeff·|u|²)
void nonlinear_phase(std::span<cplx> u, double coeff);
/// u ← |u|²·u
void cubic(std::span<cplx> u);
/// a ← a · exp(-i·(base[k] + coeff·|a|²)); LMA between-kick step.
void local_phase(std::span<cplx> a, std::span<const double> base, double coeff);
/// a ← a · exp(-i·(base[k] + coeff·f[k]/|a|)) where |a| >= floor, else
/// a ← a · exp(-i·base[k]); PAA between-kick step.
void ratio_phase(std::span<cplx> a, std::span<const double> base, std::span<const double> f,
                 double coeff, double floor);
double sum_abs2(std::span<const cplx> u);
double weighted_abs2(std::span<const cplx> u, std::span<const double> w);
}  // namespace serial

namespace parallel {
void multiply(std::span<cplx> data, std::span<const cplx> factors);
void scale(std::span<cplx> data, double s);
void nonlinear_phase(std::span<cplx> u, double coeff);
void cubic(std::span<cplx> u);
void local_phase(std::span<cplx> a, std::span<const double> base, double coeff);
void ratio_phase(std::span<cplx> a, std::span<const double> base, std::span<const double> f,
                 double coeff, double floor);
double sum_abs2(std::span<const cplx> u);
double weighted_abs2(std::span<const cplx> u, std::span<const double> w);
}  // namespace parallel

}  // namespace qkr::kernels
