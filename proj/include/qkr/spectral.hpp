#pragma once

// FFTW-backed transforms between the centred momentum window and an
// oversampled real-space grid. Plans are created with FFTW_ESTIMATE so that
// the chosen algorithm, and therefore every rounding, is reproducible from
// run to run.

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

#include "qkr/core.hpp"

namespace qkr {

class SpectralWorkspace {
 public:
  /// n_x must be >= n_modes.
  SpectralWorkspace(long n_modes, long n_x);
  ~SpectralWorkspace();

  SpectralWorkspace(const SpectralWorkspace&) = delete;
  SpectralWorkspace& operator=(const SpectralWorkspace&) = delete;
  SpectralWorkspace(SpectralWorkspace&&) noexcept;
  SpectralWorkspace& operator=(SpectralWorkspace&&) noexcept;

  long n_modes() const noexcept { return n_modes_; }
  long n_x() const noexcept { return n_x_; }

  /// Working buffer of n_x points, in FFT (wrapped) mode order when holding
  /// momentum data and grid order when holding real-space data.
  std::span<cplx> buffer() noexcept;

  /// Zero the buffer and scatter centred amplitudes into wrapped order.
  void load_modes(std::span<const cplx> centred);
  /// Gather the retained window from wrapped order, multiplying by `scale`.
  void store_modes(std::span<cplx> centred, double scale = 1.0) const;

  /// In-place unnormalised transforms:
  /// to_real:     u_j = Σ_k c_k e^{+2πijk/n_x}
  /// to_momentum: c_k = Σ_j u_j e^{-2πijk/n_x}
  void to_real();
  void to_momentum();

  /// Wrapped buffer index of mode n (n may lie outside the retained window).
  std::size_t wrapped_index(long n) const noexcept {
    return static_cast<std::size_t>(((n % n_x_) + n_x_) % n_x_);
  }

 private:
  struct Impl;
  long n_modes_ = 0;
  long n_x_ = 0;
  std::unique_ptr<Impl> impl_;
};

}  // namespace qkr
