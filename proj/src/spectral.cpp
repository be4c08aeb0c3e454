#include "qkr/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <mutex>

#include "qkr/error.hpp"

namespace qkr {

namespace {
// fftw_plan_* is not thread-safe; fftw_execute_* on distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct SpectralWorkspace::Impl {
  fftw_complex* data = nullptr;
  fftw_plan backward = nullptr;
  fftw_plan forward = nullptr;

  explicit Impl(long n_x) {
    std::lock_guard lock(planner_mutex());
    data = fftw_alloc_complex(static_cast<std::size_t>(n_x));
    if (data == nullptr) throw Error("fftw_alloc_complex failed");
    const int n = static_cast<int>(n_x);
    backward = fftw_plan_dft_1d(n, data, data, FFTW_BACKWARD, FFTW_ESTIMATE);
    forward = fftw_plan_dft_1d(n, data, data, FFTW_FORWARD, FFTW_ESTIMATE);
    if (backward == nullptr || forward == nullptr) throw Error("FFTW planning failed");
  }

  ~Impl() {
    std::lock_guard lock(planner_mutex());
    if (backward) fftw_destroy_plan(backward);
    if (forward) fftw_destroy_plan(forward);
    if (data) fftw_free(data);
  }
};

SpectralWorkspace::SpectralWorkspace(long n_modes, long n_x)
    : n_modes_(n_modes), n_x_(n_x) {
  if (n_modes <= 0 || n_x < n_modes) {
    throw ValidationError("n_x", "real-space grid smaller than the mode count would alias");
  }
  impl_ = std::make_unique<Impl>(n_x);
  std::fill(buffer().begin(), buffer().end(), cplx{});
}

SpectralWorkspace::~SpectralWorkspace() = default;
SpectralWorkspace::SpectralWorkspace(SpectralWorkspace&&) noexcept = default;
SpectralWorkspace& SpectralWorkspace::operator=(SpectralWorkspace&&) noexcept = default;

std::span<cplx> SpectralWorkspace::buffer() noexcept {
  // fftw_complex is layout-compatible with std::complex<double>.
  return {reinterpret_cast<cplx*>(impl_->data), static_cast<std::size_t>(n_x_)};
}

void SpectralWorkspace::load_modes(std::span<const cplx> centred) {
  auto buf = buffer();
  std::fill(buf.begin(), buf.end(), cplx{});
  const long half = n_modes_ / 2;
  for (long i = 0; i < n_modes_; ++i) {
    buf[wrapped_index(i - half)] = centred[static_cast<std::size_t>(i)];
  }
}

void SpectralWorkspace::store_modes(std::span<cplx> centred, double scale) const {
  const cplx* buf = reinterpret_cast<const cplx*>(impl_->data);
  const long half = n_modes_ / 2;
  for (long i = 0; i < n_modes_; ++i) {
    centred[static_cast<std::size_t>(i)] = scale * buf[wrapped_index(i - half)];
  }
}

void SpectralWorkspace::to_real() { fftw_execute(impl_->backward); }

void SpectralWorkspace::to_momentum() { fftw_execute(impl_->forward); }

}  // namespace qkr
