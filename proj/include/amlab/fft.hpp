#pragma once

// FFTW-backed transforms and the zero-padded linear convolution engine used
// by every convolution operator.

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <tuple>
#include <utility>
#include <vector>

#include "amlab/grid.hpp"

namespace amlab {

/// Unnormalized in-place complex DFT of a square array of side `side`.
/// sign = -1 is the forward transform. Plans are created once per shape and
/// shared; fftw_execute_dft on a shared plan is thread-safe.
inline void fft_inplace(std::vector<Complex>& data, int dim, std::size_t side, int sign) {
  static std::mutex mutex;
  static std::map<std::tuple<int, std::size_t, int>, fftw_plan> plans;
  const std::size_t total = dim == 1 ? side : side * side;
  require(data.size() == total, ErrorKind::invalid_argument, "transform buffer has the wrong size");
  fftw_plan plan = nullptr;
  {
    std::lock_guard lock(mutex);
    auto& slot = plans[{dim, side, sign}];
    if (slot == nullptr) {
      auto* scratch = fftw_alloc_complex(total);
      const int n = static_cast<int>(side);
      const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
      slot = dim == 1 ? fftw_plan_dft_1d(n, scratch, scratch, sign, flags)
                      : fftw_plan_dft_2d(n, n, scratch, scratch, sign, flags);
      fftw_free(scratch);
    }
    plan = slot;
  }
  auto* raw = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan, raw, raw);
}

/// Linear convolution on a grid by zero padding to 2N per axis. A kernel
/// sampled at every offset d with |d_a| < N occupies padded index d mod 2N,
/// so no wrap-around term ever reaches an output cell.
class Convolver {
 public:
  explicit Convolver(const Grid& grid) : grid_(grid), side_(2 * grid.points()) {}

  const Grid& grid() const noexcept { return grid_; }
  std::size_t side() const noexcept { return side_; }
  std::size_t padded_size() const noexcept { return grid_.dim() == 1 ? side_ : side_ * side_; }

  /// Spectrum of the zero-padded samples.
  template <class T>
  std::vector<Complex> spectrum(const BasicGridFunction<T>& f) const {
    require(f.grid() == grid_, ErrorKind::grid_mismatch, "convolution input lives on another grid");
    std::vector<Complex> buf(padded_size());
    const std::size_t n = grid_.points();
    if (grid_.dim() == 1) {
      for (std::size_t i = 0; i < n; ++i) buf[i] = f[i];
    } else {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) buf[i * side_ + j] = f[grid_.flat(i, j)];
    }
    fft_inplace(buf, grid_.dim(), side_, FFTW_FORWARD);
    return buf;
  }

  /// Spectrum of the kernel k(d1, d2) given on integer offsets (d2 = 0 in 1D).
  template <class Kernel>
  std::vector<Complex> kernel_spectrum(Kernel&& k) const {
    std::vector<Complex> buf(padded_size());
    const auto n = static_cast<std::ptrdiff_t>(grid_.points());
    auto slot = [&](std::ptrdiff_t d) { return static_cast<std::size_t>(d < 0 ? d + 2 * n : d); };
    if (grid_.dim() == 1) {
      for (std::ptrdiff_t d = -(n - 1); d < n; ++d) buf[slot(d)] = k(d, std::ptrdiff_t{0});
    } else {
      for (std::ptrdiff_t a = -(n - 1); a < n; ++a)
        for (std::ptrdiff_t b = -(n - 1); b < n; ++b) buf[slot(a) * side_ + slot(b)] = k(a, b);
    }
    fft_inplace(buf, grid_.dim(), side_, FFTW_FORWARD);
    return buf;
  }

  /// Inverse transform of a product spectrum, cropped to the grid and scaled
  /// by h^n so that the result is h^n * sum_j k(i - j) f_j.
  ComplexGridFunction inverse(std::vector<Complex> buf) const {
    require(buf.size() == padded_size(), ErrorKind::invalid_argument, "spectrum has the wrong size");
    fft_inplace(buf, grid_.dim(), side_, FFTW_BACKWARD);
    const double scale = grid_.cell_volume() / static_cast<double>(padded_size());
    const std::size_t n = grid_.points();
    std::vector<Complex> out(grid_.size());
    if (grid_.dim() == 1) {
      for (std::size_t i = 0; i < n; ++i) out[i] = buf[i] * scale;
    } else {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out[grid_.flat(i, j)] = buf[i * side_ + j] * scale;
    }
    return ComplexGridFunction(grid_, std::move(out));
  }

  static std::vector<Complex> multiply(const std::vector<Complex>& a, const std::vector<Complex>& b) {
    std::vector<Complex> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
  }

 private:
  Grid grid_;
  std::size_t side_;
};

}  // namespace amlab
