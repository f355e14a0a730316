#ifndef FRACKIN_SPECTRAL_HPP
#define FRACKIN_SPECTRAL_HPP

#include <algorithm>
#include <complex>
#include <cstddef>
#include <mutex>
#include <numbers>
#include <span>

#include <fftw3.h>

#include "frackin/error.hpp"

namespace frackin {

namespace detail {

// FFTW's planner is not re-entrant; plan creation and destruction go through
// this lock, execution with new-array functions does not need it.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

} // namespace detail

inline bool is_power_of_two(std::size_t n) noexcept {
  return n >= 2 && (n & (n - 1)) == 0;
}

/// Real-to-complex transform pair of fixed length with owned buffers.
class RealSpectrum {
public:
  explicit RealSpectrum(std::size_t n) : n_(n) {
    if (!is_power_of_two(n)) {
      throw GridError("spectral operators need a power-of-two node count, got " +
                      std::to_string(n));
    }
    real_ = fftw_alloc_real(n_);
    modes_ = fftw_alloc_complex(n_ / 2 + 1);
    std::lock_guard lock(detail::fftw_planner_mutex());
    forward_ = fftw_plan_dft_r2c_1d(static_cast<int>(n_), real_, modes_,
                                    FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(static_cast<int>(n_), modes_, real_,
                                    FFTW_ESTIMATE);
  }

  RealSpectrum(const RealSpectrum&) = delete;
  RealSpectrum& operator=(const RealSpectrum&) = delete;

  ~RealSpectrum() {
    {
      std::lock_guard lock(detail::fftw_planner_mutex());
      fftw_destroy_plan(forward_);
      fftw_destroy_plan(inverse_);
    }
    fftw_free(real_);
    fftw_free(modes_);
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t mode_count() const noexcept { return n_ / 2 + 1; }

  void forward(std::span<const double> in) {
    std::copy(in.begin(), in.end(), real_);
    fftw_execute(forward_);
  }

  /// Inverse transform, normalised so that inverse(forward(v)) == v.
  void inverse(std::span<double> out) {
    fftw_execute(inverse_);
    const double scale = 1.0 / static_cast<double>(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      out[i] = real_[i] * scale;
    }
  }

  std::complex<double> mode(std::size_t j) const noexcept {
    return {modes_[j][0], modes_[j][1]};
  }

  void scale_mode(std::size_t j, double factor) noexcept {
    modes_[j][0] *= factor;
    modes_[j][1] *= factor;
  }

  void set_mode(std::size_t j, std::complex<double> value) noexcept {
    modes_[j][0] = value.real();
    modes_[j][1] = value.imag();
  }

  /// Angular wavenumber of mode j for a period of length `period`.
  double wavenumber(std::size_t j, double period) const noexcept {
    return 2.0 * std::numbers::pi * static_cast<double>(j) / period;
  }

private:
  std::size_t n_;
  double* real_ = nullptr;
  fftw_complex* modes_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

} // namespace frackin

#endif // FRACKIN_SPECTRAL_HPP
