#include "adcorpus/fft.hpp"

#include <bit>
#include <cmath>
#include <numbers>

#include "adcorpus/error.hpp"

namespace adcorpus::fft {
namespace {

void transform(std::span<std::complex<double>> a, bool invert) {
  const std::size_t n = a.size();
  if (n <= 1) return;
  if (!std::has_single_bit(n)) fail(ErrorKind::BadParam, "fft length must be a power of two");

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }

  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * std::numbers::pi / static_cast<double>(len) * (invert ? 1.0 : -1.0);
    const std::size_t half = len / 2;
    // Twiddles computed directly per index; recurrence multiplication drifts
    // too much for the 1e-6 agreement needed by the correlation checks.
    std::vector<std::complex<double>> tw(half);
    for (std::size_t k = 0; k < half; ++k) tw[k] = std::polar(1.0, ang * static_cast<double>(k));
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const auto u = a[i + k];
        const auto v = a[i + k + half] * tw[k];
        a[i + k] = u + v;
        a[i + k + half] = u - v;
      }
    }
  }

  if (invert) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& x : a) x *= scale;
  }
}

}  // namespace

std::size_t next_pow2(std::size_t n) noexcept { return n <= 1 ? 1 : std::bit_ceil(n); }

void forward(std::span<std::complex<double>> data) { transform(data, false); }
void inverse(std::span<std::complex<double>> data) { transform(data, true); }

std::vector<std::complex<double>> real_forward(std::span<const double> signal, std::size_t n) {
  std::vector<std::complex<double>> buf(n);
  for (std::size_t i = 0; i < signal.size() && i < n; ++i) buf[i] = signal[i];
  forward(buf);
  return buf;
}

}  // namespace adcorpus::fft
