#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace adcorpus::fft {

/// Smallest power of two >= n (1 for n == 0).
std::size_t next_pow2(std::size_t n) noexcept;

/// In-place iterative radix-2 transform. data.size() must be a power of two.
/// The inverse is unscaled on the way in and divided by N on the way out, so
/// inverse(forward(x)) == x.
void forward(std::span<std::complex<double>> data);
void inverse(std::span<std::complex<double>> data);

/// Zero-pads a real signal to n (power of two) and transforms it.
std::vector<std::complex<double>> real_forward(std::span<const double> signal, std::size_t n);

}  // namespace adcorpus::fft
