#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace anx {

/// Smallest power of two >= n (1 for n == 0).
std::size_t next_pow2(std::size_t n) noexcept;

/// In-place iterative radix-2 FFT. Size must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& data, bool inverse = false);

/// |X[k]|^2 for k = 0..nfft/2 of the zero-padded real input.
std::vector<double> power_spectrum(std::span<const double> x, std::size_t nfft);

/// Linear (non-circular) autocorrelation sum_{n} x[n] x[n+lag] for lag = 0..max_lag.
std::vector<double> autocorrelation(std::span<const double> x, std::size_t max_lag);

}  // namespace anx
