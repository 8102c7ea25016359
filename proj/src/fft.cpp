#include "anx/fft.hpp"

#include <cassert>
#include <cmath>
#include <numbers>
#include <utility>

namespace anx {

std::size_t next_pow2(std::size_t n) noexcept {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void fft_inplace(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  assert((n & (n - 1)) == 0);
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  // Twiddles for the full size; stage `len` uses every (n / len)-th entry.
  std::vector<std::complex<double>> tw(n / 2);
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t k = 0; k < tw.size(); ++k) {
    tw[k] = std::polar(1.0, sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = n / len;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + half] * tw[k * stride];
        a[i + k] = u + v;
        a[i + k + half] = u - v;
      }
    }
  }
  if (inverse) {
    for (auto& z : a) z /= static_cast<double>(n);
  }
}

std::vector<double> power_spectrum(std::span<const double> x, std::size_t nfft) {
  std::vector<std::complex<double>> buf(nfft);
  for (std::size_t i = 0; i < x.size() && i < nfft; ++i) buf[i] = x[i];
  fft_inplace(buf);
  std::vector<double> p(nfft / 2 + 1);
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = std::norm(buf[k]);
  return p;
}

std::vector<double> autocorrelation(std::span<const double> x, std::size_t max_lag) {
  const std::size_t nfft = next_pow2(x.size() + max_lag + 1);
  std::vector<std::complex<double>> buf(nfft);
  for (std::size_t i = 0; i < x.size(); ++i) buf[i] = x[i];
  fft_inplace(buf);
  for (auto& z : buf) z = std::norm(z);
  fft_inplace(buf, true);
  std::vector<double> r(max_lag + 1);
  for (std::size_t k = 0; k <= max_lag; ++k) r[k] = buf[k].real();
  return r;
}

}  // namespace anx
