#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "anx/matrix.hpp"

namespace anx::detail {

double sigmoid(double z) noexcept;
double log1p_exp(double z) noexcept;

/// Unit weights when `w` is empty; otherwise validated copy.
std::vector<double> resolve_weights(std::span<const double> w, std::size_t n);
void check_training_set(const Matrix& x, std::span<const int> y, bool require_both_classes = true);

// Four fixed-order partial sums: vectorizable without reassociation flags.
inline double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double acc[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t n = a.size();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    for (std::size_t u = 0; u < 4; ++u) {
      const double d = a[k + u] - b[k + u];
      acc[u] += d * d;
    }
  }
  for (; k < n; ++k) {
    const double d = a[k] - b[k];
    acc[0] += d * d;
  }
  return (acc[0] + acc[1]) + (acc[2] + acc[3]);
}

inline double rbf(std::span<const double> a, std::span<const double> b, double gamma) noexcept {
  return std::exp(-gamma * squared_distance(a, b));
}

}  // namespace anx::detail
