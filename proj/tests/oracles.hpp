#pragma once

// Reference implementations used only by tests. Each is the textbook formula,
// written without any library helper it checks.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

namespace oracle {

inline double dft_power(std::span<const double> x, std::size_t k) {
  std::complex<double> acc = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) {
    acc += x[t] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * t) / n);
  }
  return std::norm(acc);
}

/// Frequency of the strongest DFT bin (excluding DC), in Hz.
inline double dft_peak_hz(std::span<const double> x, int rate) {
  std::size_t best = 1;
  double best_p = -1.0;
  for (std::size_t k = 1; k < x.size() / 2; ++k) {
    const double p = dft_power(x, k);
    if (p > best_p) {
      best_p = p;
      best = k;
    }
  }
  return static_cast<double>(best) * rate / static_cast<double>(x.size());
}

/// O(n^2) pair count with half credit for ties.
inline double pair_auroc(std::span<const double> s, std::span<const int> y) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      pairs += 1.0;
      if (s[i] > s[j]) wins += 1.0;
      else if (s[i] == s[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// (1 / sum w) sum w_i logloss + lambda |beta|_1 on an already-standardized matrix (row-major).
inline double logreg_objective(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                               const std::vector<double>& w, const std::vector<double>& beta, double b,
                               double lambda) {
  double acc = 0.0, wsum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double z = b;
    for (std::size_t j = 0; j < beta.size(); ++j) z += beta[j] * x[i][j];
    const double p = sigmoid(z);
    const double wi = w.empty() ? 1.0 : w[i];
    acc += wi * (y[i] == 1 ? -std::log(p) : -std::log(1.0 - p));
    wsum += wi;
  }
  double l1 = 0.0;
  for (double v : beta) l1 += std::abs(v);
  return acc / wsum + lambda * l1;
}

/// Column-standardize with population std (constant columns keep std 1).
inline std::vector<std::vector<double>> standardize(const std::vector<std::vector<double>>& x) {
  const std::size_t n = x.size(), d = x.front().size();
  auto out = x;
  for (std::size_t j = 0; j < d; ++j) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m += x[i][j];
    m /= static_cast<double>(n);
    double v = 0.0;
    for (std::size_t i = 0; i < n; ++i) v += (x[i][j] - m) * (x[i][j] - m);
    double sd = std::sqrt(v / static_cast<double>(n));
    if (sd <= 1e-12 * std::max(1.0, std::abs(m))) sd = 1.0;
    for (std::size_t i = 0; i < n; ++i) out[i][j] = (x[i][j] - m) / sd;
  }
  return out;
}

inline double rbf(const std::vector<double>& a, const std::vector<double>& b, double gamma) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d += (a[k] - b[k]) * (a[k] - b[k]);
  return std::exp(-gamma * d);
}

inline std::vector<std::vector<double>> random_matrix(std::size_t n, std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> x(n, std::vector<double>(d));
  for (auto& row : x) {
    for (auto& v : row) v = g(rng);
  }
  return x;
}

/// Linear-interpolated percentile at rank q (n - 1) of a copy.
inline double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double r = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(r));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (r - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace oracle
