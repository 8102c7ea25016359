#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "anx/error.hpp"
#include "anx/learners.hpp"
#include "learners/internal.hpp"

namespace anx {

namespace {

constexpr double kTau = 1e-12;

// Full symmetric RBF Gram matrix; desk-scale problems fit in memory.
std::vector<double> gram_matrix(const Matrix& xs, double gamma) {
  const std::size_t n = xs.rows();
  std::vector<double> k(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    k[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = detail::rbf(xs.row(i), xs.row(j), gamma);
      k[i * n + j] = v;
      k[j * n + i] = v;
    }
  }
  return k;
}

}  // namespace

double default_gamma(const Matrix& xs) {
  if (xs.rows() == 0 || xs.cols() == 0) return 1.0;
  const double n = static_cast<double>(xs.rows());
  double total_var = 0.0;
  for (std::size_t j = 0; j < xs.cols(); ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < xs.rows(); ++i) mean += xs(i, j);
    mean /= n;
    double ss = 0.0;
    for (std::size_t i = 0; i < xs.rows(); ++i) ss += (xs(i, j) - mean) * (xs(i, j) - mean);
    total_var += ss / n;
  }
  // d * mean variance == sum of variances
  return total_var > 0.0 ? 1.0 / total_var : 1.0;
}

TrainedModel fit_svm_rbf(const Matrix& x, std::span<const int> y01, std::span<const double> w_in,
                         const FitConfig& cfg) {
  detail::check_training_set(x, y01);
  const auto w = detail::resolve_weights(w_in, x.rows());

  TrainedModel model;
  model.kind = ModelKind::svm_rbf;
  model.config = cfg;
  model.scaler = Scaler::fit(x);
  const Matrix xs = model.scaler.transform(x);
  const std::size_t n = xs.rows();
  const double gamma = cfg.gamma.value_or(default_gamma(xs));
  const auto kmat = gram_matrix(xs, gamma);
  auto K = [&](std::size_t i, std::size_t j) { return kmat[i * n + j]; };

  std::vector<double> yy(n), box(n), alpha(n, 0.0), grad(n, -1.0);
  for (std::size_t i = 0; i < n; ++i) {
    yy[i] = y01[i] == 1 ? 1.0 : -1.0;
    box[i] = cfg.C * w[i];
  }
  auto in_up = [&](std::size_t t) { return yy[t] > 0 ? alpha[t] < box[t] : alpha[t] > 0.0; };
  auto in_low = [&](std::size_t t) { return yy[t] > 0 ? alpha[t] > 0.0 : alpha[t] < box[t]; };

  const long max_iter = std::max<long>(10'000'000L, 100L * static_cast<long>(n));
  long iter = 0;
  for (; iter < max_iter; ++iter) {
    // Working set by second-order selection (maximal violating pair refinement).
    double gmax = -std::numeric_limits<double>::infinity();
    std::ptrdiff_t i = -1;
    for (std::size_t t = 0; t < n; ++t) {
      if (in_up(t) && -yy[t] * grad[t] >= gmax) {
        gmax = -yy[t] * grad[t];
        i = static_cast<std::ptrdiff_t>(t);
      }
    }
    double gmax2 = -std::numeric_limits<double>::infinity();
    double obj_min = std::numeric_limits<double>::infinity();
    std::ptrdiff_t j = -1;
    for (std::size_t t = 0; t < n; ++t) {
      if (!in_low(t)) continue;
      gmax2 = std::max(gmax2, yy[t] * grad[t]);
      if (i < 0) continue;
      const double diff = gmax + yy[t] * grad[t];
      if (diff > 0.0) {
        const auto ii = static_cast<std::size_t>(i);
        double quad = K(ii, ii) + K(t, t) - 2.0 * K(ii, t);
        if (quad <= 0.0) quad = kTau;
        const double obj = -(diff * diff) / quad;
        if (obj <= obj_min) {
          obj_min = obj;
          j = static_cast<std::ptrdiff_t>(t);
        }
      }
    }
    if (i < 0 || j < 0 || gmax + gmax2 < cfg.kkt_tol) break;

    const auto a = static_cast<std::size_t>(i);
    const auto b = static_cast<std::size_t>(j);
    const double ci = box[a], cj = box[b];
    const double old_ai = alpha[a], old_aj = alpha[b];
    double quad = K(a, a) + K(b, b) - 2.0 * K(a, b);
    if (quad <= 0.0) quad = kTau;

    double ai = old_ai, aj = old_aj;
    if (yy[a] != yy[b]) {
      const double delta = (-grad[a] - grad[b]) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0.0) {
        if (aj < 0.0) { aj = 0.0; ai = diff; }
      } else {
        if (ai < 0.0) { ai = 0.0; aj = -diff; }
      }
      if (diff > ci - cj) {
        if (ai > ci) { ai = ci; aj = ci - diff; }
      } else {
        if (aj > cj) { aj = cj; ai = cj + diff; }
      }
    } else {
      const double delta = (grad[a] - grad[b]) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > ci) {
        if (ai > ci) { ai = ci; aj = sum - ci; }
      } else {
        if (aj < 0.0) { aj = 0.0; ai = sum; }
      }
      if (sum > cj) {
        if (aj > cj) { aj = cj; ai = sum - cj; }
      } else {
        if (ai < 0.0) { ai = 0.0; aj = sum; }
      }
    }
    alpha[a] = std::clamp(ai, 0.0, ci);
    alpha[b] = std::clamp(aj, 0.0, cj);

    const double dai = alpha[a] - old_ai;
    const double daj = alpha[b] - old_aj;
    for (std::size_t t = 0; t < n; ++t) {
      grad[t] += yy[t] * (yy[a] * K(t, a) * dai + yy[b] * K(t, b) * daj);
    }
  }

  // Bias from free vectors when any, else the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = yy[t] * grad[t];
    if (alpha[t] >= box[t]) {
      if (yy[t] < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0.0) {
      if (yy[t] > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
  if (!std::isfinite(rho)) fail(Errc::NumericFailure, "SVM bias is not finite");

  SvmParams p;
  p.gamma = gamma;
  p.C = cfg.C;
  p.bias = -rho;
  p.iterations = static_cast<int>(iter);
  p.support = Matrix(0, xs.cols());
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] > 0.0) {
      p.support.push_row(xs.row(t));
      p.coef.push_back(alpha[t] * yy[t]);
    }
  }
  p.alpha = std::move(alpha);
  model.params = std::move(p);
  return model;
}

}  // namespace anx
