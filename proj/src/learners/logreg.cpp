#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "anx/error.hpp"
#include "anx/learners.hpp"
#include "learners/internal.hpp"

namespace anx {

namespace {

double soft_threshold(double v, double t) noexcept {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

double l1_norm(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0, [](double a, double b) { return a + std::abs(b); });
}

double smooth_loss(const Matrix& xs, std::span<const int> y, std::span<const double> w,
                   std::span<const double> beta, double b) {
  double acc = 0.0, wsum = 0.0;
  for (std::size_t i = 0; i < xs.rows(); ++i) {
    const auto row = xs.row(i);
    const double z = std::inner_product(row.begin(), row.end(), beta.begin(), b);
    const double wi = w.empty() ? 1.0 : w[i];
    acc += wi * (detail::log1p_exp(z) - y[i] * z);
    wsum += wi;
  }
  return acc / wsum;
}

}  // namespace

LossGrad logreg_loss_grad(const Matrix& xs, std::span<const int> y, std::span<const double> w,
                          std::span<const double> beta, double intercept) {
  LossGrad out;
  out.grad_beta.assign(xs.cols(), 0.0);
  double wsum = 0.0;
  for (std::size_t i = 0; i < xs.rows(); ++i) {
    const auto row = xs.row(i);
    const double z = std::inner_product(row.begin(), row.end(), beta.begin(), intercept);
    const double wi = w.empty() ? 1.0 : w[i];
    const double resid = wi * (detail::sigmoid(z) - y[i]);
    out.loss += wi * (detail::log1p_exp(z) - y[i] * z);
    for (std::size_t j = 0; j < row.size(); ++j) out.grad_beta[j] += resid * row[j];
    out.grad_intercept += resid;
    wsum += wi;
  }
  out.loss /= wsum;
  for (double& g : out.grad_beta) g /= wsum;
  out.grad_intercept /= wsum;
  return out;
}

double logreg_objective(const Matrix& xs, std::span<const int> y, std::span<const double> w,
                        std::span<const double> beta, double intercept, double lambda) {
  return smooth_loss(xs, y, w, beta, intercept) + lambda * l1_norm(beta);
}

double logreg_lambda_max(const Matrix& xs, std::span<const int> y, std::span<const double> w) {
  double wsum = 0.0, wy = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    wsum += wi;
    wy += wi * y[i];
  }
  const double ybar = wy / wsum;
  double best = 0.0;
  for (std::size_t j = 0; j < xs.cols(); ++j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < xs.rows(); ++i) acc += (w.empty() ? 1.0 : w[i]) * xs(i, j) * (y[i] - ybar);
    best = std::max(best, std::abs(acc));
  }
  return best / wsum;
}

TrainedModel fit_logreg_l1(const Matrix& x, std::span<const int> y, std::span<const double> w_in,
                           const FitConfig& cfg) {
  detail::check_training_set(x, y);
  const auto w = detail::resolve_weights(w_in, x.rows());

  TrainedModel model;
  model.kind = ModelKind::logreg_l1;
  model.config = cfg;
  model.scaler = Scaler::fit(x);
  const Matrix xs = model.scaler.transform(x);
  const std::size_t d = xs.cols();

  // Start from beta = 0 with the intercept at its optimum for that beta.
  const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
  double wy = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) wy += w[i] * y[i];
  const double ybar = std::clamp(wy / wsum, 1e-6, 1.0 - 1e-6);

  std::vector<double> beta(d, 0.0), beta_next(d, 0.0);
  double b = std::log(ybar / (1.0 - ybar));
  double objective = logreg_objective(xs, y, w, beta, b, cfg.lambda);
  double step = 1.0;
  int iter = 0;
  // beta = 0 is already optimal; skip iterations that would only add rounding noise
  const bool zero_optimal = cfg.lambda >= logreg_lambda_max(xs, y, w) * (1.0 - 1e-12);

  for (; !zero_optimal && iter < cfg.max_iter; ++iter) {
    const LossGrad lg = logreg_loss_grad(xs, y, w, beta, b);
    double b_next = b;
    double loss_next = lg.loss;
    // Backtracking on the quadratic upper bound of the smooth part.
    while (true) {
      for (std::size_t j = 0; j < d; ++j) {
        beta_next[j] = model.scaler.constant[j]
                           ? 0.0
                           : soft_threshold(beta[j] - step * lg.grad_beta[j], step * cfg.lambda);
      }
      b_next = b - step * lg.grad_intercept;
      loss_next = smooth_loss(xs, y, w, beta_next, b_next);
      double lin = lg.grad_intercept * (b_next - b);
      double quad = (b_next - b) * (b_next - b);
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = beta_next[j] - beta[j];
        lin += lg.grad_beta[j] * diff;
        quad += diff * diff;
      }
      if (loss_next <= lg.loss + lin + quad / (2.0 * step) + 1e-15 || step < 1e-12) break;
      step *= 0.5;
    }
    const double next_objective = loss_next + cfg.lambda * l1_norm(beta_next);
    const double decrease = objective - next_objective;
    if (decrease < 0.0) break;  // rounding floor reached
    beta.swap(beta_next);
    b = b_next;
    objective = next_objective;
    if (decrease < cfg.tol) {
      ++iter;
      break;
    }
  }
  if (!std::isfinite(objective)) fail(Errc::NumericFailure, "logistic regression diverged");

  LogRegParams p;
  p.beta = std::move(beta);
  p.intercept = b;
  p.iterations = iter;
  p.objective = objective;
  model.params = std::move(p);
  return model;
}

}  // namespace anx
