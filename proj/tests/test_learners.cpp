#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>

#include "anx/error.hpp"
#include "anx/learners.hpp"
#include "anx/metrics.hpp"
#include "oracles.hpp"

using namespace anx;
using Rows = std::vector<std::vector<double>>;

namespace {

Matrix to_matrix(const Rows& rows) {
  Matrix m(0, rows.front().size());
  for (const auto& r : rows) m.push_row(r);
  return m;
}

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an anx::Error");
  return Errc::InvalidInput;
}

// Labels from a noisy linear rule, both classes guaranteed.
std::vector<int> noisy_labels(const Rows& x, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<int> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i][0] - 0.5 * x[i][1] + g(rng) > 0.0 ? 1 : 0;
  y[0] = 0;
  y[1] = 1;
  return y;
}

std::vector<double> random_weights(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> w(n);
  for (auto& v : w) v = u(rng);
  return w;
}

double accuracy(std::span<const double> scores, std::span<const int> y, double threshold) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < y.size(); ++i) ok += (scores[i] >= threshold ? 1 : 0) == y[i];
  return static_cast<double>(ok) / static_cast<double>(y.size());
}

std::vector<double> column_means(const Rows& x) {
  std::vector<double> m(x.front().size(), 0.0);
  for (const auto& r : x) {
    for (std::size_t j = 0; j < m.size(); ++j) m[j] += r[j];
  }
  for (auto& v : m) v /= static_cast<double>(x.size());
  return m;
}

}  // namespace

TEST_CASE("scaler matches population standardization") {
  std::mt19937_64 rng(1);
  auto x = oracle::random_matrix(30, 4, rng);
  for (auto& r : x) r[2] = 3.5;  // constant column
  const Scaler s = Scaler::fit(to_matrix(x));
  CHECK(s.constant[2]);
  CHECK(s.std[2] == 1.0);
  const auto expect = oracle::standardize(x);
  const Matrix got = s.transform(to_matrix(x));
  for (std::size_t i = 0; i < 30; ++i) {
    for (std::size_t j = 0; j < 4; ++j) CHECK(got(i, j) == doctest::Approx(expect[i][j]).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("logreg gradient matches central differences") {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> g;
  const double h = 1e-5;
  for (int trial = 0; trial < 20; ++trial) {
    const auto raw = oracle::random_matrix(20, 5, rng);
    const auto y = noisy_labels(raw, rng);
    const auto w = trial % 2 ? random_weights(20, rng) : std::vector<double>{};
    const auto xs = oracle::standardize(raw);
    const Matrix xm = to_matrix(xs);
    std::vector<double> beta(5);
    for (auto& b : beta) b = 0.7 * g(rng);
    const double b0 = 0.3 * g(rng);

    const LossGrad lg = logreg_loss_grad(xm, y, w, beta, b0);
    CHECK(lg.loss == doctest::Approx(oracle::logreg_objective(xs, y, w, beta, b0, 0.0)).epsilon(1e-12));

    double worst = 0.0;
    for (std::size_t j = 0; j <= 5; ++j) {
      auto bp = beta, bm = beta;
      double ip = b0, im = b0;
      if (j < 5) {
        bp[j] += h;
        bm[j] -= h;
      } else {
        ip += h;
        im -= h;
      }
      const double fd = (oracle::logreg_objective(xs, y, w, bp, ip, 0.0) - oracle::logreg_objective(xs, y, w, bm, im, 0.0)) / (2 * h);
      const double an = j < 5 ? lg.grad_beta[j] : lg.grad_intercept;
      worst = std::max(worst, std::abs(an - fd) / std::max(std::abs(fd), 1e-3));
    }
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("lambda_max gives the all-zero solution") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const auto raw = oracle::random_matrix(40, 6, rng);
    const auto y = noisy_labels(raw, rng);
    const auto w = random_weights(40, rng);
    const auto xs = oracle::standardize(raw);

    double wsum = 0.0, wy = 0.0;
    for (std::size_t i = 0; i < 40; ++i) {
      wsum += w[i];
      wy += w[i] * y[i];
    }
    const double ybar = wy / wsum;
    double lmax = 0.0;
    for (std::size_t j = 0; j < 6; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < 40; ++i) s += w[i] * xs[i][j] * (y[i] - ybar);
      lmax = std::max(lmax, std::abs(s) / wsum);
    }
    CHECK(logreg_lambda_max(to_matrix(xs), y, w) == doctest::Approx(lmax).epsilon(1e-12));

    for (double factor : {1.0, 1.5}) {
      FitConfig cfg;
      cfg.lambda = factor * lmax;
      const auto m = fit_logreg_l1(to_matrix(raw), y, w, cfg);
      for (double b : std::get<LogRegParams>(m.params).beta) CHECK(b == 0.0);
    }
    FitConfig below;
    below.lambda = 0.5 * lmax;
    const auto m = fit_logreg_l1(to_matrix(raw), y, w, below);
    const auto& beta = std::get<LogRegParams>(m.params).beta;
    CHECK(std::any_of(beta.begin(), beta.end(), [](double b) { return b != 0.0; }));
  }
}

TEST_CASE("logreg fit satisfies the L1 optimality conditions") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 5; ++trial) {
    const auto raw = oracle::random_matrix(60, 5, rng);
    const auto y = noisy_labels(raw, rng);
    FitConfig cfg;
    cfg.lambda = 0.02;
    const auto m = fit_logreg_l1(to_matrix(raw), y, {}, cfg);
    const auto& p = std::get<LogRegParams>(m.params);
    const auto xs = oracle::standardize(raw);
    const double h = 1e-6;
    for (std::size_t j = 0; j < 5; ++j) {
      auto bp = p.beta, bm = p.beta;
      bp[j] += h;
      bm[j] -= h;
      const double gj = (oracle::logreg_objective(xs, y, {}, bp, p.intercept, 0.0) -
                         oracle::logreg_objective(xs, y, {}, bm, p.intercept, 0.0)) / (2 * h);
      if (p.beta[j] == 0.0) CHECK(std::abs(gj) <= cfg.lambda + 1e-4);
      else CHECK(std::abs(gj + cfg.lambda * (p.beta[j] > 0 ? 1.0 : -1.0)) <= 1e-4);
    }
    CHECK(p.objective == doctest::Approx(oracle::logreg_objective(xs, y, {}, p.beta, p.intercept, cfg.lambda)).epsilon(1e-10));
  }
}

TEST_CASE("logreg on separable 1-D data and degenerate inputs") {
  Rows x;
  std::vector<int> y;
  for (int k = 0; k < 10; ++k) {
    x.push_back({-1.0});
    y.push_back(0);
    x.push_back({1.0});
    y.push_back(1);
  }
  FitConfig cfg;
  cfg.lambda = 1e-6;
  const auto m = fit_logreg_l1(to_matrix(x), y, {}, cfg);
  CHECK(accuracy(predict_scores(m, to_matrix(x)), y, 0.5) == 1.0);
  CHECK(std::get<LogRegParams>(m.params).beta[0] > 0.0);

  // monotone in x
  const auto s = predict_scores(m, to_matrix(Rows{{-2.0}, {-0.1}, {0.3}, {5.0}}));
  CHECK(std::is_sorted(s.begin(), s.end()));

  TrainedModel zero = m;
  std::get<LogRegParams>(zero.params).beta = {0.0};
  std::get<LogRegParams>(zero.params).intercept = 0.0;
  for (double v : predict_scores(zero, to_matrix(Rows{{-3.0}, {0.0}, {8.0}}))) CHECK(v == 0.5);

  CHECK(code_of([&] { fit_logreg_l1(to_matrix(x), std::vector<int>(20, 1), {}, cfg); }) == Errc::SingleClass);
  std::vector<double> w(20, 1.0);
  w[3] = 0.0;
  CHECK(code_of([&] { fit_logreg_l1(to_matrix(x), y, w, cfg); }) == Errc::NonpositiveWeight);
  CHECK(code_of([&] { predict_scores(m, to_matrix(Rows{{1.0, 2.0}})); }) == Errc::DimensionMismatch);

  // a constant column keeps a zero coefficient
  Rows xc = x;
  for (auto& r : xc) r.push_back(4.0);
  const auto mc = fit_logreg_l1(to_matrix(xc), y, {}, cfg);
  CHECK(std::get<LogRegParams>(mc.params).beta[1] == 0.0);
}

TEST_CASE("duplicating a sample equals doubling its weight") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  const auto x = oracle::standardize(oracle::random_matrix(25, 4, rng));
  const auto y = noisy_labels(x, rng);
  std::vector<double> beta(4);
  for (auto& b : beta) b = g(rng);
  const double b0 = 0.2;

  for (std::size_t k : {0u, 7u, 24u}) {
    Rows xd = x;
    std::vector<int> yd = y;
    xd.push_back(x[k]);
    yd.push_back(y[k]);
    std::vector<double> w(25, 1.0);
    w[k] = 2.0;
    const double dup = logreg_objective(to_matrix(xd), yd, {}, beta, b0, 0.01);
    const double dbl = logreg_objective(to_matrix(x), y, w, beta, b0, 0.01);
    CHECK(std::abs(dup - dbl) <= 1e-10);
  }
}

TEST_CASE("standardization invariance of logreg") {
  std::mt19937_64 rng(12);
  auto x = oracle::random_matrix(50, 3, rng);
  const auto y = noisy_labels(x, rng);
  FitConfig cfg;
  cfg.lambda = 1e-3;
  const auto base = fit_logreg_l1(to_matrix(x), y, {}, cfg);
  const auto s0 = predict_scores(base, to_matrix(x));

  Rows shifted = x;
  for (auto& r : shifted) {
    r[0] = 250.0 * r[0] - 40.0;
    r[2] = 0.001 * r[2] + 7.0;
  }
  const auto moved = fit_logreg_l1(to_matrix(shifted), y, {}, cfg);
  const auto s1 = predict_scores(moved, to_matrix(shifted));
  CHECK(std::abs(auroc(s0, y) - auroc(s1, y)) <= 1e-6);
  CHECK(std::abs(accuracy(s0, y, 0.5) - accuracy(s1, y, 0.5)) <= 1e-6);
  for (std::size_t i = 0; i < s0.size(); ++i) CHECK(std::abs(s0[i] - s1[i]) <= 1e-6);
}

TEST_CASE("SVM KKT conditions and dual feasibility") {
  std::mt19937_64 rng(2026);
  std::uniform_int_distribution<std::size_t> size(10, 60);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = size(rng);
    const auto raw = oracle::random_matrix(n, 3, rng);
    const auto y = noisy_labels(raw, rng);
    const auto w = trial % 3 == 0 ? random_weights(n, rng) : std::vector<double>(n, 1.0);
    FitConfig cfg;
    cfg.C = trial % 2 ? 10.0 : 1.0;
    const auto m = fit_svm_rbf(to_matrix(raw), y, w, cfg);
    const auto& p = std::get<SvmParams>(m.params);
    const auto xs = oracle::standardize(raw);
    REQUIRE(p.alpha.size() == n);

    double balance = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double yi = y[i] ? 1.0 : -1.0;
      balance += p.alpha[i] * yi;
      CHECK(p.alpha[i] >= 0.0);
      CHECK(p.alpha[i] <= cfg.C * w[i]);
    }
    CHECK(std::abs(balance) < 1e-6);

    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double f = p.bias;
      for (std::size_t j = 0; j < n; ++j) f += p.alpha[j] * (y[j] ? 1.0 : -1.0) * oracle::rbf(xs[i], xs[j], p.gamma);
      const double margin = (y[i] ? 1.0 : -1.0) * f;
      const double box = cfg.C * w[i];
      double r = 0.0;
      if (p.alpha[i] <= 0.0) r = std::max(0.0, 1.0 - margin);
      else if (p.alpha[i] >= box) r = std::max(0.0, margin - 1.0);
      else r = std::abs(margin - 1.0);
      worst = std::max(worst, r);
    }
    CHECK(worst < 1e-3);

    // library scores equal the oracle decision function
    const auto s = predict_scores(m, to_matrix(raw));
    for (std::size_t i = 0; i < n; i += 7) {
      double f = p.bias;
      for (std::size_t j = 0; j < n; ++j) f += p.alpha[j] * (y[j] ? 1.0 : -1.0) * oracle::rbf(xs[i], xs[j], p.gamma);
      CHECK(s[i] == doctest::Approx(f).epsilon(1e-9).scale(1.0));
    }
  }
}

TEST_CASE("SVM on XOR and on two symmetric points") {
  const Rows xor_x{{0, 0}, {1, 1}, {0, 1}, {1, 0}};
  const std::vector<int> xor_y{0, 0, 1, 1};
  FitConfig cfg;
  cfg.gamma = 1.0;
  cfg.C = 10.0;
  const auto m = fit_svm_rbf(to_matrix(xor_x), xor_y, {}, cfg);
  CHECK(accuracy(predict_scores(m, to_matrix(xor_x)), xor_y, 0.0) == 1.0);

  const auto sym = fit_svm_rbf(to_matrix(Rows{{-1.0}, {1.0}}), std::vector<int>{0, 1}, {}, FitConfig{});
  CHECK(std::abs(predict_scores(sym, to_matrix(Rows{{0.0}}))[0]) <= 1e-6);
  CHECK(code_of([] { fit_svm_rbf(to_matrix(Rows{{1.0}, {2.0}}), std::vector<int>{0, 0}, {}, FitConfig{}); }) == Errc::SingleClass);
}

TEST_CASE("GBC staged loss is non-increasing") {
  std::mt19937_64 rng(555);
  for (int trial = 0; trial < 10; ++trial) {
    const auto raw = oracle::random_matrix(80, 4, rng);
    const auto y = noisy_labels(raw, rng);
    const auto w = trial % 2 ? random_weights(80, rng) : std::vector<double>{};
    FitConfig cfg;
    cfg.n_trees = 40;
    cfg.learning_rate = trial % 3 == 0 ? 1.0 : 0.1;
    const auto m = fit_gbc(to_matrix(raw), y, w, cfg);
    const auto& loss = std::get<GbcParams>(m.params).stage_loss;
    REQUIRE(loss.size() == 41);
    for (std::size_t t = 1; t < loss.size(); ++t) CHECK(loss[t] <= loss[t - 1] + 1e-12);

    // the recorded final loss is the loss of the model's own predictions
    const auto prob = predict_scores(m, to_matrix(raw));
    CHECK(loss.back() == doctest::Approx(weighted_logloss(prob, y, w)).epsilon(1e-9));
  }
}

TEST_CASE("GBC degenerate and threshold data") {
  const auto ones = fit_gbc(to_matrix(Rows{{0.0}, {1.0}, {2.0}}), std::vector<int>{1, 1, 1}, {}, FitConfig{});
  for (double p : predict_scores(ones, to_matrix(Rows{{-5.0}, {1.5}}))) CHECK(p >= 0.999);

  Rows x;
  std::vector<int> y;
  for (int i = 0; i < 50; ++i) {
    const double v = -2.45 + 0.1 * i;
    x.push_back({v});
    y.push_back(v >= 0.0 ? 1 : 0);
  }
  FitConfig ten;
  ten.n_trees = 10;
  const auto m = fit_gbc(to_matrix(x), y, {}, ten);
  CHECK(accuracy(predict_scores(m, to_matrix(x)), y, 0.5) == 1.0);
  // the first stump splits where the classes meet
  const auto& root = std::get<GbcParams>(m.params).trees.front().nodes.front();
  const Matrix xs = m.scaler.transform(to_matrix(Rows{{-0.05}, {0.05}}));
  CHECK(root.feature == 0);
  CHECK(root.threshold > xs(0, 0));
  CHECK(root.threshold <= xs(1, 0));

  FitConfig none;
  none.n_trees = 0;
  const auto flat = fit_gbc(to_matrix(x), y, {}, none);
  const auto s = predict_scores(flat, to_matrix(Rows{{-9.0}, {0.0}, {9.0}}));
  CHECK(s[0] == s[1]);
  CHECK(s[1] == s[2]);
  CHECK(s[0] == doctest::Approx(25.0 / 50.0).epsilon(1e-12));
}

TEST_CASE("linear Shapley values") {
  TrainedModel m;
  m.kind = ModelKind::logreg_l1;
  m.scaler.mean = {0.0, 0.0};
  m.scaler.std = {1.0, 1.0};
  m.scaler.constant = {false, false};
  m.params = LogRegParams{{2.0, 0.0}, 0.0, 0, 0.0};
  // rows chosen so the column means are (1, 5) and row 0 is (3, 7)
  const Rows x{{3.0, 7.0}, {-1.0, 3.0}};
  const Matrix phi = linear_shapley_values(m, to_matrix(x));
  CHECK(phi(0, 0) == 4.0);
  CHECK(phi(0, 1) == 0.0);

  const std::vector<std::string> names{"a", "b"};
  const auto imp = linear_shapley_importance(m, to_matrix(x), names);
  REQUIRE(imp.size() == 2);
  CHECK(imp[0].name == "a");
  CHECK(imp[0].importance == 4.0);
  CHECK(imp[1].importance == 0.0);

  std::mt19937_64 rng(6);
  const auto raw = oracle::random_matrix(40, 5, rng);
  const auto y = noisy_labels(raw, rng);
  FitConfig cfg;
  cfg.lambda = 5e-3;
  const auto fit = fit_logreg_l1(to_matrix(raw), y, {}, cfg);
  const auto& beta = std::get<LogRegParams>(fit.params).beta;
  const auto xs = oracle::standardize(raw);
  const auto mu = column_means(xs);
  const Matrix ph = linear_shapley_values(fit, to_matrix(raw));
  for (std::size_t i = 0; i < 40; ++i) {
    double sum = 0.0, lin = 0.0;
    for (std::size_t j = 0; j < 5; ++j) {
      sum += ph(i, j);
      lin += beta[j] * (xs[i][j] - mu[j]);
    }
    CHECK(std::abs(sum - lin) <= 1e-10);
  }
  const auto ranked = linear_shapley_importance(fit, to_matrix(raw));
  for (std::size_t k = 1; k < ranked.size(); ++k) CHECK(ranked[k - 1].importance >= ranked[k].importance);
  CHECK(ranked.front().name.rfind("x", 0) == 0);

  const auto svm = fit_svm_rbf(to_matrix(raw), y, {}, FitConfig{});
  CHECK(code_of([&] { linear_shapley_values(svm, to_matrix(raw)); }) == Errc::WrongModelKind);
}

TEST_CASE("model serialization reproduces scores bit for bit") {
  std::mt19937_64 rng(31);
  const auto raw = oracle::random_matrix(50, 4, rng);
  const auto y = noisy_labels(raw, rng);
  const auto probe = to_matrix(oracle::random_matrix(30, 4, rng));
  FitConfig cfg;
  cfg.n_trees = 15;
  const std::vector<TrainedModel> models{fit_logreg_l1(to_matrix(raw), y, {}, cfg), fit_svm_rbf(to_matrix(raw), y, {}, cfg),
                                         fit_gbc(to_matrix(raw), y, {}, cfg)};
  const auto dir = std::filesystem::temp_directory_path();
  for (const auto& m : models) {
    const auto path = dir / "anx_model_roundtrip.json";
    save_model(path, m);
    const auto back = load_model(path);
    std::filesystem::remove(path);
    CHECK(back.kind == m.kind);
    const auto a = predict_scores(m, probe);
    const auto b = predict_scores(back, probe);
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
    CHECK(model_to_json(back) == model_to_json(m));
  }
  CHECK(code_of([] { model_from_json(nlohmann::json{{"format", "other"}, {"version", 1}}); }) == Errc::InvalidInput);
}

TEST_CASE("fits are deterministic") {
  std::mt19937_64 rng(77);
  const auto raw = oracle::random_matrix(40, 3, rng);
  const auto y = noisy_labels(raw, rng);
  for (auto fit : {fit_logreg_l1, fit_svm_rbf, fit_gbc}) {
    const auto a = model_to_json(fit(to_matrix(raw), y, {}, FitConfig{}));
    const auto b = model_to_json(fit(to_matrix(raw), y, {}, FitConfig{}));
    CHECK(a.dump() == b.dump());
  }
}

TEST_CASE("fit config JSON") {
  FitConfig c;
  c.gamma = 0.25;
  c.n_trees = 7;
  const auto back = fit_config_from_json(to_json(c));
  CHECK(back.gamma == 0.25);
  CHECK(back.n_trees == 7);
  CHECK(back.C == 10.0);
  CHECK(code_of([] { fit_config_from_json(nlohmann::json{{"C", -1.0}}); }) == Errc::ConfigError);
  CHECK(code_of([] { fit_config_from_json(nlohmann::json{{"lambda", "big"}}); }) == Errc::ConfigError);
}
