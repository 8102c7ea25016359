#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

#include "anx/error.hpp"
#include "anx/learners.hpp"
#include "learners/internal.hpp"

namespace anx {

using nlohmann::json;

std::string_view model_kind_name(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::logreg_l1: return "logreg_l1";
    case ModelKind::svm_rbf: return "svm_rbf";
    case ModelKind::gbc: return "gbc";
  }
  return "logreg_l1";
}

namespace {

ModelKind parse_kind(const std::string& s) {
  if (s == "logreg_l1") return ModelKind::logreg_l1;
  if (s == "svm_rbf") return ModelKind::svm_rbf;
  if (s == "gbc") return ModelKind::gbc;
  fail(Errc::InvalidInput, fmt::format("unknown model kind '{}'", s));
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, std::size_t cols) {
  Matrix m(0, cols);
  for (const auto& row : j) m.push_row(row.get<std::vector<double>>());
  return m;
}

}  // namespace

json to_json(const FitConfig& c) {
  json j;
  j["lambda"] = c.lambda;
  j["C"] = c.C;
  j["gamma"] = c.gamma ? json(*c.gamma) : json(nullptr);
  j["n_trees"] = c.n_trees;
  j["learning_rate"] = c.learning_rate;
  j["max_depth"] = c.max_depth;
  j["min_leaf"] = c.min_leaf;
  j["tol"] = c.tol;
  j["max_iter"] = c.max_iter;
  j["kkt_tol"] = c.kkt_tol;
  j["seed"] = c.seed;
  return j;
}

FitConfig fit_config_from_json(const json& j, FitConfig c) {
  if (!j.is_object()) fail(Errc::ConfigError, "fit config must be an object");
  auto read = [&](const char* key, auto& field) {
    if (auto it = j.find(key); it != j.end()) {
      try {
        field = it->get<std::decay_t<decltype(field)>>();
      } catch (const json::exception&) {
        fail(Errc::ConfigError, fmt::format("fit.{} has the wrong type", key));
      }
    }
  };
  read("lambda", c.lambda);
  read("C", c.C);
  if (auto it = j.find("gamma"); it != j.end()) {
    if (it->is_null()) {
      c.gamma.reset();
    } else if (it->is_number()) {
      c.gamma = it->get<double>();
    } else {
      fail(Errc::ConfigError, "fit.gamma must be a number or null");
    }
  }
  read("n_trees", c.n_trees);
  read("learning_rate", c.learning_rate);
  read("max_depth", c.max_depth);
  read("min_leaf", c.min_leaf);
  read("tol", c.tol);
  read("max_iter", c.max_iter);
  read("kkt_tol", c.kkt_tol);
  read("seed", c.seed);
  if (!(c.lambda >= 0.0)) fail(Errc::ConfigError, "fit.lambda must be >= 0");
  if (!(c.C > 0.0)) fail(Errc::ConfigError, "fit.C must be > 0");
  if (c.gamma && !(*c.gamma > 0.0)) fail(Errc::ConfigError, "fit.gamma must be > 0");
  if (c.n_trees < 0) fail(Errc::ConfigError, "fit.n_trees must be >= 0");
  if (!(c.learning_rate > 0.0 && c.learning_rate <= 1.0)) fail(Errc::ConfigError, "fit.learning_rate must be in (0, 1]");
  if (c.max_depth < 1) fail(Errc::ConfigError, "fit.max_depth must be >= 1");
  if (c.min_leaf < 1) fail(Errc::ConfigError, "fit.min_leaf must be >= 1");
  if (!(c.tol > 0.0) || c.max_iter < 1 || !(c.kkt_tol > 0.0)) fail(Errc::ConfigError, "fit tolerances must be positive");
  return c;
}

Scaler Scaler::fit(const Matrix& x) {
  Scaler s;
  const std::size_t d = x.cols();
  const double n = static_cast<double>(x.rows());
  s.mean.assign(d, 0.0);
  s.std.assign(d, 1.0);
  s.constant.assign(d, true);
  if (x.rows() == 0) return s;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += row[j];
  }
  for (double& m : s.mean) m /= n;
  std::vector<double> ss(d, 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    for (std::size_t j = 0; j < d; ++j) ss[j] += (row[j] - s.mean[j]) * (row[j] - s.mean[j]);
  }
  for (std::size_t j = 0; j < d; ++j) {
    const double sd = std::sqrt(ss[j] / n);
    // Relative cut so that columns equal up to rounding count as constant.
    if (sd > 1e-12 * std::max(1.0, std::abs(s.mean[j]))) {
      s.std[j] = sd;
      s.constant[j] = false;
    }
  }
  return s;
}

Matrix Scaler::transform(const Matrix& x) const {
  if (x.cols() != dim()) {
    fail(Errc::DimensionMismatch, fmt::format("{} columns, model expects {}", x.cols(), dim()));
  }
  Matrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto in = x.row(r);
    auto o = out.row(r);
    for (std::size_t j = 0; j < dim(); ++j) o[j] = constant[j] ? 0.0 : (in[j] - mean[j]) / std[j];
  }
  return out;
}

namespace detail {

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double log1p_exp(double z) noexcept { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

std::vector<double> resolve_weights(std::span<const double> w, std::size_t n) {
  if (w.empty()) return std::vector<double>(n, 1.0);
  if (w.size() != n) fail(Errc::DimensionMismatch, fmt::format("{} weights for {} rows", w.size(), n));
  for (double v : w) {
    if (!(v > 0.0) || !std::isfinite(v)) fail(Errc::NonpositiveWeight, fmt::format("weight {}", v));
  }
  return {w.begin(), w.end()};
}

void check_training_set(const Matrix& x, std::span<const int> y, bool require_both_classes) {
  if (x.rows() != y.size()) fail(Errc::DimensionMismatch, fmt::format("{} rows but {} labels", x.rows(), y.size()));
  if (x.rows() == 0) fail(Errc::SingleClass, "empty training set");
  bool pos = false, neg = false;
  for (int v : y) {
    if (v != 0 && v != 1) fail(Errc::InvalidInput, fmt::format("label {} is not 0/1", v));
    (v == 1 ? pos : neg) = true;
  }
  if (require_both_classes && (!pos || !neg || x.rows() < 2)) {
    fail(Errc::SingleClass, "training labels contain a single class");
  }
  for (double v : x.data()) {
    if (!std::isfinite(v)) fail(Errc::NonFiniteValue, "non-finite training value");
  }
}

}  // namespace detail

bool emits_probabilities(ModelKind kind) noexcept { return kind != ModelKind::svm_rbf; }

std::vector<double> predict_scores(const TrainedModel& m, const Matrix& x) {
  const Matrix xs = m.scaler.transform(x);
  std::vector<double> out(xs.rows());
  switch (m.kind) {
    case ModelKind::logreg_l1: {
      const auto& p = std::get<LogRegParams>(m.params);
      for (std::size_t r = 0; r < xs.rows(); ++r) {
        const auto row = xs.row(r);
        const double z = std::inner_product(row.begin(), row.end(), p.beta.begin(), p.intercept);
        out[r] = detail::sigmoid(z);
      }
      break;
    }
    case ModelKind::svm_rbf: {
      const auto& p = std::get<SvmParams>(m.params);
      for (std::size_t r = 0; r < xs.rows(); ++r) {
        double acc = p.bias;
        for (std::size_t s = 0; s < p.support.rows(); ++s) {
          acc += p.coef[s] * detail::rbf(xs.row(r), p.support.row(s), p.gamma);
        }
        out[r] = acc;
      }
      break;
    }
    case ModelKind::gbc: {
      const auto& p = std::get<GbcParams>(m.params);
      for (std::size_t r = 0; r < xs.rows(); ++r) {
        double f = p.init_score;
        for (const auto& tree : p.trees) f += p.learning_rate * tree.predict(xs.row(r));
        out[r] = detail::sigmoid(f);
      }
      break;
    }
  }
  return out;
}

Matrix linear_shapley_values(const TrainedModel& m, const Matrix& x) {
  if (m.kind != ModelKind::logreg_l1) {
    fail(Errc::WrongModelKind, fmt::format("linear Shapley values need logreg_l1, got {}", model_kind_name(m.kind)));
  }
  const auto& beta = std::get<LogRegParams>(m.params).beta;
  const Matrix xs = m.scaler.transform(x);
  std::vector<double> col_mean(xs.cols(), 0.0);
  for (std::size_t r = 0; r < xs.rows(); ++r) {
    const auto row = xs.row(r);
    for (std::size_t j = 0; j < xs.cols(); ++j) col_mean[j] += row[j];
  }
  for (double& v : col_mean) v /= static_cast<double>(std::max<std::size_t>(1, xs.rows()));
  Matrix phi(xs.rows(), xs.cols());
  for (std::size_t r = 0; r < xs.rows(); ++r) {
    for (std::size_t j = 0; j < xs.cols(); ++j) phi(r, j) = beta[j] * (xs(r, j) - col_mean[j]);
  }
  return phi;
}

std::vector<FeatureImportance> linear_shapley_importance(const TrainedModel& m, const Matrix& x,
                                                         std::span<const std::string> names) {
  const Matrix phi = linear_shapley_values(m, x);
  if (!names.empty() && names.size() != phi.cols()) {
    fail(Errc::DimensionMismatch, fmt::format("{} names for {} features", names.size(), phi.cols()));
  }
  std::vector<FeatureImportance> out(phi.cols());
  for (std::size_t j = 0; j < phi.cols(); ++j) {
    double acc = 0.0;
    for (std::size_t r = 0; r < phi.rows(); ++r) acc += std::abs(phi(r, j));
    out[j].index = j;
    out[j].name = names.empty() ? fmt::format("x{}", j) : names[j];
    out[j].importance = phi.rows() ? acc / static_cast<double>(phi.rows()) : 0.0;
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.importance > b.importance; });
  return out;
}

json model_to_json(const TrainedModel& m) {
  json j;
  j["format"] = kModelFormat;
  j["version"] = kModelVersion;
  j["kind"] = model_kind_name(m.kind);
  j["dim"] = m.dim();
  j["scaler"] = {{"mean", m.scaler.mean}, {"std", m.scaler.std}, {"constant", m.scaler.constant}};
  j["config"] = to_json(m.config);
  json params;
  switch (m.kind) {
    case ModelKind::logreg_l1: {
      const auto& p = std::get<LogRegParams>(m.params);
      params = {{"beta", p.beta}, {"intercept", p.intercept}, {"iterations", p.iterations}, {"objective", p.objective}};
      break;
    }
    case ModelKind::svm_rbf: {
      const auto& p = std::get<SvmParams>(m.params);
      params = {{"support", matrix_to_json(p.support)}, {"coef", p.coef}, {"bias", p.bias},
                {"gamma", p.gamma}, {"C", p.C}, {"iterations", p.iterations}};
      break;
    }
    case ModelKind::gbc: {
      const auto& p = std::get<GbcParams>(m.params);
      json trees = json::array();
      for (const auto& t : p.trees) {
        json nodes = json::array();
        for (const auto& n : t.nodes) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
        trees.push_back(nodes);
      }
      params = {{"init_score", p.init_score}, {"learning_rate", p.learning_rate}, {"trees", trees},
                {"stage_loss", p.stage_loss}};
      break;
    }
  }
  j["params"] = params;
  return j;
}

TrainedModel model_from_json(const json& j) {
  try {
    if (j.at("format").get<std::string>() != kModelFormat) fail(Errc::InvalidInput, "not a model document");
    if (j.at("version").get<int>() != kModelVersion) {
      fail(Errc::InvalidInput, fmt::format("unsupported model version {}", j.at("version").get<int>()));
    }
    TrainedModel m;
    m.kind = parse_kind(j.at("kind").get<std::string>());
    const auto& sc = j.at("scaler");
    m.scaler.mean = sc.at("mean").get<std::vector<double>>();
    m.scaler.std = sc.at("std").get<std::vector<double>>();
    m.scaler.constant = sc.at("constant").get<std::vector<bool>>();
    m.config = fit_config_from_json(j.at("config"));
    const auto& p = j.at("params");
    switch (m.kind) {
      case ModelKind::logreg_l1: {
        LogRegParams lr;
        lr.beta = p.at("beta").get<std::vector<double>>();
        lr.intercept = p.at("intercept").get<double>();
        lr.iterations = p.at("iterations").get<int>();
        lr.objective = p.at("objective").get<double>();
        m.params = std::move(lr);
        break;
      }
      case ModelKind::svm_rbf: {
        SvmParams sv;
        sv.support = matrix_from_json(p.at("support"), m.scaler.dim());
        sv.coef = p.at("coef").get<std::vector<double>>();
        sv.bias = p.at("bias").get<double>();
        sv.gamma = p.at("gamma").get<double>();
        sv.C = p.at("C").get<double>();
        sv.iterations = p.at("iterations").get<int>();
        m.params = std::move(sv);
        break;
      }
      case ModelKind::gbc: {
        GbcParams gb;
        gb.init_score = p.at("init_score").get<double>();
        gb.learning_rate = p.at("learning_rate").get<double>();
        gb.stage_loss = p.at("stage_loss").get<std::vector<double>>();
        for (const auto& t : p.at("trees")) {
          RegressionTree tree;
          for (const auto& n : t) {
            tree.nodes.push_back({n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(),
                                  n.at(3).get<int>(), n.at(4).get<double>()});
          }
          gb.trees.push_back(std::move(tree));
        }
        m.params = std::move(gb);
        break;
      }
    }
    if (m.scaler.std.size() != m.scaler.dim() || m.scaler.constant.size() != m.scaler.dim()) {
      fail(Errc::DimensionMismatch, "scaler arrays disagree in length");
    }
    return m;
  } catch (const json::exception& e) {
    fail(Errc::InvalidInput, fmt::format("malformed model document: {}", e.what()));
  }
}

void save_model(const std::filesystem::path& path, const TrainedModel& m) {
  std::ofstream out(path);
  if (!out) fail(Errc::IoFailure, fmt::format("cannot write {}", path.string()));
  out << model_to_json(m).dump(1) << '\n';
}

TrainedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoFailure, fmt::format("cannot open {}", path.string()));
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    fail(Errc::InvalidInput, e.what());
  }
  return model_from_json(j);
}

}  // namespace anx
