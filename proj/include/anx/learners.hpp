#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "anx/matrix.hpp"

namespace anx {

/// Training controls. Only C = 10 has an external anchor; the rest are
/// frozen defaults recorded in every report.
struct FitConfig {
  double lambda = 1e-2;            // L1 strength (logreg)
  double C = 10.0;                 // box constraint (svm)
  std::optional<double> gamma;     // RBF width; default 1 / (d * mean feature variance)
  int n_trees = 100;               // boosting stages
  double learning_rate = 0.1;
  int max_depth = 3;
  int min_leaf = 1;
  double tol = 1e-8;               // logreg objective decrease
  int max_iter = 10000;            // logreg iterations
  double kkt_tol = 1e-3;           // svm stopping gap
  std::uint64_t seed = 0;
};

nlohmann::json to_json(const FitConfig& cfg);
FitConfig fit_config_from_json(const nlohmann::json& j, FitConfig base = {});

enum class ModelKind { logreg_l1, svm_rbf, gbc };
std::string_view model_kind_name(ModelKind kind) noexcept;

/// Per-feature standardization. Zero-variance columns get std = 1 and are
/// flagged constant.
struct Scaler {
  std::vector<double> mean;
  std::vector<double> std;
  std::vector<bool> constant;

  static Scaler fit(const Matrix& x);
  std::size_t dim() const noexcept { return mean.size(); }
  Matrix transform(const Matrix& x) const;
};

struct LogRegParams {
  std::vector<double> beta;
  double intercept = 0.0;
  int iterations = 0;
  double objective = 0.0;
};

struct SvmParams {
  Matrix support;                 // standardized support vectors
  std::vector<double> coef;       // alpha_i * y'_i for each support vector
  double bias = 0.0;
  double gamma = 1.0;
  double C = 10.0;
  std::vector<double> alpha;      // full dual solution over the training rows
  int iterations = 0;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;
  double predict(std::span<const double> x) const;
};

struct GbcParams {
  double init_score = 0.0;
  double learning_rate = 0.1;
  std::vector<RegressionTree> trees;
  std::vector<double> stage_loss;  // weighted training logloss after 0..n stages
};

struct TrainedModel {
  ModelKind kind = ModelKind::logreg_l1;
  Scaler scaler;
  std::variant<LogRegParams, SvmParams, GbcParams> params;
  FitConfig config;

  std::size_t dim() const noexcept { return scaler.dim(); }
};

// --- logistic regression -------------------------------------------------

struct LossGrad {
  double loss = 0.0;               // weighted mean logloss (no penalty)
  std::vector<double> grad_beta;
  double grad_intercept = 0.0;
};

/// Weighted mean logloss and its gradient on an already-standardized matrix.
/// Empty `w` means unit weights.
LossGrad logreg_loss_grad(const Matrix& xs, std::span<const int> y, std::span<const double> w,
                          std::span<const double> beta, double intercept);

/// Smooth loss plus lambda * ||beta||_1.
double logreg_objective(const Matrix& xs, std::span<const int> y, std::span<const double> w,
                        std::span<const double> beta, double intercept, double lambda);

/// Smallest lambda for which beta = 0 is optimal.
double logreg_lambda_max(const Matrix& xs, std::span<const int> y, std::span<const double> w);

/// Proximal gradient (soft-threshold on beta, plain step on the intercept)
/// with backtracking. Throws SingleClass / NonpositiveWeight.
TrainedModel fit_logreg_l1(const Matrix& x, std::span<const int> y, std::span<const double> w,
                           const FitConfig& cfg);

// --- kernel SVM ------------------------------------------------------------

/// 1 / (d * mean column variance), 1 if all columns are constant.
double default_gamma(const Matrix& xs);

/// SMO on the dual with per-sample boxes 0 <= alpha_i <= C * w_i.
TrainedModel fit_svm_rbf(const Matrix& x, std::span<const int> y, std::span<const double> w,
                         const FitConfig& cfg);

// --- gradient boosting -----------------------------------------------------

/// Stage-wise regression trees on the weighted logloss gradient with Newton leaves.
TrainedModel fit_gbc(const Matrix& x, std::span<const int> y, std::span<const double> w,
                     const FitConfig& cfg);

double weighted_logloss(std::span<const double> prob, std::span<const int> y, std::span<const double> w);

// --- scoring and inspection -----------------------------------------------

/// Probabilities for logreg / gbc, signed margin for svm. Throws DimensionMismatch.
std::vector<double> predict_scores(const TrainedModel& m, const Matrix& x);

/// Whether predict_scores emits probabilities (threshold 0.5) or margins (threshold 0).
bool emits_probabilities(ModelKind kind) noexcept;

/// phi_ij = beta_j (x~_ij - mean_i x~_ij) on standardized inputs.
Matrix linear_shapley_values(const TrainedModel& m, const Matrix& x);

struct FeatureImportance {
  std::string name;
  std::size_t index = 0;
  double importance = 0.0;
};

/// mean_i |phi_ij|, sorted descending (stable on index). Names default to x<j>.
std::vector<FeatureImportance> linear_shapley_importance(const TrainedModel& m, const Matrix& x,
                                                         std::span<const std::string> names = {});

// --- persistence -----------------------------------------------------------

inline constexpr std::string_view kModelFormat = "anx-model";
inline constexpr int kModelVersion = 1;

nlohmann::json model_to_json(const TrainedModel& m);
TrainedModel model_from_json(const nlohmann::json& j);
void save_model(const std::filesystem::path& path, const TrainedModel& m);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace anx
