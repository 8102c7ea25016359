#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "anx/dataset.hpp"
#include "anx/learners.hpp"
#include "anx/matrix.hpp"
#include "anx/metrics.hpp"

namespace anx {

/// Declaration order is the report row order.
enum class Pipeline { random_baseline, hand_crafted, text_embed, text_embed_weighted, wav2vec_embed, multimodal };

inline constexpr std::size_t kPipelineCount = 6;
std::string_view pipeline_name(Pipeline p) noexcept;
std::string_view pipeline_display_name(Pipeline p) noexcept;
std::optional<Pipeline> parse_pipeline(std::string_view name) noexcept;
/// The learner a pipeline trains; empty for the random baseline.
std::optional<ModelKind> pipeline_model(Pipeline p) noexcept;

/// Input files. Relative paths resolve against ExperimentConfig::base_dir.
struct InputPaths {
  std::optional<std::string> features;               // feature CSV (skips audio extraction)
  std::optional<std::string> annotations;            // emotion / sentiment JSONL
  std::optional<std::string> text_embeddings;        // 768-d transcript embeddings
  std::optional<std::string> audio_embeddings;       // 512-d pooled speech embeddings
  std::optional<std::string> text_cls_embeddings;    // 1024-d
  std::optional<std::string> speech_cls_embeddings;  // 768-d
  std::optional<std::string> audio_root;             // base for manifest audio paths
};

struct ExperimentConfig {
  std::string manifest;
  std::vector<Pipeline> pipelines;  // sorted, unique
  InputPaths inputs;
  FitConfig fit;
  SplitRatios ratios;
  std::uint64_t split_seed = 0;
  bool resplit = false;  // ignore split fields already in the manifest
  std::uint64_t seed = 0;
  bool tune = true;
  std::string output_dir = "out";
  int threads = 0;  // extraction workers; 0 = hardware concurrency
  std::filesystem::path base_dir;  // not echoed

  std::filesystem::path resolve(const std::string& path) const;
};

/// Strict parse: unknown keys and missing required inputs throw ConfigError.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
/// Fully resolved config, as echoed in reports.
nlohmann::json to_json(const ExperimentConfig& cfg);

/// Rows, labels, GAD-7 scores and split per manifest entry for one pipeline.
struct PipelineData {
  Matrix x;
  std::vector<int> labels;
  std::vector<int> scores;
  std::vector<std::string> ids;
  std::vector<Split> splits;
  std::vector<std::string> feature_names;

  Matrix rows(Split s) const;
  std::vector<int> labels_of(Split s) const;
  std::vector<int> scores_of(Split s) const;
  std::size_t count(Split s) const;
};

/// Manifest with every entry assigned to a split.
Manifest prepare_manifest(const ExperimentConfig& cfg);

/// Throws MissingInput when a required file is not configured or absent.
PipelineData load_pipeline_data(const ExperimentConfig& cfg, Pipeline p, const Manifest& manifest);

/// Replaceable training entry point; the default dispatches on kind.
using Learner = std::function<TrainedModel(ModelKind, const Matrix&, std::span<const int>, std::span<const double>,
                                           const FitConfig&)>;
TrainedModel default_learner(ModelKind kind, const Matrix& x, std::span<const int> y, std::span<const double> w,
                             const FitConfig& cfg);

struct GridPoint {
  double value = 0.0;
  std::optional<double> valid_auroc;
};

struct Tuning {
  std::string parameter;  // "lambda", "C" or "n_trees"; empty when not tuned
  std::vector<GridPoint> grid;
  std::optional<double> selected;
  std::string note;
};

struct TrainOutcome {
  TrainedModel model;
  Tuning tuning;
};

/// Fits on train, tunes the kind's grid on valid (first best wins).
TrainOutcome train_pipeline(const ExperimentConfig& cfg, Pipeline p, const PipelineData& data,
                            const Learner& learner = default_learner);

struct PipelineResult {
  Pipeline pipeline = Pipeline::random_baseline;
  EvalReport eval;
  Curve roc;  // empty when the test split has one class
  Curve pr;   // empty when the test split has no positives
  std::optional<TrainedModel> model;
  Tuning tuning;
  std::size_t n_train = 0, n_valid = 0, n_test = 0;
};

/// Threshold 0.5 for probabilities, 0 for margins.
double operating_threshold(std::optional<ModelKind> kind) noexcept;

PipelineResult evaluate_on_test(Pipeline p, const PipelineData& data, std::optional<TrainedModel> model,
                                Tuning tuning, std::uint64_t seed);

struct RunReport {
  nlohmann::json config;
  std::vector<PipelineResult> rows;  // pipeline order
};

RunReport run_experiment(const ExperimentConfig& cfg, const Learner& learner = default_learner);

nlohmann::json report_json(const RunReport& r);
std::string report_table(const RunReport& r);

/// Writes report.json, report.md, <pipeline>/roc.csv, <pipeline>/pr.csv and
/// models/<pipeline>.json. Throws IoFailure.
void emit_report(const RunReport& r, const std::filesystem::path& dir);

}  // namespace anx
