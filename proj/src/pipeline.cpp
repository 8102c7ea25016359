#include "anx/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <fmt/format.h>

#include "anx/audio_io.hpp"
#include "anx/dsp_features.hpp"
#include "anx/error.hpp"
#include "anx/representation_ingest.hpp"

namespace anx {

using nlohmann::json;

namespace {

struct PipelineInfo {
  Pipeline pipeline;
  std::string_view name;
  std::string_view display;
};

constexpr std::array<PipelineInfo, kPipelineCount> kPipelines = {{
    {Pipeline::random_baseline, "random_baseline", "Random baseline"},
    {Pipeline::hand_crafted, "hand_crafted", "Audio features"},
    {Pipeline::text_embed, "text_embed", "Transcript features"},
    {Pipeline::text_embed_weighted, "text_embed_weighted", "Transcript features with sample weights"},
    {Pipeline::wav2vec_embed, "wav2vec_embed", "Wav2Vec features"},
    {Pipeline::multimodal, "multimodal", "Multi-modal model"},
}};

constexpr std::string_view kReportFormat = "anx-report";
constexpr int kReportVersion = 1;

const std::vector<double> kLambdaGrid = {1e-4, 1e-3, 1e-2, 1e-1, 1.0};
const std::vector<double> kCGrid = {1.0, 10.0, 100.0};
const std::vector<double> kTreeGrid = {50.0, 100.0, 200.0};

[[noreturn]] void config_error(const std::string& what) { fail(Errc::ConfigError, what); }

void check_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) config_error(fmt::format("{} must be an object", where));
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      config_error(fmt::format("unknown key '{}' in {}", key, where));
    }
  }
}

template <typename T>
T get_as(const json& j, std::string_view what) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    config_error(fmt::format("{} has the wrong type", what));
  }
}

std::optional<std::string> optional_path(const json& j, const char* key) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) return get_as<std::string>(*it, fmt::format("inputs.{}", key));
  return std::nullopt;
}

json opt_to_json(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

void require_input(const std::optional<std::string>& path, Pipeline p, std::string_view key) {
  if (!path) fail(Errc::MissingInput, fmt::format("pipeline {} needs inputs.{}", pipeline_name(p), key));
}

std::filesystem::path existing(const ExperimentConfig& cfg, const std::string& path) {
  auto resolved = cfg.resolve(path);
  if (!std::filesystem::exists(resolved)) fail(Errc::MissingInput, fmt::format("{} does not exist", resolved.string()));
  return resolved;
}

EmbeddingSet load_checked(const ExperimentConfig& cfg, const std::string& path, std::size_t dim) {
  auto set = load_embedding_file(existing(cfg, path));
  if (set.dimension() != dim) {
    fail(Errc::DimensionMismatch, fmt::format("{} holds {}-d vectors, expected {}", path, set.dimension(), dim));
  }
  return set;
}

PipelineData from_design(DesignMatrix dm, std::vector<std::string> names) {
  PipelineData d;
  d.x = std::move(dm.x);
  d.labels = std::move(dm.labels);
  d.scores = std::move(dm.scores);
  d.ids = std::move(dm.ids);
  d.splits = std::move(dm.splits);
  d.feature_names = std::move(names);
  return d;
}

std::vector<std::string> generic_names(std::size_t dim, std::string_view prefix) {
  std::vector<std::string> names(dim);
  for (std::size_t k = 0; k < dim; ++k) names[k] = fmt::format("{}{}", prefix, k);
  return names;
}

// Runs fn(i) for i in [0, n) on `threads` workers; rethrows the failure with the lowest index.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn fn) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads) : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, std::max<std::size_t>(1, n));
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::optional<std::size_t> failed_at;
  std::exception_ptr failure;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failed_at || i < *failed_at) {
          failed_at = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::jthread> pool;
  for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

PipelineData hand_crafted_data(const ExperimentConfig& cfg, const Manifest& manifest) {
  std::vector<std::string> names(feature_names().begin(), feature_names().end());
  std::vector<FeatureVector> features(manifest.size());

  if (cfg.inputs.features) {
    std::ifstream in(existing(cfg, *cfg.inputs.features));
    std::unordered_map<std::string, FeatureVector> by_id;
    for (auto& row : read_feature_csv(in)) {
      if (!by_id.emplace(row.id, row.features).second) fail(Errc::DuplicateId, fmt::format("feature row '{}'", row.id));
    }
    for (std::size_t i = 0; i < manifest.size(); ++i) {
      auto it = by_id.find(manifest[i].id);
      if (it == by_id.end()) fail(Errc::MissingId, fmt::format("manifest id '{}' has no feature row", manifest[i].id));
      features[i] = it->second;
    }
  } else {
    std::unordered_map<std::string, Annotation> notes;
    if (cfg.inputs.annotations) notes = load_annotation_file(existing(cfg, *cfg.inputs.annotations));
    const std::filesystem::path root = cfg.inputs.audio_root ? cfg.resolve(*cfg.inputs.audio_root)
                                                             : cfg.resolve(cfg.manifest).parent_path();
    for (const auto& e : manifest) {
      if (!e.audio_path) fail(Errc::MissingInput, fmt::format("manifest id '{}' has no audio path", e.id));
    }
    parallel_for(manifest.size(), cfg.threads, [&](std::size_t i) {
      const auto& e = manifest[i];
      std::filesystem::path path(*e.audio_path);
      if (path.is_relative()) path = root / path;
      if (!std::filesystem::exists(path)) fail(Errc::MissingInput, fmt::format("{} does not exist", path.string()));
      std::optional<Annotation> note;
      if (auto it = notes.find(e.id); it != notes.end()) note = it->second;
      features[i] = extract_feature_vector(read_wav(path), note);
    });
  }

  PipelineData d;
  d.x = Matrix(0, kFeatureDim);
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    d.x.push_row(features[i].values);
    d.labels.push_back(gad7_label(manifest[i].gad7));
    d.scores.push_back(manifest[i].gad7);
    d.ids.push_back(manifest[i].id);
    d.splits.push_back(*manifest[i].split);
  }
  d.feature_names = std::move(names);
  return d;
}

std::span<const double> maybe(const std::vector<double>& w) { return w; }

}  // namespace

// --- names ------------------------------------------------------------------

std::string_view pipeline_name(Pipeline p) noexcept { return kPipelines[static_cast<std::size_t>(p)].name; }
std::string_view pipeline_display_name(Pipeline p) noexcept { return kPipelines[static_cast<std::size_t>(p)].display; }

std::optional<Pipeline> parse_pipeline(std::string_view name) noexcept {
  for (const auto& info : kPipelines) {
    if (info.name == name) return info.pipeline;
  }
  return std::nullopt;
}

std::optional<ModelKind> pipeline_model(Pipeline p) noexcept {
  switch (p) {
    case Pipeline::random_baseline: return std::nullopt;
    case Pipeline::hand_crafted: return ModelKind::logreg_l1;
    case Pipeline::text_embed:
    case Pipeline::text_embed_weighted: return ModelKind::gbc;
    case Pipeline::wav2vec_embed:
    case Pipeline::multimodal: return ModelKind::svm_rbf;
  }
  return std::nullopt;
}

// --- config -----------------------------------------------------------------

std::filesystem::path ExperimentConfig::resolve(const std::string& path) const {
  std::filesystem::path p(path);
  return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
}

ExperimentConfig experiment_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  check_keys(j, "config", {"manifest", "pipeline", "pipelines", "inputs", "fit", "split", "seed", "tune", "output_dir", "threads"});
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;

  if (!j.contains("manifest")) config_error("config.manifest is required");
  cfg.manifest = get_as<std::string>(j["manifest"], "manifest");

  std::vector<std::string> names;
  if (j.contains("pipeline") && j.contains("pipelines")) config_error("give either pipeline or pipelines");
  if (j.contains("pipeline")) names.push_back(get_as<std::string>(j["pipeline"], "pipeline"));
  if (j.contains("pipelines")) names = get_as<std::vector<std::string>>(j["pipelines"], "pipelines");
  if (names.empty()) config_error("config needs at least one pipeline");
  for (const auto& name : names) {
    auto p = parse_pipeline(name);
    if (!p) config_error(fmt::format("unknown pipeline '{}'", name));
    cfg.pipelines.push_back(*p);
  }
  std::sort(cfg.pipelines.begin(), cfg.pipelines.end());
  cfg.pipelines.erase(std::unique(cfg.pipelines.begin(), cfg.pipelines.end()), cfg.pipelines.end());

  if (auto it = j.find("inputs"); it != j.end()) {
    check_keys(*it, "inputs", {"features", "annotations", "text_embeddings", "audio_embeddings", "text_cls_embeddings",
                               "speech_cls_embeddings", "audio_root"});
    auto& in = cfg.inputs;
    in.features = optional_path(*it, "features");
    in.annotations = optional_path(*it, "annotations");
    in.text_embeddings = optional_path(*it, "text_embeddings");
    in.audio_embeddings = optional_path(*it, "audio_embeddings");
    in.text_cls_embeddings = optional_path(*it, "text_cls_embeddings");
    in.speech_cls_embeddings = optional_path(*it, "speech_cls_embeddings");
    in.audio_root = optional_path(*it, "audio_root");
  }
  if (auto it = j.find("fit"); it != j.end()) cfg.fit = fit_config_from_json(*it);

  if (auto it = j.find("split"); it != j.end()) {
    check_keys(*it, "split", {"ratios", "seed", "resplit"});
    if (auto r = it->find("ratios"); r != it->end()) {
      const auto v = get_as<std::vector<double>>(*r, "split.ratios");
      if (v.size() != 3) config_error("split.ratios needs three values");
      cfg.ratios = {v[0], v[1], v[2]};
    }
    if (auto s = it->find("seed"); s != it->end()) cfg.split_seed = get_as<std::uint64_t>(*s, "split.seed");
    if (auto s = it->find("resplit"); s != it->end()) cfg.resplit = get_as<bool>(*s, "split.resplit");
  }
  const auto& r = cfg.ratios;
  if (!(r.train > 0 && r.valid > 0 && r.test > 0) || std::abs(r.train + r.valid + r.test - 1.0) > 1e-9) {
    config_error("split.ratios must be positive and sum to 1");
  }
  if (auto it = j.find("seed"); it != j.end()) cfg.seed = get_as<std::uint64_t>(*it, "seed");
  if (auto it = j.find("tune"); it != j.end()) cfg.tune = get_as<bool>(*it, "tune");
  if (auto it = j.find("output_dir"); it != j.end()) cfg.output_dir = get_as<std::string>(*it, "output_dir");
  if (auto it = j.find("threads"); it != j.end()) {
    cfg.threads = get_as<int>(*it, "threads");
    if (cfg.threads < 0) config_error("threads must be >= 0");
  }

  for (Pipeline p : cfg.pipelines) {
    switch (p) {
      case Pipeline::text_embed:
      case Pipeline::text_embed_weighted: require_input(cfg.inputs.text_embeddings, p, "text_embeddings"); break;
      case Pipeline::wav2vec_embed: require_input(cfg.inputs.audio_embeddings, p, "audio_embeddings"); break;
      case Pipeline::multimodal:
        require_input(cfg.inputs.text_cls_embeddings, p, "text_cls_embeddings");
        require_input(cfg.inputs.speech_cls_embeddings, p, "speech_cls_embeddings");
        break;
      default: break;
    }
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::MissingInput, fmt::format("cannot open config {}", path.string()));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    config_error(fmt::format("{}: {}", path.string(), e.what()));
  }
  return experiment_config_from_json(j, path.parent_path());
}

json to_json(const ExperimentConfig& cfg) {
  json pipelines = json::array();
  for (Pipeline p : cfg.pipelines) pipelines.push_back(pipeline_name(p));
  const auto& in = cfg.inputs;
  return {
      {"manifest", cfg.manifest},
      {"pipelines", pipelines},
      {"inputs",
       {{"features", opt_to_json(in.features)},
        {"annotations", opt_to_json(in.annotations)},
        {"text_embeddings", opt_to_json(in.text_embeddings)},
        {"audio_embeddings", opt_to_json(in.audio_embeddings)},
        {"text_cls_embeddings", opt_to_json(in.text_cls_embeddings)},
        {"speech_cls_embeddings", opt_to_json(in.speech_cls_embeddings)},
        {"audio_root", opt_to_json(in.audio_root)}}},
      {"fit", to_json(cfg.fit)},
      {"split", {{"ratios", {cfg.ratios.train, cfg.ratios.valid, cfg.ratios.test}}, {"seed", cfg.split_seed}, {"resplit", cfg.resplit}}},
      {"seed", cfg.seed},
      {"tune", cfg.tune},
      {"output_dir", cfg.output_dir},
  };
}

// --- data -------------------------------------------------------------------

Matrix PipelineData::rows(Split s) const {
  Matrix out(0, x.cols());
  for (std::size_t i = 0; i < splits.size(); ++i) {
    if (splits[i] == s) out.push_row(x.row(i));
  }
  return out;
}

std::vector<int> PipelineData::labels_of(Split s) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < splits.size(); ++i) {
    if (splits[i] == s) out.push_back(labels[i]);
  }
  return out;
}

std::vector<int> PipelineData::scores_of(Split s) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < splits.size(); ++i) {
    if (splits[i] == s) out.push_back(scores[i]);
  }
  return out;
}

std::size_t PipelineData::count(Split s) const { return static_cast<std::size_t>(std::count(splits.begin(), splits.end(), s)); }

Manifest prepare_manifest(const ExperimentConfig& cfg) {
  Manifest m = load_manifest(existing(cfg, cfg.manifest));
  const bool all_assigned = std::all_of(m.begin(), m.end(), [](const ManifestEntry& e) { return e.split.has_value(); });
  if (cfg.resplit || !all_assigned) m = stratified_split(m, cfg.ratios, cfg.split_seed);
  return m;
}

PipelineData load_pipeline_data(const ExperimentConfig& cfg, Pipeline p, const Manifest& manifest) {
  switch (p) {
    case Pipeline::random_baseline: {
      PipelineData d;
      d.x = Matrix(manifest.size(), 0);
      for (const auto& e : manifest) {
        d.labels.push_back(gad7_label(e.gad7));
        d.scores.push_back(e.gad7);
        d.ids.push_back(e.id);
        d.splits.push_back(*e.split);
      }
      return d;
    }
    case Pipeline::hand_crafted: return hand_crafted_data(cfg, manifest);
    case Pipeline::text_embed:
    case Pipeline::text_embed_weighted: {
      require_input(cfg.inputs.text_embeddings, p, "text_embeddings");
      auto set = load_checked(cfg, *cfg.inputs.text_embeddings, kTranscriptDim);
      return from_design(join_with_manifest(set, manifest), generic_names(kTranscriptDim, "text_"));
    }
    case Pipeline::wav2vec_embed: {
      require_input(cfg.inputs.audio_embeddings, p, "audio_embeddings");
      auto set = load_checked(cfg, *cfg.inputs.audio_embeddings, kAudioEmbedDim);
      return from_design(join_with_manifest(set, manifest), generic_names(kAudioEmbedDim, "audio_"));
    }
    case Pipeline::multimodal: {
      require_input(cfg.inputs.text_cls_embeddings, p, "text_cls_embeddings");
      require_input(cfg.inputs.speech_cls_embeddings, p, "speech_cls_embeddings");
      auto text = load_checked(cfg, *cfg.inputs.text_cls_embeddings, kTextClsDim);
      auto speech = load_checked(cfg, *cfg.inputs.speech_cls_embeddings, kSpeechClsDim);
      auto names = generic_names(kTextClsDim, "text_cls_");
      auto speech_names = generic_names(kSpeechClsDim, "speech_cls_");
      names.insert(names.end(), speech_names.begin(), speech_names.end());
      return from_design(join_with_manifest(concat_sets(text, speech), manifest), std::move(names));
    }
  }
  fail(Errc::ConfigError, "unknown pipeline");
}

// --- training ---------------------------------------------------------------

TrainedModel default_learner(ModelKind kind, const Matrix& x, std::span<const int> y, std::span<const double> w,
                             const FitConfig& cfg) {
  switch (kind) {
    case ModelKind::logreg_l1: return fit_logreg_l1(x, y, w, cfg);
    case ModelKind::svm_rbf: return fit_svm_rbf(x, y, w, cfg);
    case ModelKind::gbc: return fit_gbc(x, y, w, cfg);
  }
  fail(Errc::WrongModelKind, "unknown model kind");
}

TrainOutcome train_pipeline(const ExperimentConfig& cfg, Pipeline p, const PipelineData& data, const Learner& learner) {
  const auto kind = pipeline_model(p);
  if (!kind) fail(Errc::WrongModelKind, fmt::format("pipeline {} trains no model", pipeline_name(p)));

  const Matrix x_train = data.rows(Split::train);
  const auto y_train = data.labels_of(Split::train);
  std::vector<double> w_train;
  if (p == Pipeline::text_embed_weighted) {
    for (int s : data.scores_of(Split::train)) w_train.push_back(sample_weight(s));
  }

  TrainOutcome out;
  const Matrix x_valid = data.rows(Split::valid);
  const auto y_valid = data.labels_of(Split::valid);
  const bool valid_ok = std::count(y_valid.begin(), y_valid.end(), 1) > 0 && std::count(y_valid.begin(), y_valid.end(), 0) > 0;

  if (!cfg.tune || !valid_ok) {
    out.tuning.note = !cfg.tune ? "tuning disabled" : "validation split lacks a class; configured values used";
    out.model = learner(*kind, x_train, y_train, maybe(w_train), cfg.fit);
    return out;
  }

  const std::vector<double>* grid = nullptr;
  switch (*kind) {
    case ModelKind::logreg_l1: out.tuning.parameter = "lambda"; grid = &kLambdaGrid; break;
    case ModelKind::svm_rbf: out.tuning.parameter = "C"; grid = &kCGrid; break;
    case ModelKind::gbc: out.tuning.parameter = "n_trees"; grid = &kTreeGrid; break;
  }

  std::optional<TrainedModel> best;
  double best_auroc = -1.0;
  for (double value : *grid) {
    FitConfig fc = cfg.fit;
    switch (*kind) {
      case ModelKind::logreg_l1: fc.lambda = value; break;
      case ModelKind::svm_rbf: fc.C = value; break;
      case ModelKind::gbc: fc.n_trees = static_cast<int>(value); break;
    }
    TrainedModel model = learner(*kind, x_train, y_train, maybe(w_train), fc);
    const double a = auroc(predict_scores(model, x_valid), y_valid);
    out.tuning.grid.push_back({value, a});
    if (a > best_auroc) {
      best_auroc = a;
      best = std::move(model);
      out.tuning.selected = value;
    }
  }
  out.model = std::move(*best);
  return out;
}

// --- evaluation -------------------------------------------------------------

double operating_threshold(std::optional<ModelKind> kind) noexcept {
  return !kind || emits_probabilities(*kind) ? 0.5 : 0.0;
}

PipelineResult evaluate_on_test(Pipeline p, const PipelineData& data, std::optional<TrainedModel> model, Tuning tuning,
                                std::uint64_t seed) {
  PipelineResult r;
  r.pipeline = p;
  r.n_train = data.count(Split::train);
  r.n_valid = data.count(Split::valid);
  r.n_test = data.count(Split::test);
  const auto y = data.labels_of(Split::test);

  std::vector<double> scores;
  if (model) {
    scores = predict_scores(*model, data.rows(Split::test));
  } else {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    scores.resize(y.size());
    for (double& s : scores) s = unit(rng);
  }
  r.eval = classification_report(scores, y, operating_threshold(model ? std::optional(model->kind) : std::nullopt));
  const auto pos = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
  if (pos > 0 && pos < y.size()) r.roc = roc_curve(scores, y);
  if (pos > 0) r.pr = pr_curve(scores, y);
  r.model = std::move(model);
  r.tuning = std::move(tuning);
  return r;
}

RunReport run_experiment(const ExperimentConfig& cfg, const Learner& learner) {
  RunReport report;
  report.config = to_json(cfg);
  const Manifest manifest = prepare_manifest(cfg);
  for (Pipeline p : cfg.pipelines) {
    const PipelineData data = load_pipeline_data(cfg, p, manifest);
    if (data.count(Split::train) == 0 || data.count(Split::test) == 0) {
      fail(Errc::InvalidInput, fmt::format("pipeline {} has an empty train or test split", pipeline_name(p)));
    }
    if (p == Pipeline::random_baseline) {
      Tuning none;
      none.note = "no model";
      report.rows.push_back(evaluate_on_test(p, data, std::nullopt, std::move(none), cfg.seed));
    } else {
      auto trained = train_pipeline(cfg, p, data, learner);
      report.rows.push_back(evaluate_on_test(p, data, std::move(trained.model), std::move(trained.tuning), cfg.seed));
    }
  }
  return report;
}

// --- output -----------------------------------------------------------------

json report_json(const RunReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    const auto name = std::string(pipeline_name(row.pipeline));
    json tuning = {{"parameter", row.tuning.parameter.empty() ? json(nullptr) : json(row.tuning.parameter)},
                   {"selected", row.tuning.selected ? json(*row.tuning.selected) : json(nullptr)},
                   {"note", row.tuning.note}};
    json grid = json::array();
    for (const auto& g : row.tuning.grid) {
      grid.push_back({{"value", g.value}, {"valid_auroc", g.valid_auroc ? json(*g.valid_auroc) : json(nullptr)}});
    }
    tuning["grid"] = std::move(grid);
    rows.push_back({
        {"pipeline", name},
        {"name", pipeline_display_name(row.pipeline)},
        {"model", row.model ? json(model_kind_name(row.model->kind)) : json(nullptr)},
        {"model_config", row.model ? to_json(row.model->config) : json(nullptr)},
        {"split_sizes", {{"train", row.n_train}, {"valid", row.n_valid}, {"test", row.n_test}}},
        {"metrics", to_json(row.eval)},
        {"tuning", std::move(tuning)},
        {"files",
         {{"roc", name + "/roc.csv"},
          {"pr", name + "/pr.csv"},
          {"model", row.model ? json("models/" + name + ".json") : json(nullptr)}}},
    });
  }
  return {{"format", kReportFormat},
          {"version", kReportVersion},
          {"feature_registry", kRegistryVersion},
          {"model_format", {{"name", kModelFormat}, {"version", kModelVersion}}},
          {"config", r.config},
          {"rows", std::move(rows)}};
}

std::string report_table(const RunReport& r) {
  const std::array<std::string, 5> header = {"Model", "Precision", "Recall", "F1", "AUROC"};
  std::vector<std::array<std::string, 5>> cells;
  for (const auto& row : r.rows) {
    const auto& e = row.eval;
    cells.push_back({std::string(pipeline_display_name(row.pipeline)), fmt::format("{:.2f}", e.precision),
                     fmt::format("{:.2f}", e.recall), fmt::format("{:.2f}", e.f1),
                     e.auroc ? fmt::format("{:.2f}", *e.auroc) : std::string("n/a")});
  }
  std::array<std::size_t, 5> width{};
  for (std::size_t c = 0; c < 5; ++c) {
    width[c] = header[c].size();
    for (const auto& row : cells) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  auto emit = [&](const std::array<std::string, 5>& row) {
    out += '|';
    for (std::size_t c = 0; c < 5; ++c) {
      out += c == 0 ? fmt::format(" {:<{}} |", row[c], width[c]) : fmt::format(" {:>{}} |", row[c], width[c]);
    }
    out += '\n';
  };
  emit(header);
  out += '|';
  for (std::size_t c = 0; c < 5; ++c) {
    out += c == 0 ? fmt::format(":{:-<{}}|", "", width[c] + 1) : fmt::format("{:-<{}}:|", "", width[c] + 1);
  }
  out += '\n';
  for (const auto& row : cells) emit(row);
  return out;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) fail(Errc::IoFailure, fmt::format("cannot write {}", path.string()));
}

}  // namespace

void emit_report(const RunReport& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "models", ec);
  if (ec) fail(Errc::IoFailure, fmt::format("cannot create {}: {}", dir.string(), ec.message()));
  write_text(dir / "report.json", report_json(r).dump(2) + "\n");
  write_text(dir / "report.md", report_table(r));
  for (const auto& row : r.rows) {
    const auto name = std::string(pipeline_name(row.pipeline));
    std::filesystem::create_directories(dir / name, ec);
    if (ec) fail(Errc::IoFailure, fmt::format("cannot create {}: {}", (dir / name).string(), ec.message()));
    for (const auto& [file, curve] : {std::pair{"roc.csv", &row.roc}, std::pair{"pr.csv", &row.pr}}) {
      std::ostringstream csv;
      write_curve_csv(csv, *curve);
      write_text(dir / name / file, csv.str());
    }
    if (row.model) write_text(dir / "models" / (name + ".json"), model_to_json(*row.model).dump(2) + "\n");
  }
}

}  // namespace anx
