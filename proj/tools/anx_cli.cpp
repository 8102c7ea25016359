// Command-line front end: synth, extract, split, train, eval, run, importance.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "anx/dataset.hpp"
#include "anx/dsp_features.hpp"
#include "anx/error.hpp"
#include "anx/learners.hpp"
#include "anx/pipeline.hpp"
#include "anx/representation_ingest.hpp"
#include "anx/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kConfig = 2, kInput = 3, kNumeric = 4 };

int exit_code(anx::Errc code) {
  switch (code) {
    case anx::Errc::ConfigError:
    case anx::Errc::InvalidSpec: return kConfig;
    case anx::Errc::NumericFailure: return kNumeric;
    default: return kInput;
  }
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) anx::fail(anx::Errc::MissingInput, fmt::format("cannot open {}", path.string()));
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    anx::fail(anx::Errc::ConfigError, fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) anx::fail(anx::Errc::IoFailure, fmt::format("cannot write {}", path.string()));
}

template <typename T>
void take(const json& j, const char* key, T& field) {
  if (auto it = j.find(key); it != j.end()) {
    try {
      field = it->get<T>();
    } catch (const json::exception&) {
      anx::fail(anx::Errc::ConfigError, fmt::format("synth.{} has the wrong type", key));
    }
  }
}

void take_range(const json& j, const char* key, double (&field)[2]) {
  std::optional<std::array<double, 2>> v;
  if (auto it = j.find(key); it != j.end()) {
    try {
      v = it->get<std::array<double, 2>>();
    } catch (const json::exception&) {
      anx::fail(anx::Errc::ConfigError, fmt::format("synth.{} must be [lo, hi]", key));
    }
    field[0] = (*v)[0];
    field[1] = (*v)[1];
  }
}

struct SynthOptions {
  anx::SynthDatasetSpec dataset;
  double separation = 1.0;
  std::size_t informative = 3;
};

SynthOptions synth_options(const json& j) {
  static const std::set<std::string> known = {"n",           "f0_mean",          "f0_spread_st",  "class1_f0_shift_st",
                                              "jitter_range_pct", "shimmer_range_pct", "snr_range_db", "duration_range_s",
                                              "n_harmonics", "seed",             "separation",    "informative"};
  if (!j.is_object()) anx::fail(anx::Errc::ConfigError, "synth config must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) anx::fail(anx::Errc::ConfigError, fmt::format("unknown synth key '{}'", key));
  }
  SynthOptions o;
  auto& d = o.dataset;
  take(j, "n", d.n);
  take(j, "f0_mean", d.base.f0_mean);
  take(j, "f0_spread_st", d.f0_spread_st);
  take(j, "class1_f0_shift_st", d.class1_f0_shift_st);
  take_range(j, "jitter_range_pct", d.jitter_range_pct);
  take_range(j, "shimmer_range_pct", d.shimmer_range_pct);
  take_range(j, "snr_range_db", d.snr_range_db);
  take_range(j, "duration_range_s", d.duration_range_s);
  take(j, "n_harmonics", d.base.n_harmonics);
  take(j, "seed", d.seed);
  take(j, "separation", o.separation);
  take(j, "informative", o.informative);
  return o;
}

void save_with_header(const fs::path& path, const anx::EmbeddingSet& set, std::string_view label) {
  std::ostringstream out;
  anx::write_embeddings(out, set, fmt::format("synthetic {} embeddings, dim {}", label, set.dimension()));
  write_file(path, out.str());
}

void apply_seed(anx::ExperimentConfig& cfg, std::optional<std::uint64_t> seed) {
  if (!seed) return;
  cfg.seed = *seed;
  cfg.split_seed = *seed;
  cfg.fit.seed = *seed;
}

anx::Pipeline pipeline_arg(const std::string& name) {
  auto p = anx::parse_pipeline(name);
  if (!p) anx::fail(anx::Errc::ConfigError, fmt::format("unknown pipeline '{}'", name));
  return *p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anxiety screening experiments from speech features and embeddings"};
  app.require_subcommand(1);

  std::string config_path, out_path, manifest_path, pipeline_name = "hand_crafted", model_path, annotations,
      audio_root;
  std::optional<std::uint64_t> seed;
  std::size_t n = 0;
  bool embeddings = false;
  int threads = 0;
  std::vector<double> ratios = {0.722, 0.128, 0.150};

  auto* synth = app.add_subcommand("synth", "Write a synthetic voice dataset (WAV + manifest)");
  synth->add_option("--config", config_path, "Synth JSON config");
  synth->add_option("--seed", seed, "Random seed");
  synth->add_option("--out", out_path, "Output directory")->required();
  synth->add_option("--n", n, "Number of recordings");
  synth->add_flag("--embeddings", embeddings, "Also write synthetic embedding files and an experiment config");

  auto* extract = app.add_subcommand("extract", "Extract the acoustic feature registry to CSV");
  extract->add_option("--manifest", manifest_path, "Manifest JSONL")->required();
  extract->add_option("--annotations", annotations, "Emotion/sentiment JSONL");
  extract->add_option("--audio-root", audio_root, "Directory for relative audio paths");
  extract->add_option("--threads", threads, "Worker threads (0 = all cores)");
  extract->add_option("--out", out_path, "Output CSV")->required();

  auto* split = app.add_subcommand("split", "Assign stratified train/valid/test splits");
  split->add_option("--manifest", manifest_path, "Manifest JSONL")->required();
  split->add_option("--ratios", ratios, "train valid test ratios")->expected(3);
  split->add_option("--seed", seed, "Random seed");
  split->add_option("--out", out_path, "Output manifest")->required();

  auto* train = app.add_subcommand("train", "Fit one pipeline's model on the train split");
  train->add_option("--config", config_path, "Experiment JSON config")->required();
  train->add_option("--pipeline", pipeline_name, "Pipeline name");
  train->add_option("--seed", seed, "Random seed");
  train->add_option("--out", out_path, "Output model JSON")->required();

  auto* eval = app.add_subcommand("eval", "Evaluate a saved model on the test split");
  eval->add_option("--config", config_path, "Experiment JSON config")->required();
  eval->add_option("--pipeline", pipeline_name, "Pipeline name");
  eval->add_option("--model", model_path, "Model JSON")->required();
  eval->add_option("--seed", seed, "Random seed");
  eval->add_option("--out", out_path, "Report directory")->required();

  auto* run = app.add_subcommand("run", "Run every configured pipeline end to end");
  run->add_option("--config", config_path, "Experiment JSON config")->required();
  run->add_option("--seed", seed, "Random seed");
  run->add_option("--out", out_path, "Report directory (overrides output_dir)");

  auto* importance = app.add_subcommand("importance", "Linear Shapley feature importance of a logreg model");
  importance->add_option("--config", config_path, "Experiment JSON config")->required();
  importance->add_option("--pipeline", pipeline_name, "Pipeline name");
  importance->add_option("--model", model_path, "Model JSON")->required();
  importance->add_option("--seed", seed, "Random seed");
  importance->add_option("--out", out_path, "Output CSV (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  try {
    if (*synth) {
      SynthOptions o = config_path.empty() ? SynthOptions{} : synth_options(read_json(config_path));
      if (n > 0) o.dataset.n = n;
      if (seed) o.dataset.seed = *seed;
      const fs::path dir(out_path);
      const auto manifest = anx::synth_dataset(o.dataset, dir);
      if (embeddings) {
        const std::uint64_t s = o.dataset.seed;
        save_with_header(dir / "embeddings/text.jsonl",
                         anx::synth_embeddings(manifest, anx::kTranscriptDim, o.informative, o.separation, s + 1), "text");
        save_with_header(dir / "embeddings/audio.jsonl",
                         anx::synth_embeddings(manifest, anx::kAudioEmbedDim, o.informative, o.separation, s + 2), "audio");
        save_with_header(dir / "embeddings/text_cls.jsonl",
                         anx::synth_embeddings(manifest, anx::kTextClsDim, o.informative, o.separation, s + 3), "text-cls");
        save_with_header(dir / "embeddings/speech_cls.jsonl",
                         anx::synth_embeddings(manifest, anx::kSpeechClsDim, o.informative, o.separation, s + 4),
                         "speech-cls");
        const json experiment = {
            {"manifest", "manifest.jsonl"},
            {"pipelines", {"random_baseline", "hand_crafted", "text_embed", "text_embed_weighted", "wav2vec_embed", "multimodal"}},
            {"inputs",
             {{"text_embeddings", "embeddings/text.jsonl"},
              {"audio_embeddings", "embeddings/audio.jsonl"},
              {"text_cls_embeddings", "embeddings/text_cls.jsonl"},
              {"speech_cls_embeddings", "embeddings/speech_cls.jsonl"}}},
            {"split", {{"seed", s}}},
            {"seed", s},
            {"output_dir", "report"},
        };
        write_file(dir / "experiment.json", experiment.dump(2) + "\n");
      }
      fmt::print("wrote {} recordings to {}\n", manifest.size(), dir.string());
    } else if (*extract) {
      anx::ExperimentConfig cfg;
      cfg.manifest = manifest_path;
      if (!annotations.empty()) cfg.inputs.annotations = annotations;
      if (!audio_root.empty()) cfg.inputs.audio_root = audio_root;
      cfg.threads = threads;
      auto manifest = anx::load_manifest(manifest_path);
      for (auto& e : manifest) e.split = e.split.value_or(anx::Split::train);
      const auto data = anx::load_pipeline_data(cfg, anx::Pipeline::hand_crafted, manifest);
      std::vector<anx::FeatureRow> rows(data.ids.size());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        rows[i].id = data.ids[i];
        std::copy(data.x.row(i).begin(), data.x.row(i).end(), rows[i].features.values.begin());
      }
      std::ostringstream csv;
      anx::write_feature_csv(csv, rows);
      write_file(out_path, csv.str());
      fmt::print("extracted {} x {} features to {}\n", rows.size(), anx::kFeatureDim, out_path);
    } else if (*split) {
      const auto manifest = anx::load_manifest(manifest_path);
      const auto out = anx::stratified_split(manifest, {ratios[0], ratios[1], ratios[2]}, seed.value_or(0));
      anx::save_manifest(out_path, out);
      std::array<std::size_t, 3> counts{};
      for (const auto& e : out) ++counts[static_cast<std::size_t>(*e.split)];
      fmt::print("train {} valid {} test {}\n", counts[0], counts[1], counts[2]);
    } else if (*train) {
      auto cfg = anx::load_experiment_config(config_path);
      apply_seed(cfg, seed);
      const auto p = pipeline_arg(pipeline_name);
      const auto data = anx::load_pipeline_data(cfg, p, anx::prepare_manifest(cfg));
      const auto outcome = anx::train_pipeline(cfg, p, data);
      anx::save_model(out_path, outcome.model);
      if (outcome.tuning.selected) fmt::print("selected {} = {}\n", outcome.tuning.parameter, *outcome.tuning.selected);
      fmt::print("model written to {}\n", out_path);
    } else if (*eval) {
      auto cfg = anx::load_experiment_config(config_path);
      apply_seed(cfg, seed);
      const auto p = pipeline_arg(pipeline_name);
      const auto data = anx::load_pipeline_data(cfg, p, anx::prepare_manifest(cfg));
      std::optional<anx::TrainedModel> model;
      if (p != anx::Pipeline::random_baseline) model = anx::load_model(model_path);
      anx::Tuning tuning;
      tuning.note = "loaded from " + model_path;
      anx::RunReport report;
      report.config = anx::to_json(cfg);
      report.rows.push_back(anx::evaluate_on_test(p, data, std::move(model), std::move(tuning), cfg.seed));
      anx::emit_report(report, out_path);
      fmt::print("{}", anx::report_table(report));
    } else if (*run) {
      auto cfg = anx::load_experiment_config(config_path);
      apply_seed(cfg, seed);
      const fs::path dir = out_path.empty() ? cfg.resolve(cfg.output_dir) : fs::path(out_path);
      const auto report = anx::run_experiment(cfg);
      anx::emit_report(report, dir);
      fmt::print("{}", anx::report_table(report));
    } else if (*importance) {
      auto cfg = anx::load_experiment_config(config_path);
      apply_seed(cfg, seed);
      const auto p = pipeline_arg(pipeline_name);
      const auto data = anx::load_pipeline_data(cfg, p, anx::prepare_manifest(cfg));
      const auto model = anx::load_model(model_path);
      const auto ranked = anx::linear_shapley_importance(model, data.rows(anx::Split::test), data.feature_names);
      std::string csv = "rank,feature,index,importance\n";
      for (std::size_t k = 0; k < ranked.size(); ++k) {
        csv += fmt::format("{},{},{},{:.9g}\n", k + 1, ranked[k].name, ranked[k].index, ranked[k].importance);
      }
      if (out_path.empty()) {
        fmt::print("{}", csv);
      } else {
        write_file(out_path, csv);
      }
    }
  } catch (const anx::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInput;
  }
  return kOk;
}
