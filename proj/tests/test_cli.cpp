#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(ANX_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("CLI exit codes and end-to-end commands") {
  const fs::path dir = fs::temp_directory_path() / "anx_cli_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string d = dir.string();

  CHECK(run("") == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("run") == 2);

  write(dir / "synth.json", R"({"n": 12, "duration_range_s": [0.5, 1.0], "seed": 4})");
  REQUIRE(run("synth --config " + d + "/synth.json --embeddings --out " + d + "/data") == 0);
  CHECK(fs::exists(dir / "data/manifest.jsonl"));
  CHECK(fs::exists(dir / "data/embeddings/audio.jsonl"));
  CHECK(slurp(dir / "data/embeddings/audio.jsonl").rfind("# ", 0) == 0);
  write(dir / "bad_synth.json", R"({"n": 12, "colour": "blue"})");
  CHECK(run("synth --config " + d + "/bad_synth.json --out " + d + "/x") == 2);
  write(dir / "bad_voice.json", R"({"n": 12, "f0_mean": 20})");
  CHECK(run("synth --config " + d + "/bad_voice.json --out " + d + "/x") == 2);

  // preassigned splits keep every split populated for the small set
  REQUIRE(run("split --manifest " + d + "/data/manifest.jsonl --ratios 0.5 0.25 0.25 --seed 1 --out " + d +
              "/data/manifest.jsonl") == 0);
  REQUIRE(run("extract --manifest " + d + "/data/manifest.jsonl --threads 1 --out " + d + "/data/features.csv") == 0);

  auto cfg = nlohmann::json::parse(slurp(dir / "data/experiment.json"));
  cfg["inputs"]["features"] = "features.csv";
  cfg["pipelines"] = {"random_baseline", "hand_crafted", "wav2vec_embed"};
  write(dir / "data/exp.json", cfg.dump());

  REQUIRE(run("run --config " + d + "/data/exp.json --out " + d + "/r1") == 0);
  REQUIRE(run("run --config " + d + "/data/exp.json --out " + d + "/r2") == 0);
  CHECK(slurp(dir / "r1/report.json") == slurp(dir / "r2/report.json"));
  CHECK(slurp(dir / "r1/report.md") == slurp(dir / "r2/report.md"));
  CHECK(run("run --config " + d + "/data/exp.json --seed 5 --out " + d + "/r3") == 0);
  CHECK(slurp(dir / "r1/report.json") != slurp(dir / "r3/report.json"));

  CHECK(run("train --config " + d + "/data/exp.json --pipeline hand_crafted --out " + d + "/model.json") == 0);
  CHECK(run("eval --config " + d + "/data/exp.json --pipeline hand_crafted --model " + d + "/model.json --out " + d + "/ev") == 0);
  CHECK(fs::exists(dir / "ev/report.json"));
  CHECK(run("importance --config " + d + "/data/exp.json --model " + d + "/model.json --out " + d + "/imp.csv") == 0);
  CHECK(slurp(dir / "imp.csv").find("F0_semitone_mean") != std::string::npos);
  CHECK(run("importance --config " + d + "/data/exp.json --pipeline wav2vec_embed --model " + d + "/model.json --out " + d +
            "/imp2.csv") == 3);

  write(dir / "data/unknown_key.json", R"({"manifest": "manifest.jsonl", "pipeline": "hand_crafted", "epochs": 3})");
  CHECK(run("run --config " + d + "/data/unknown_key.json --out " + d + "/r4") == 2);
  write(dir / "data/one_cls.json",
        R"({"manifest": "manifest.jsonl", "pipeline": "multimodal", "inputs": {"text_cls_embeddings": "embeddings/text_cls.jsonl"}})");
  CHECK(run("run --config " + d + "/data/one_cls.json --out " + d + "/r5") == 3);
  write(dir / "data/no_manifest.json", R"({"manifest": "absent.jsonl", "pipeline": "hand_crafted"})");
  CHECK(run("run --config " + d + "/data/no_manifest.json --out " + d + "/r6") == 3);
  CHECK(run("run --config " + d + "/missing.json --out " + d + "/r7") != 0);

  fs::remove_all(dir);
}
