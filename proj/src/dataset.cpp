#include "anx/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <unordered_set>

#include <fmt/format.h>
#include <json.hpp>

#include "anx/error.hpp"

namespace anx {

using nlohmann::json;

std::string_view split_name(Split s) noexcept {
  switch (s) {
    case Split::train: return "train";
    case Split::valid: return "valid";
    case Split::test: return "test";
  }
  return "train";
}

std::optional<Split> parse_split(std::string_view name) noexcept {
  if (name == "train") return Split::train;
  if (name == "valid") return Split::valid;
  if (name == "test") return Split::test;
  return std::nullopt;
}

std::string_view level_name(AnxietyLevel level) noexcept {
  switch (level) {
    case AnxietyLevel::none: return "none";
    case AnxietyLevel::mild: return "mild";
    case AnxietyLevel::moderate: return "moderate";
    case AnxietyLevel::severe: return "severe";
  }
  return "none";
}

namespace {

void check_score(int score) {
  if (score < 0 || score > kGad7Max) {
    fail(Errc::ScoreOutOfRange, fmt::format("GAD-7 score {} outside [0, {}]", score, kGad7Max));
  }
}

}  // namespace

Manifest parse_manifest(std::istream& in) {
  Manifest out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(Errc::MalformedLine, e.what(), line_no);
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("gad7") ||
        !j["gad7"].is_number_integer()) {
      fail(Errc::MalformedLine, "expected {\"id\": string, \"gad7\": integer}", line_no);
    }
    ManifestEntry e;
    e.id = j["id"].get<std::string>();
    e.gad7 = j["gad7"].get<int>();
    if (e.gad7 < 0 || e.gad7 > kGad7Max) {
      fail(Errc::ScoreOutOfRange, fmt::format("GAD-7 score {} for '{}'", e.gad7, e.id), line_no);
    }
    if (auto it = j.find("audio_path"); it != j.end() && !it->is_null()) {
      if (!it->is_string()) fail(Errc::MalformedLine, "audio_path must be a string", line_no);
      e.audio_path = it->get<std::string>();
    }
    if (auto it = j.find("split"); it != j.end() && !it->is_null()) {
      const auto s = it->is_string() ? parse_split(it->get<std::string>()) : std::nullopt;
      if (!s) fail(Errc::MalformedLine, "split must be train|valid|test", line_no);
      e.split = s;
    }
    if (!seen.insert(e.id).second) fail(Errc::DuplicateId, fmt::format("id '{}'", e.id), line_no);
    out.push_back(std::move(e));
  }
  return out;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoFailure, fmt::format("cannot open manifest {}", path.string()));
  return parse_manifest(in);
}

void write_manifest(std::ostream& out, std::span<const ManifestEntry> entries) {
  for (const auto& e : entries) {
    json j;
    j["id"] = e.id;
    j["gad7"] = e.gad7;
    if (e.audio_path) j["audio_path"] = *e.audio_path;
    if (e.split) j["split"] = std::string(split_name(*e.split));
    out << j.dump() << '\n';
  }
}

void save_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries) {
  std::ofstream out(path);
  if (!out) fail(Errc::IoFailure, fmt::format("cannot write manifest {}", path.string()));
  write_manifest(out, entries);
  if (!out) fail(Errc::IoFailure, fmt::format("short write to {}", path.string()));
}

AnxietyLevel gad7_bucket(int score) {
  check_score(score);
  if (score <= 4) return AnxietyLevel::none;
  if (score <= 9) return AnxietyLevel::mild;
  if (score <= 14) return AnxietyLevel::moderate;
  return AnxietyLevel::severe;
}

int binarize(AnxietyLevel level) noexcept { return level == AnxietyLevel::none ? 0 : 1; }

double sample_weight(int score) {
  check_score(score);
  return static_cast<double>(score + 1) / 22.0;
}

std::array<std::size_t, 3> apportion(std::size_t n, const SplitRatios& r) {
  const std::array<double, 3> ratios = {r.train, r.valid, r.test};
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainder{};
  std::size_t assigned = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    const double quota = static_cast<double>(n) * ratios[k];
    counts[k] = static_cast<std::size_t>(std::floor(quota));
    remainder[k] = quota - static_cast<double>(counts[k]);
    assigned += counts[k];
  }
  std::array<std::size_t, 3> order = {0, 1, 2};
  // Largest fractional part first; earlier split wins ties.
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < n; k = (k + 1) % 3, ++assigned) ++counts[order[k]];
  return counts;
}

Manifest stratified_split(std::span<const ManifestEntry> entries, const SplitRatios& ratios,
                          std::uint64_t seed) {
  if (!(ratios.train > 0.0 && ratios.valid > 0.0 && ratios.test > 0.0) ||
      std::abs(ratios.train + ratios.valid + ratios.test - 1.0) > 1e-9) {
    fail(Errc::InvalidInput, "split ratios must be positive and sum to 1");
  }
  if (entries.empty()) fail(Errc::EmptyClass, "no entries to split");

  Manifest out(entries.begin(), entries.end());
  std::mt19937_64 rng(seed);
  for (int label = 0; label <= 1; ++label) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (gad7_label(out[i].gad7) == label) members.push_back(i);
    }
    if (members.empty()) continue;
    std::shuffle(members.begin(), members.end(), rng);
    const auto counts = apportion(members.size(), ratios);
    std::size_t k = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      for (std::size_t c = 0; c < counts[s]; ++c) out[members[k++]].split = static_cast<Split>(s);
    }
  }
  return out;
}

}  // namespace anx
