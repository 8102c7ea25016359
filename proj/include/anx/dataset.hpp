#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace anx {

inline constexpr int kGad7Max = 21;

enum class Split { train, valid, test };
std::string_view split_name(Split s) noexcept;
std::optional<Split> parse_split(std::string_view name) noexcept;

struct ManifestEntry {
  std::string id;
  std::optional<std::string> audio_path;
  int gad7 = 0;
  std::optional<Split> split;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

using Manifest = std::vector<ManifestEntry>;

enum class AnxietyLevel { none = 0, mild = 1, moderate = 2, severe = 3 };
std::string_view level_name(AnxietyLevel level) noexcept;

/// JSONL: {"id", "gad7", optional "audio_path", optional "split"}. Blank lines
/// are skipped. Throws MalformedLine(n), ScoreOutOfRange, DuplicateId.
Manifest parse_manifest(std::istream& in);
Manifest load_manifest(const std::filesystem::path& path);
void write_manifest(std::ostream& out, std::span<const ManifestEntry> entries);
void save_manifest(const std::filesystem::path& path, std::span<const ManifestEntry> entries);

/// GAD-7 cutpoints 5 / 10 / 15.
AnxietyLevel gad7_bucket(int score);

/// none -> 0; mild, moderate, severe -> 1.
int binarize(AnxietyLevel level) noexcept;
inline int gad7_label(int score) { return binarize(gad7_bucket(score)); }

/// (score + 1) / 22.
double sample_weight(int score);

struct SplitRatios {
  double train = 0.722;
  double valid = 0.128;
  double test = 0.150;
};

/// Per binary class: seeded shuffle, then largest-remainder allocation of the
/// class count over (train, valid, test). Returns a copy with split tags set.
Manifest stratified_split(std::span<const ManifestEntry> entries, const SplitRatios& ratios,
                          std::uint64_t seed);

/// Largest-remainder apportionment of `n` items over the three ratios.
std::array<std::size_t, 3> apportion(std::size_t n, const SplitRatios& ratios);

}  // namespace anx
