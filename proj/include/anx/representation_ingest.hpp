#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "anx/dataset.hpp"
#include "anx/dsp_features.hpp"
#include "anx/matrix.hpp"

namespace anx {

/// Expected dimensions of the ingested representations.
inline constexpr std::size_t kTranscriptDim = 768;
inline constexpr std::size_t kAudioEmbedDim = 512;
inline constexpr std::size_t kTextClsDim = 1024;
inline constexpr std::size_t kSpeechClsDim = 768;

struct EmbeddingRecord {
  std::string id;
  std::vector<double> vector;
};

/// Uniform-dimension embeddings keyed by id; insertion order is kept for output.
class EmbeddingSet {
 public:
  EmbeddingSet() = default;
  explicit EmbeddingSet(std::size_t dimension) : dimension_(dimension) {}

  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool contains(const std::string& id) const { return index_.contains(id); }
  const std::vector<double>& at(const std::string& id) const;
  const std::vector<EmbeddingRecord>& records() const noexcept { return records_; }

  /// Throws DimensionMismatch, DuplicateId or NonFiniteValue.
  void add(EmbeddingRecord record);

  friend bool operator==(const EmbeddingSet& a, const EmbeddingSet& b) {
    return a.dimension_ == b.dimension_ && a.records_.size() == b.records_.size() &&
           std::equal(a.records_.begin(), a.records_.end(), b.records_.begin(),
                      [](const auto& x, const auto& y) { return x.id == y.id && x.vector == y.vector; });
  }

 private:
  std::size_t dimension_ = 0;
  std::vector<EmbeddingRecord> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// JSONL, one {"id": string, "vector": [reals]} per line. Blank lines and
/// lines starting with '#' are skipped. Dimension comes from the first record.
EmbeddingSet parse_embeddings(std::istream& in);
EmbeddingSet load_embedding_file(const std::filesystem::path& path);

/// Values are written with 9 significant digits. A non-empty `header` is
/// emitted first as a single `# ...` comment line (newlines become spaces).
void write_embeddings(std::ostream& out, const EmbeddingSet& set, std::string_view header = {});
void save_embedding_file(const std::filesystem::path& path, const EmbeddingSet& set,
                         std::string_view header = {});

/// Column-wise mean of a T x D sequence. Throws EmptySequence.
std::vector<double> mean_pool(const Matrix& frames);

/// Text components first, then speech. Throws InvalidInput on an empty part.
std::vector<double> concat(std::span<const double> text_vec, std::span<const double> speech_vec);

/// Fuses two sets id-by-id (ids of `text` that also occur in `speech`).
EmbeddingSet concat_sets(const EmbeddingSet& text, const EmbeddingSet& speech);

struct DesignMatrix {
  Matrix x;
  std::vector<int> labels;
  std::vector<int> scores;
  std::vector<std::string> ids;
  std::vector<Split> splits;  // Split::train when the manifest entry has none
  std::size_t missing = 0;
};

/// Rows in manifest order. strict: MissingId on the first absent id;
/// otherwise absent ids are dropped and counted in `missing`.
DesignMatrix join_with_manifest(const EmbeddingSet& set, std::span<const ManifestEntry> manifest,
                                bool strict = true);

/// {"id", "emotion": anger|fear|joy|love|sadness, "sentiment": positive|negative}.
std::unordered_map<std::string, Annotation> parse_annotations(std::istream& in);
std::unordered_map<std::string, Annotation> load_annotation_file(const std::filesystem::path& path);

}  // namespace anx
