#include "anx/representation_ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include "anx/error.hpp"

namespace anx {

using nlohmann::json;

namespace {

bool skip_line(const std::string& line) {
  const auto first = line.find_first_not_of(" \t\r");
  return first == std::string::npos || line[first] == '#';
}

json parse_line(const std::string& line, std::size_t line_no) {
  try {
    return json::parse(line);
  } catch (const json::out_of_range& e) {
    fail(Errc::NonFiniteValue, e.what(), line_no);  // number overflow
  } catch (const json::exception& e) {
    fail(Errc::MalformedLine, e.what(), line_no);
  }
}

}  // namespace

const std::vector<double>& EmbeddingSet::at(const std::string& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) fail(Errc::MissingId, fmt::format("id '{}'", id));
  return records_[it->second].vector;
}

void EmbeddingSet::add(EmbeddingRecord record) {
  if (records_.empty() && dimension_ == 0) dimension_ = record.vector.size();
  if (record.vector.size() != dimension_) {
    fail(Errc::DimensionMismatch,
         fmt::format("'{}' has {} values, expected {}", record.id, record.vector.size(), dimension_));
  }
  for (double v : record.vector) {
    if (!std::isfinite(v)) fail(Errc::NonFiniteValue, fmt::format("non-finite value in '{}'", record.id));
  }
  if (index_.contains(record.id)) fail(Errc::DuplicateId, fmt::format("id '{}'", record.id));
  index_.emplace(record.id, records_.size());
  records_.push_back(std::move(record));
}

EmbeddingSet parse_embeddings(std::istream& in) {
  EmbeddingSet set;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    const json j = parse_line(line, line_no);
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("vector") ||
        !j["vector"].is_array()) {
      fail(Errc::MalformedLine, "expected {\"id\": string, \"vector\": [...]}", line_no);
    }
    EmbeddingRecord rec;
    rec.id = j["id"].get<std::string>();
    rec.vector.reserve(j["vector"].size());
    for (const auto& v : j["vector"]) {
      if (!v.is_number()) fail(Errc::MalformedLine, "vector entries must be numbers", line_no);
      rec.vector.push_back(v.get<double>());
    }
    if (rec.vector.empty()) fail(Errc::DimensionMismatch, "empty vector", line_no);
    try {
      set.add(std::move(rec));
    } catch (const Error& e) {
      throw Error(e.code(), e.what(), line_no);
    }
  }
  if (set.size() == 0) fail(Errc::EmptyFile, "no embedding records");
  return set;
}

EmbeddingSet load_embedding_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoFailure, fmt::format("cannot open {}", path.string()));
  return parse_embeddings(in);
}

void write_embeddings(std::ostream& out, const EmbeddingSet& set, std::string_view header) {
  if (!header.empty()) {
    std::string line(header);
    std::replace(line.begin(), line.end(), '\n', ' ');
    std::replace(line.begin(), line.end(), '\r', ' ');
    out << "# " << line << '\n';
  }
  for (const auto& rec : set.records()) {
    out << "{\"id\":" << json(rec.id).dump() << ",\"vector\":[";
    for (std::size_t k = 0; k < rec.vector.size(); ++k) {
      if (k) out << ',';
      out << fmt::format("{:.9g}", rec.vector[k]);
    }
    out << "]}\n";
  }
}

void save_embedding_file(const std::filesystem::path& path, const EmbeddingSet& set, std::string_view header) {
  std::ofstream out(path);
  if (!out) fail(Errc::IoFailure, fmt::format("cannot write {}", path.string()));
  write_embeddings(out, set, header);
  if (!out) fail(Errc::IoFailure, fmt::format("short write to {}", path.string()));
}

std::vector<double> mean_pool(const Matrix& frames) {
  if (frames.rows() == 0) fail(Errc::EmptySequence, "cannot pool an empty sequence");
  std::vector<double> out(frames.cols(), 0.0);
  for (std::size_t t = 0; t < frames.rows(); ++t) {
    const auto row = frames.row(t);
    for (std::size_t d = 0; d < out.size(); ++d) out[d] += row[d];
  }
  const double n = static_cast<double>(frames.rows());
  for (double& v : out) v /= n;
  return out;
}

std::vector<double> concat(std::span<const double> text_vec, std::span<const double> speech_vec) {
  if (text_vec.empty() || speech_vec.empty()) fail(Errc::InvalidInput, "concat needs two non-empty vectors");
  std::vector<double> out;
  out.reserve(text_vec.size() + speech_vec.size());
  out.insert(out.end(), text_vec.begin(), text_vec.end());
  out.insert(out.end(), speech_vec.begin(), speech_vec.end());
  return out;
}

EmbeddingSet concat_sets(const EmbeddingSet& text, const EmbeddingSet& speech) {
  EmbeddingSet out(text.dimension() + speech.dimension());
  for (const auto& rec : text.records()) {
    if (!speech.contains(rec.id)) continue;
    out.add({rec.id, concat(rec.vector, speech.at(rec.id))});
  }
  return out;
}

DesignMatrix join_with_manifest(const EmbeddingSet& set, std::span<const ManifestEntry> manifest,
                                bool strict) {
  DesignMatrix dm;
  dm.x = Matrix(0, set.dimension());
  for (const auto& e : manifest) {
    if (!set.contains(e.id)) {
      if (strict) fail(Errc::MissingId, fmt::format("manifest id '{}' has no embedding", e.id));
      ++dm.missing;
      continue;
    }
    dm.x.push_row(set.at(e.id));
    dm.labels.push_back(gad7_label(e.gad7));
    dm.scores.push_back(e.gad7);
    dm.ids.push_back(e.id);
    dm.splits.push_back(e.split.value_or(Split::train));
  }
  return dm;
}

std::unordered_map<std::string, Annotation> parse_annotations(std::istream& in) {
  std::unordered_map<std::string, Annotation> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skip_line(line)) continue;
    const json j = parse_line(line, line_no);
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string()) {
      fail(Errc::MalformedLine, "annotation needs a string id", line_no);
    }
    const auto emotion = j.contains("emotion") && j["emotion"].is_string()
                             ? parse_emotion(j["emotion"].get<std::string>())
                             : std::nullopt;
    const auto sentiment = j.contains("sentiment") && j["sentiment"].is_string()
                               ? parse_sentiment(j["sentiment"].get<std::string>())
                               : std::nullopt;
    if (!emotion) fail(Errc::MalformedLine, "emotion must be anger|fear|joy|love|sadness", line_no);
    if (!sentiment) fail(Errc::MalformedLine, "sentiment must be positive|negative", line_no);
    const auto id = j["id"].get<std::string>();
    if (!out.emplace(id, Annotation{*emotion, *sentiment}).second) {
      fail(Errc::DuplicateId, fmt::format("id '{}'", id), line_no);
    }
  }
  return out;
}

std::unordered_map<std::string, Annotation> load_annotation_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoFailure, fmt::format("cannot open {}", path.string()));
  return parse_annotations(in);
}

}  // namespace anx
