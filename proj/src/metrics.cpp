#include "anx/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "anx/error.hpp"

namespace anx {

namespace {

struct ClassCounts {
  std::size_t pos = 0;
  std::size_t neg = 0;
};

ClassCounts count_classes(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    fail(Errc::DimensionMismatch, fmt::format("{} scores for {} labels", scores.size(), labels.size()));
  }
  for (double v : scores) {
    if (std::isnan(v)) fail(Errc::NonFiniteValue, "NaN score");
  }
  ClassCounts c;
  for (int y : labels) {
    if (y != 0 && y != 1) fail(Errc::InvalidInput, fmt::format("label {} is not 0/1", y));
    (y == 1 ? c.pos : c.neg)++;
  }
  return c;
}

// Indices by descending score; ties keep input order.
std::vector<std::size_t> descending(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

}  // namespace

double Curve::trapezoid_area() const noexcept {
  double area = 0.0;
  for (std::size_t k = 1; k < points.size(); ++k) {
    area += (points[k].x - points[k - 1].x) * (points[k].y + points[k - 1].y) / 2.0;
  }
  return area;
}

double auroc(std::span<const double> scores, std::span<const int> labels) {
  const auto c = count_classes(scores, labels);
  if (c.pos == 0 || c.neg == 0) fail(Errc::SingleClass, "AUROC needs both classes");

  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Ranks are 1-based; a tie block [i, j) shares the average rank (i + 1 + j) / 2.
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i + 1;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
    const double rank = static_cast<double>(i + 1 + j) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (labels[idx[k]] == 1) pos_rank_sum += rank;
    }
    i = j;
  }
  const double np = static_cast<double>(c.pos);
  const double nn = static_cast<double>(c.neg);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

Curve roc_curve(std::span<const double> scores, std::span<const int> labels) {
  const auto c = count_classes(scores, labels);
  if (c.pos == 0 || c.neg == 0) fail(Errc::SingleClass, "ROC needs both classes");
  const auto idx = descending(scores);
  Curve curve;
  curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < idx.size()) {
    const double thr = scores[idx[i]];
    while (i < idx.size() && scores[idx[i]] == thr) {
      (labels[idx[i]] == 1 ? tp : fp)++;
      ++i;
    }
    curve.points.push_back({static_cast<double>(fp) / static_cast<double>(c.neg),
                            static_cast<double>(tp) / static_cast<double>(c.pos), thr});
  }
  return curve;
}

Curve pr_curve(std::span<const double> scores, std::span<const int> labels) {
  const auto c = count_classes(scores, labels);
  if (c.pos == 0) fail(Errc::NoPositives, "precision-recall needs positives");
  const auto idx = descending(scores);
  Curve curve;
  std::size_t tp = 0, predicted = 0;
  std::size_t i = 0;
  while (i < idx.size()) {
    const double thr = scores[idx[i]];
    while (i < idx.size() && scores[idx[i]] == thr) {
      if (labels[idx[i]] == 1) ++tp;
      ++predicted;
      ++i;
    }
    curve.points.push_back({static_cast<double>(tp) / static_cast<double>(c.pos),
                            static_cast<double>(tp) / static_cast<double>(predicted), thr});
  }
  return curve;
}

EvalReport classification_report(std::span<const double> scores, std::span<const int> labels, double threshold) {
  const auto c = count_classes(scores, labels);
  EvalReport r;
  r.threshold = threshold;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i] == 1) {
      (predicted ? r.tp : r.fn)++;
    } else {
      (predicted ? r.fp : r.tn)++;
    }
  }
  const std::size_t pred_pos = r.tp + r.fp;
  const std::size_t actual_pos = r.tp + r.fn;
  r.degenerate = pred_pos == 0 || actual_pos == 0;
  r.precision = pred_pos ? static_cast<double>(r.tp) / static_cast<double>(pred_pos) : 0.0;
  r.recall = actual_pos ? static_cast<double>(r.tp) / static_cast<double>(actual_pos) : 0.0;
  r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  if (c.pos > 0 && c.neg > 0) r.auroc = auroc(scores, labels);
  return r;
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f1"] = r.f1;
  j["auroc"] = r.auroc ? nlohmann::json(*r.auroc) : nlohmann::json(nullptr);
  j["counts"] = {{"tp", r.tp}, {"fp", r.fp}, {"tn", r.tn}, {"fn", r.fn}};
  j["threshold"] = r.threshold;
  j["degenerate"] = r.degenerate;
  return j;
}

void write_curve_csv(std::ostream& out, const Curve& curve) {
  out << "threshold,x,y\n";
  for (const auto& p : curve.points) {
    if (std::isinf(p.threshold)) {
      out << (p.threshold > 0 ? "inf" : "-inf");
    } else {
      out << fmt::format("{:.17g}", p.threshold);
    }
    out << fmt::format(",{:.17g},{:.17g}\n", p.x, p.y);
  }
}

}  // namespace anx
