#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

namespace anx {

struct EvalReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::optional<double> auroc;  // absent when only one class is present
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double threshold = 0.5;
  bool degenerate = false;  // a precision or recall denominator was zero
};

struct CurvePoint {
  double x = 0.0;
  double y = 0.0;
  double threshold = 0.0;
};

/// ROC: x = FPR, y = TPR. PR: x = recall, y = precision.
struct Curve {
  std::vector<CurvePoint> points;
  double trapezoid_area() const noexcept;
};

/// Mann-Whitney with average ranks for ties. Throws SingleClass.
double auroc(std::span<const double> scores, std::span<const int> labels);

/// One point per distinct threshold (descending), led by (0, 0) at +inf.
Curve roc_curve(std::span<const double> scores, std::span<const int> labels);

/// One point per distinct threshold (descending). Throws NoPositives.
Curve pr_curve(std::span<const double> scores, std::span<const int> labels);

/// Predicts 1 iff score >= threshold.
EvalReport classification_report(std::span<const double> scores, std::span<const int> labels, double threshold);

nlohmann::json to_json(const EvalReport& r);

/// CSV with header `threshold,x,y`; +inf thresholds are written as `inf`.
void write_curve_csv(std::ostream& out, const Curve& curve);

}  // namespace anx
