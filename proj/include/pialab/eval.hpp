#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pialab/attacks.hpp"

namespace pialab {

// One ROC operating point. `threshold` is in the raw-score orientation used
// by classify(): predicting member on score < threshold realizes exactly
// (fpr, tpr). Thresholds increase along the curve (equivalently: strictly
// decrease when scores are negated so that higher = positive); the final
// point is (1, 1) at threshold +inf.
struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;
};

// Members are the positive class; lower score = more member-like. Ties share
// a single operating point (both axes step together).
RocCurve roc_curve(const std::vector<AttackScore>& scores);

// Trapezoidal area under the curve.
double auc(const RocCurve& curve);

// O(n^2) pairwise oracle: fraction of (member, holdout) pairs where the
// member scored strictly lower, ties counted 1/2. Equals auc(roc_curve(...)).
double pairwise_auc(const std::vector<AttackScore>& scores);

// Max TPR over operating points with FPR <= fpr_target; never interpolates,
// so the returned TPR is realized by an actual threshold.
double tpr_at_fpr(const RocCurve& curve, double fpr_target);

// Writes (fpr, tpr) CSV plus a log-log SVG with both axes clipped below 1e-4.
void log_roc_export(const RocCurve& curve, const std::string& csv_path,
                    const std::string& svg_path);

// Reads back the (fpr, tpr) pairs written by log_roc_export.
std::vector<std::pair<double, double>> read_roc_csv(const std::string& csv_path);

struct MetricsReport {
  std::string method;
  double t = 0.0;
  double p = 2.0;
  double auc = 0.0;
  double tpr_at_1pct_fpr = 0.0;
  double tpr_at_01pct_fpr = 0.0;
  long long n_members = 0;
  long long n_holdout = 0;
  long long total_queries = 0;
  double wall_time_seconds = 0.0;
};

// Aggregates a single-method score set; throws if methods are mixed.
MetricsReport make_report(const std::vector<AttackScore>& scores, double wall_time_seconds);

std::string report_to_json(const MetricsReport& r);
MetricsReport report_from_json(const std::string& text);

}  // namespace pialab
