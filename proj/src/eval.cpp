#include "pialab/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "framing.hpp"
#include "pialab/errors.hpp"

namespace pialab {

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

RocCurve roc_curve(const std::vector<AttackScore>& scores) {
  long long npos = 0, nneg = 0;
  std::vector<std::pair<double, bool>> v;
  v.reserve(scores.size());
  for (const auto& s : scores) {
    if (!std::isfinite(s.score)) throw invalid_argument_error("roc_curve: non-finite score");
    (s.is_member ? npos : nneg) += 1;
    v.emplace_back(s.score, s.is_member);
  }
  if (npos == 0 || nneg == 0)
    throw invalid_argument_error("roc_curve: need at least one member and one non-member");
  std::sort(v.begin(), v.end());

  // Lower score = member, so sweeping the classify() threshold upward from the
  // smallest score admits samples in ascending-score order; tie groups step
  // both axes at once.
  RocCurve c;
  c.points.push_back({0.0, 0.0, v.front().first});
  long long tp = 0, fp = 0;
  size_t i = 0;
  while (i < v.size()) {
    double val = v[i].first;
    while (i < v.size() && v[i].first == val) {
      (v[i].second ? tp : fp) += 1;
      ++i;
    }
    double thr = i < v.size() ? v[i].first : std::numeric_limits<double>::infinity();
    c.points.push_back({static_cast<double>(fp) / static_cast<double>(nneg),
                        static_cast<double>(tp) / static_cast<double>(npos), thr});
  }
  return c;
}

double auc(const RocCurve& curve) {
  double area = 0.0;
  for (size_t i = 1; i < curve.points.size(); ++i) {
    const RocPoint& a = curve.points[i - 1];
    const RocPoint& b = curve.points[i];
    area += (b.fpr - a.fpr) * 0.5 * (a.tpr + b.tpr);
  }
  return area;
}

double pairwise_auc(const std::vector<AttackScore>& scores) {
  std::vector<double> mem, hold;
  for (const auto& s : scores) (s.is_member ? mem : hold).push_back(s.score);
  if (mem.empty() || hold.empty())
    throw invalid_argument_error("pairwise_auc: need at least one member and one non-member");
  double wins = 0.0;
  for (double m : mem)
    for (double h : hold) {
      if (m < h)
        wins += 1.0;
      else if (m == h)
        wins += 0.5;
    }
  return wins / (static_cast<double>(mem.size()) * static_cast<double>(hold.size()));
}

double tpr_at_fpr(const RocCurve& curve, double fpr_target) {
  if (!(fpr_target > 0.0) || !(fpr_target < 1.0))
    throw invalid_argument_error("tpr_at_fpr: target must be in (0, 1)");
  double best = 0.0;
  for (const RocPoint& pt : curve.points)
    if (pt.fpr <= fpr_target && pt.tpr > best) best = pt.tpr;
  return best;
}

namespace {

constexpr double kLogFloor = 1e-4;

// map a rate to log-log canvas coordinates, clipping below the floor
double log_coord(double v) {
  double c = std::log10(std::max(v, kLogFloor));  // in [-4, 0]
  return (c + 4.0) / 4.0;
}

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

void log_roc_export(const RocCurve& curve, const std::string& csv_path,
                    const std::string& svg_path) {
  {
    std::ofstream os = detail::open_out(csv_path, std::ios::out);
    os << "fpr,tpr\n";
    for (const RocPoint& pt : curve.points) os << fmt17(pt.fpr) << "," << fmt17(pt.tpr) << "\n";
    if (!os) throw io_error("write failed: " + csv_path);
  }

  const double W = 480.0, H = 480.0, M = 56.0;
  auto px = [&](double v) { return M + log_coord(v) * (W - 2 * M); };
  auto py = [&](double v) { return H - M - log_coord(v) * (H - 2 * M); };

  std::ofstream os = detail::open_out(svg_path, std::ios::out);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"480\" height=\"480\" "
        "viewBox=\"0 0 480 480\">\n";
  os << "<rect width=\"480\" height=\"480\" fill=\"white\"/>\n";
  // decade gridlines and labels
  for (int d = -4; d <= 0; ++d) {
    double v = std::pow(10.0, d);
    os << "<line x1=\"" << fmt2(px(v)) << "\" y1=\"" << fmt2(H - M) << "\" x2=\"" << fmt2(px(v))
       << "\" y2=\"" << fmt2(M) << "\" stroke=\"#ddd\"/>\n";
    os << "<line x1=\"" << fmt2(M) << "\" y1=\"" << fmt2(py(v)) << "\" x2=\"" << fmt2(W - M)
       << "\" y2=\"" << fmt2(py(v)) << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << fmt2(px(v)) << "\" y=\"" << fmt2(H - M + 16)
       << "\" font-family=\"monospace\" font-size=\"10\" text-anchor=\"middle\">1e" << d
       << "</text>\n";
    os << "<text x=\"" << fmt2(M - 6) << "\" y=\"" << fmt2(py(v) + 3)
       << "\" font-family=\"monospace\" font-size=\"10\" text-anchor=\"end\">1e" << d
       << "</text>\n";
  }
  // chance diagonal (straight in log-log space)
  os << "<line x1=\"" << fmt2(px(kLogFloor)) << "\" y1=\"" << fmt2(py(kLogFloor)) << "\" x2=\""
     << fmt2(px(1.0)) << "\" y2=\"" << fmt2(py(1.0))
     << "\" stroke=\"#bbb\" stroke-dasharray=\"4 3\"/>\n";
  os << "<polyline fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1.5\" points=\"";
  for (size_t i = 0; i < curve.points.size(); ++i) {
    if (i) os << " ";
    os << fmt2(px(curve.points[i].fpr)) << "," << fmt2(py(curve.points[i].tpr));
  }
  os << "\"/>\n";
  os << "<text x=\"" << fmt2(W / 2) << "\" y=\"" << fmt2(H - 12)
     << "\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"middle\">false positive "
        "rate</text>\n";
  os << "<text x=\"14\" y=\"" << fmt2(H / 2)
     << "\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"middle\" "
        "transform=\"rotate(-90 14 "
     << fmt2(H / 2) << ")\">true positive rate</text>\n";
  os << "</svg>\n";
  if (!os) throw io_error("write failed: " + svg_path);
}

std::vector<std::pair<double, double>> read_roc_csv(const std::string& csv_path) {
  std::ifstream is = detail::open_in(csv_path, std::ios::in);
  std::string line;
  if (!std::getline(is, line) || line != "fpr,tpr")
    throw format_error("roc csv: bad header in " + csv_path);
  std::vector<std::pair<double, double>> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    size_t comma = line.find(',');
    if (comma == std::string::npos) throw format_error("roc csv: malformed row");
    try {
      out.emplace_back(std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw format_error("roc csv: malformed row");
    }
  }
  return out;
}

MetricsReport make_report(const std::vector<AttackScore>& scores, double wall_time_seconds) {
  if (scores.empty()) throw invalid_argument_error("make_report: empty score set");
  MetricsReport r;
  r.method = method_label(scores.front().method);
  r.t = scores.front().t;
  r.p = scores.front().p;
  r.wall_time_seconds = wall_time_seconds;
  for (const auto& s : scores) {
    if (s.method != scores.front().method)
      throw invalid_argument_error("make_report: mixed methods in one report");
    (s.is_member ? r.n_members : r.n_holdout) += 1;
    r.total_queries += s.queries;
  }
  RocCurve curve = roc_curve(scores);
  r.auc = pialab::auc(curve);
  r.tpr_at_1pct_fpr = tpr_at_fpr(curve, 0.01);
  r.tpr_at_01pct_fpr = tpr_at_fpr(curve, 0.001);
  return r;
}

std::string report_to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["method"] = r.method;
  j["t"] = r.t;
  j["p"] = r.p;
  j["auc"] = r.auc;
  j["tpr_at_1pct_fpr"] = r.tpr_at_1pct_fpr;
  j["tpr_at_01pct_fpr"] = r.tpr_at_01pct_fpr;
  j["n_members"] = r.n_members;
  j["n_holdout"] = r.n_holdout;
  j["total_queries"] = r.total_queries;
  j["wall_time_seconds"] = r.wall_time_seconds;
  return j.dump(2) + "\n";
}

MetricsReport report_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception&) {
    throw format_error("report is not valid json");
  }
  if (!j.is_object()) throw format_error("report must be a json object");
  static const char* keys[] = {"method",           "t",         "p",
                               "auc",              "tpr_at_1pct_fpr", "tpr_at_01pct_fpr",
                               "n_members",        "n_holdout", "total_queries",
                               "wall_time_seconds"};
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : keys) known = known || item.key() == k;
    if (!known) throw format_error("report has unknown field: " + item.key());
  }
  MetricsReport r;
  r.method = detail::get_field<std::string>(j, "method");
  r.t = detail::get_field<double>(j, "t");
  r.p = detail::get_field<double>(j, "p");
  r.auc = detail::get_field<double>(j, "auc");
  r.tpr_at_1pct_fpr = detail::get_field<double>(j, "tpr_at_1pct_fpr");
  r.tpr_at_01pct_fpr = detail::get_field<double>(j, "tpr_at_01pct_fpr");
  r.n_members = detail::get_field<long long>(j, "n_members");
  r.n_holdout = detail::get_field<long long>(j, "n_holdout");
  r.total_queries = detail::get_field<long long>(j, "total_queries");
  r.wall_time_seconds = detail::get_field<double>(j, "wall_time_seconds");
  return r;
}

}  // namespace pialab
