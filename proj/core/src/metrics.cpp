#include "pointcam/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace pointcam::metrics {

namespace {

void validate_dump(const std::vector<ScoreRecord>& dump, const char* op) {
  bool has_known = false;
  bool has_unknown = false;
  for (const ScoreRecord& r : dump) {
    if (!std::isfinite(r.score)) {
      throw std::invalid_argument(std::string(op) + ": non-finite score for unit '" +
                                  r.unit_id + "'");
    }
    (r.is_unknown ? has_unknown : has_known) = true;
  }
  if (!has_known || !has_unknown) {
    throw std::invalid_argument(std::string(op) +
                                ": need at least one known and one unknown unit");
  }
}

struct SweepCounts {
  long long true_pos;   // unknowns at or above the threshold
  long long false_pos;  // knowns at or above the threshold
};

/// Cumulative counts at thresholds placed on the distinct scores in
/// descending order (prediction rule: unknown iff score >= threshold).
std::vector<SweepCounts> descending_sweep(const std::vector<ScoreRecord>& dump) {
  std::vector<std::pair<double, bool>> units;
  units.reserve(dump.size());
  for (const ScoreRecord& r : dump) units.emplace_back(r.score, r.is_unknown);
  std::sort(units.begin(), units.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<SweepCounts> sweep;
  long long tp = 0;
  long long fp = 0;
  std::size_t i = 0;
  while (i < units.size()) {
    const double threshold = units[i].first;
    while (i < units.size() && units[i].first == threshold) {
      (units[i].second ? tp : fp) += 1;
      ++i;
    }
    sweep.push_back({tp, fp});
  }
  return sweep;
}

long long count_unknown(const std::vector<ScoreRecord>& dump) {
  long long u = 0;
  for (const ScoreRecord& r : dump) u += r.is_unknown ? 1 : 0;
  return u;
}

}  // namespace

double auroc(const std::vector<ScoreRecord>& dump) {
  validate_dump(dump, "auroc");
  std::vector<double> known;
  std::vector<double> unknown;
  for (const ScoreRecord& r : dump) {
    (r.is_unknown ? unknown : known).push_back(r.score);
  }
  std::sort(known.begin(), known.end());
  long long above = 0;
  long long tied = 0;
  for (double u : unknown) {
    above += std::lower_bound(known.begin(), known.end(), u) - known.begin();
    tied += std::upper_bound(known.begin(), known.end(), u) -
            std::lower_bound(known.begin(), known.end(), u);
  }
  // above + tied/2 is a dyadic rational well under 2^53, so this equals
  // pairwise accumulation of 1.0 and 0.5 in any order, bit for bit.
  const double numerator =
      static_cast<double>(above) + 0.5 * static_cast<double>(tied);
  const double denominator =
      static_cast<double>(unknown.size()) * static_cast<double>(known.size());
  return numerator / denominator;
}

double aupr(const std::vector<ScoreRecord>& dump) {
  validate_dump(dump, "aupr");
  const long long total_unknown = count_unknown(dump);
  double average_precision = 0.0;
  double recall_prev = 0.0;
  for (const SweepCounts& c : descending_sweep(dump)) {
    const double precision = static_cast<double>(c.true_pos) /
                             static_cast<double>(c.true_pos + c.false_pos);
    const double recall =
        static_cast<double>(c.true_pos) / static_cast<double>(total_unknown);
    average_precision += (recall - recall_prev) * precision;
    recall_prev = recall;
  }
  return average_precision;
}

double fpr_at_tpr(const std::vector<ScoreRecord>& dump, double tpr_floor) {
  validate_dump(dump, "fpr_at_tpr");
  if (!(tpr_floor >= 0.0 && tpr_floor <= 1.0)) {
    throw std::invalid_argument("fpr_at_tpr: floor must lie in [0,1], got " +
                                std::to_string(tpr_floor));
  }
  const long long total_unknown = count_unknown(dump);
  const long long total_known = static_cast<long long>(dump.size()) - total_unknown;
  // Thresholds at +inf (reject everything), each distinct score, -inf.
  double best = std::numeric_limits<double>::infinity();
  if (0.0 >= tpr_floor) best = 0.0;
  for (const SweepCounts& c : descending_sweep(dump)) {
    const double tpr =
        static_cast<double>(c.true_pos) / static_cast<double>(total_unknown);
    if (tpr >= tpr_floor) {
      const double fpr =
          static_cast<double>(c.false_pos) / static_cast<double>(total_known);
      best = std::min(best, fpr);
    }
  }
  best = std::min(best, 1.0);  // threshold -inf always reaches the floor
  return best;
}

double detection_error(const std::vector<ScoreRecord>& dump) {
  validate_dump(dump, "detection_error");
  const long long total_unknown = count_unknown(dump);
  const long long total_known = static_cast<long long>(dump.size()) - total_unknown;
  double best = 0.5;  // thresholds at +/-inf misdetect one full class
  for (const SweepCounts& c : descending_sweep(dump)) {
    const double tpr =
        static_cast<double>(c.true_pos) / static_cast<double>(total_unknown);
    const double fpr =
        static_cast<double>(c.false_pos) / static_cast<double>(total_known);
    best = std::min(best, 0.5 * (1.0 - tpr) + 0.5 * fpr);
  }
  return best;
}

double miou(const std::vector<int>& pred, const std::vector<int>& gt, int num_classes) {
  if (pred.empty()) throw std::invalid_argument("miou: empty evaluation set");
  if (pred.size() != gt.size()) {
    throw std::invalid_argument("miou: " + std::to_string(pred.size()) +
                                " predictions vs " + std::to_string(gt.size()) +
                                " ground-truth labels");
  }
  if (num_classes <= 0) throw std::invalid_argument("miou: num_classes must be positive");
  std::vector<long long> tp(num_classes, 0);
  std::vector<long long> fp(num_classes, 0);
  std::vector<long long> fn(num_classes, 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] < 0 || pred[i] >= num_classes || gt[i] < 0 || gt[i] >= num_classes) {
      throw std::invalid_argument("miou: label out of range at index " +
                                  std::to_string(i));
    }
    if (pred[i] == gt[i]) {
      tp[gt[i]] += 1;
    } else {
      fp[pred[i]] += 1;
      fn[gt[i]] += 1;
    }
  }
  double acc = 0.0;
  int counted = 0;
  for (int c = 0; c < num_classes; ++c) {
    const long long denom = tp[c] + fp[c] + fn[c];
    if (denom == 0) continue;  // class absent from both: skip
    acc += static_cast<double>(tp[c]) / static_cast<double>(denom);
    counted += 1;
  }
  return acc / static_cast<double>(counted);
}

double accuracy(const std::vector<int>& pred, const std::vector<int>& gt,
                AccuracyMode mode) {
  if (pred.empty()) throw std::invalid_argument("accuracy: empty input");
  if (pred.size() != gt.size()) {
    throw std::invalid_argument("accuracy: " + std::to_string(pred.size()) +
                                " predictions vs " + std::to_string(gt.size()) +
                                " ground-truth labels");
  }
  int max_label = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (gt[i] < 0 || pred[i] < 0) {
      throw std::invalid_argument("accuracy: negative label at index " +
                                  std::to_string(i));
    }
    max_label = std::max(max_label, gt[i]);
  }
  if (mode == AccuracyMode::per_sample) {
    long long correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == gt[i] ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(pred.size());
  }
  std::vector<long long> total(max_label + 1, 0);
  std::vector<long long> correct(max_label + 1, 0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    total[gt[i]] += 1;
    correct[gt[i]] += pred[i] == gt[i] ? 1 : 0;
  }
  double acc = 0.0;
  int classes = 0;
  for (int c = 0; c <= max_label; ++c) {
    if (total[c] == 0) continue;
    acc += static_cast<double>(correct[c]) / static_cast<double>(total[c]);
    classes += 1;
  }
  return acc / static_cast<double>(classes);
}

MetricsReport open_set_report(const std::vector<ScoreRecord>& dump) {
  MetricsReport report;
  report.auroc = auroc(dump);
  report.aupr = aupr(dump);
  report.fpr_at_95_tpr = fpr_at_tpr(dump);
  report.detection_error = detection_error(dump);
  return report;
}

std::string report_to_json(const MetricsReport& report) {
  nlohmann::json out;
  if (report.auroc) out["auroc"] = *report.auroc;
  if (report.aupr) out["aupr"] = *report.aupr;
  if (report.fpr_at_95_tpr) out["fpr_at_95_tpr"] = *report.fpr_at_95_tpr;
  if (report.detection_error) out["detection_error"] = *report.detection_error;
  if (report.miou) out["miou"] = *report.miou;
  if (report.accuracy_sample) out["accuracy_sample"] = *report.accuracy_sample;
  if (report.accuracy_class) out["accuracy_class"] = *report.accuracy_class;
  return out.dump(2) + "\n";
}

MetricsReport report_from_json(const std::string& text) {
  const nlohmann::json in = nlohmann::json::parse(text);
  MetricsReport report;
  if (in.contains("auroc")) report.auroc = in["auroc"].get<double>();
  if (in.contains("aupr")) report.aupr = in["aupr"].get<double>();
  if (in.contains("fpr_at_95_tpr")) report.fpr_at_95_tpr = in["fpr_at_95_tpr"].get<double>();
  if (in.contains("detection_error")) report.detection_error = in["detection_error"].get<double>();
  if (in.contains("miou")) report.miou = in["miou"].get<double>();
  if (in.contains("accuracy_sample")) report.accuracy_sample = in["accuracy_sample"].get<double>();
  if (in.contains("accuracy_class")) report.accuracy_class = in["accuracy_class"].get<double>();
  return report;
}

void write_scores_csv(const std::string& path, const std::vector<ScoreRecord>& dump) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "unit_id,score,is_unknown\n";
  char buf[64];
  for (const ScoreRecord& r : dump) {
    if (r.unit_id.empty() ||
        r.unit_id.find_first_of(",\n\r") != std::string::npos) {
      throw std::invalid_argument("unit id unfit for CSV: '" + r.unit_id + "'");
    }
    std::snprintf(buf, sizeof(buf), "%.17g", r.score);
    out << r.unit_id << ',' << buf << ',' << (r.is_unknown ? 1 : 0) << '\n';
  }
  if (!out.flush()) throw std::runtime_error("write failed: " + path);
}

std::vector<ScoreRecord> read_scores_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "unit_id,score,is_unknown") {
    throw std::runtime_error("missing score CSV header in " + path);
  }
  std::vector<ScoreRecord> dump;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::size_t c1 = line.find(',');
    const std::size_t c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos ||
        line.find(',', c2 + 1) != std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected 3 comma-separated fields");
    }
    ScoreRecord r;
    r.unit_id = line.substr(0, c1);
    const std::string score_text = line.substr(c1 + 1, c2 - c1 - 1);
    char* end = nullptr;
    r.score = std::strtod(score_text.c_str(), &end);
    if (end == score_text.c_str() || *end != '\0') {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": bad score '" + score_text + "'");
    }
    const std::string flag = line.substr(c2 + 1);
    if (flag == "1") {
      r.is_unknown = true;
    } else if (flag == "0") {
      r.is_unknown = false;
    } else {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": is_unknown must be 0 or 1, got '" + flag + "'");
    }
    dump.push_back(std::move(r));
  }
  return dump;
}

}  // namespace pointcam::metrics
