#pragma once

#include <optional>
#include <string>
#include <vector>

namespace pointcam::metrics {

/// One scored evaluation unit: a point (segmentation) or a sample
/// (classification). Higher score means "more likely unknown".
struct ScoreRecord {
  std::string unit_id;
  double score = 0.0;
  bool is_unknown = false;
};

/// Probability that a random unknown unit outscores a random known unit,
/// ties counted one half (Mann-Whitney formulation).
/// Throws std::invalid_argument unless both classes are present and all
/// scores are finite; the other threshold metrics check the same.
double auroc(const std::vector<ScoreRecord>& dump);

/// Average precision with unknown as the positive class:
/// AP = sum_n (R_n - R_{n-1}) * P_n over thresholds at the distinct scores
/// in descending order. No interpolation, so results are deterministic and
/// can differ slightly from trapezoidal PR integration.
double aupr(const std::vector<ScoreRecord>& dump);

/// Minimum false-positive rate over thresholds t (predict unknown when
/// score >= t) whose true-positive rate reaches tpr_floor.
double fpr_at_tpr(const std::vector<ScoreRecord>& dump, double tpr_floor = 0.95);

/// Minimum over thresholds of (1 - TPR)/2 + FPR/2, the misdetection rate
/// under equal priors. Never exceeds 0.5.
double detection_error(const std::vector<ScoreRecord>& dump);

/// Mean intersection-over-union across classes 0..num_classes-1; classes
/// absent from both prediction and ground truth are skipped.
double miou(const std::vector<int>& pred, const std::vector<int>& gt, int num_classes);

enum class AccuracyMode { per_sample, per_class_mean };

/// Fraction of correct predictions, or the unweighted mean of per-class
/// recalls over the classes present in the ground truth.
double accuracy(const std::vector<int>& pred, const std::vector<int>& gt,
                AccuracyMode mode);

struct MetricsReport {
  std::optional<double> auroc;
  std::optional<double> aupr;
  std::optional<double> fpr_at_95_tpr;
  std::optional<double> detection_error;
  std::optional<double> miou;
  std::optional<double> accuracy_sample;
  std::optional<double> accuracy_class;
};

/// All four open-set metrics of a dump in one pass.
MetricsReport open_set_report(const std::vector<ScoreRecord>& dump);

/// JSON object with one key per present field; absent fields are omitted,
/// never null.
std::string report_to_json(const MetricsReport& report);
MetricsReport report_from_json(const std::string& text);

/// CSV with header "unit_id,score,is_unknown"; scores are written with
/// enough digits to round-trip exactly, is_unknown as 0/1.
void write_scores_csv(const std::string& path, const std::vector<ScoreRecord>& dump);
std::vector<ScoreRecord> read_scores_csv(const std::string& path);

}  // namespace pointcam::metrics
