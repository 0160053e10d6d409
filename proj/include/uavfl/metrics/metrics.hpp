#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace uavfl::metrics {

struct EvaluationReport {
  double overall_accuracy = 0.0;
  std::map<double, double> per_snr_accuracy;  // empty SNR cells are absent, not 0
  std::map<double, int> per_snr_counts;
  Eigen::MatrixXi confusion;  // rows = true class, cols = predicted
  std::optional<double> auroc;
  std::optional<double> openness;
  int known_total = 0;
};

/// Accuracy over known-labeled samples: overall, grouped by SNR, and the
/// K x K confusion matrix.
EvaluationReport accuracy_report(const std::vector<int>& predictions,
                                 const std::vector<int>& labels,
                                 const std::vector<double>& snrs, int num_classes);

/// Rank-statistic AUROC (Mann-Whitney, ties half-credit). Scores follow the
/// unknown-positive convention: higher score = more likely unknown, so this
/// is P(unknown score > known score) + 0.5 * P(tie).
double auroc(const std::vector<double>& known_scores, const std::vector<double>& unknown_scores);

/// openness = 1 - sqrt(2 * N_tr / (N_tr + N_te)) where N_tr is the number
/// of classes seen in training and N_te the total number of test classes.
double openness(int n_known_train, int n_total_test_classes);

/// Smallest threshold achieving the requested true-acceptance rate on
/// known-class rejection scores (scores <= threshold are accepted).
double threshold_for_tar(std::vector<double> known_scores, double tar);

void write_confusion_csv(const std::string& path, const Eigen::MatrixXi& confusion,
                         const std::vector<std::string>& class_names);

}  // namespace uavfl::metrics
