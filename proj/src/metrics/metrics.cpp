#include "uavfl/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "uavfl/core/require.hpp"

namespace uavfl::metrics {

EvaluationReport accuracy_report(const std::vector<int>& predictions,
                                 const std::vector<int>& labels,
                                 const std::vector<double>& snrs, int num_classes) {
  require(predictions.size() == labels.size(), "accuracy_report: size mismatch");
  require(snrs.empty() || snrs.size() == labels.size(), "accuracy_report: snr size mismatch");
  require(num_classes >= 1, "accuracy_report: bad class count");

  EvaluationReport rep;
  rep.confusion = Eigen::MatrixXi::Zero(num_classes, num_classes);
  std::map<double, int> snr_correct;
  int correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] >= 0 && labels[i] < num_classes, "accuracy_report: label out of range");
    require(predictions[i] >= 0 && predictions[i] < num_classes,
            "accuracy_report: prediction out of range");
    rep.confusion(labels[i], predictions[i]) += 1;
    const bool ok = predictions[i] == labels[i];
    correct += ok ? 1 : 0;
    if (!snrs.empty()) {
      rep.per_snr_counts[snrs[i]] += 1;
      snr_correct[snrs[i]] += ok ? 1 : 0;
    }
  }
  rep.known_total = static_cast<int>(labels.size());
  rep.overall_accuracy =
      labels.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(labels.size());
  for (const auto& [snr, n] : rep.per_snr_counts)
    rep.per_snr_accuracy[snr] = static_cast<double>(snr_correct[snr]) / static_cast<double>(n);
  return rep;
}

double auroc(const std::vector<double>& known_scores, const std::vector<double>& unknown_scores) {
  require(!known_scores.empty() && !unknown_scores.empty(), "auroc: empty score set");
  // Midrank formulation: U = R_unknown - n_u (n_u + 1) / 2, AUROC = U / (n_u n_k).
  struct Tagged {
    double score;
    bool unknown;
  };
  std::vector<Tagged> all;
  all.reserve(known_scores.size() + unknown_scores.size());
  for (double s : known_scores) all.push_back({s, false});
  for (double s : unknown_scores) all.push_back({s, true});
  std::sort(all.begin(), all.end(), [](const Tagged& a, const Tagged& b) { return a.score < b.score; });

  const double nu = static_cast<double>(unknown_scores.size());
  const double nk = static_cast<double>(known_scores.size());
  double rank_sum_unknown = 0.0;
  std::size_t i = 0;
  while (i < all.size()) {
    std::size_t j = i;
    while (j < all.size() && all[j].score == all[i].score) ++j;
    const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t t = i; t < j; ++t)
      if (all[t].unknown) rank_sum_unknown += midrank;
    i = j;
  }
  const double u = rank_sum_unknown - nu * (nu + 1.0) / 2.0;
  return u / (nu * nk);
}

double openness(int n_known_train, int n_total_test_classes) {
  require(n_known_train >= 1, "openness: need at least one known class");
  require(n_known_train <= n_total_test_classes, "openness: N_tr must not exceed N_te");
  const double ntr = n_known_train, nte = n_total_test_classes;
  return 1.0 - std::sqrt(2.0 * ntr / (ntr + nte));
}

double threshold_for_tar(std::vector<double> known_scores, double tar) {
  require(!known_scores.empty(), "threshold_for_tar: empty scores");
  require(tar > 0.0 && tar <= 1.0, "threshold_for_tar: rate out of range");
  std::sort(known_scores.begin(), known_scores.end());
  const std::size_t need = static_cast<std::size_t>(
      std::ceil(tar * static_cast<double>(known_scores.size())));
  return known_scores[std::min(need, known_scores.size()) - 1];
}

void write_confusion_csv(const std::string& path, const Eigen::MatrixXi& confusion,
                         const std::vector<std::string>& class_names) {
  require(static_cast<Eigen::Index>(class_names.size()) == confusion.rows(),
          "write_confusion_csv: name count mismatch");
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "write_confusion_csv: cannot open " + path);
  out << "true\\pred";
  for (const auto& n : class_names) out << "," << n;
  out << "\n";
  for (Eigen::Index r = 0; r < confusion.rows(); ++r) {
    out << class_names[static_cast<std::size_t>(r)];
    for (Eigen::Index c = 0; c < confusion.cols(); ++c) out << "," << confusion(r, c);
    out << "\n";
  }
}

}  // namespace uavfl::metrics
