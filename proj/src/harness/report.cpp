#include "uavfl/harness/report.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <vector>

#include "uavfl/core/require.hpp"
#include "uavfl/harness/experiment.hpp"

namespace uavfl::harness {

namespace fs = std::filesystem;

namespace {

struct MetricRow {
  std::string run_id, stage, metric, group;
  double value = 0.0;
};

std::vector<MetricRow> read_metrics(const fs::path& path) {
  std::ifstream in(path);
  require(in.good(), "report: cannot open " + path.string());
  std::vector<MetricRow> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    MetricRow r;
    std::string value;
    std::getline(ss, r.run_id, ',');
    std::getline(ss, r.stage, ',');
    std::getline(ss, r.metric, ',');
    std::getline(ss, r.group, ',');
    std::getline(ss, value, ',');
    r.value = std::stod(value);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<double> read_scores(const fs::path& path) {
  std::ifstream in(path);
  std::vector<double> scores;
  if (!in.good()) return scores;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line))
    if (!line.empty()) scores.push_back(std::stod(line));
  return scores;
}

/// ROC points with the unknown-positive orientation: a sample is flagged
/// unknown when its score exceeds the sweep threshold.
std::vector<std::pair<double, double>> roc_points(const std::vector<double>& known,
                                                  const std::vector<double>& unknown) {
  std::vector<double> thresholds = known;
  thresholds.insert(thresholds.end(), unknown.begin(), unknown.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  std::vector<std::pair<double, double>> pts;
  pts.emplace_back(1.0, 1.0);
  for (double t : thresholds) {
    const double fp = static_cast<double>(std::count_if(known.begin(), known.end(),
                                                        [&](double s) { return s > t; }));
    const double tp = static_cast<double>(std::count_if(unknown.begin(), unknown.end(),
                                                        [&](double s) { return s > t; }));
    pts.emplace_back(fp / static_cast<double>(known.size()),
                     tp / static_cast<double>(unknown.size()));
  }
  pts.emplace_back(0.0, 0.0);
  std::reverse(pts.begin(), pts.end());
  return pts;
}

double group_index(const std::string& group) {
  const auto eq = group.find('=');
  return eq == std::string::npos ? 0.0 : std::stod(group.substr(eq + 1));
}

}  // namespace

void export_report(const fs::path& run_dir, const fs::path& out_dir) {
  const fs::path metrics_path = run_dir / "metrics.csv";
  require(fs::exists(metrics_path), "report: nothing to report in " + run_dir.string());
  const auto rows = read_metrics(metrics_path);
  require(!rows.empty(), "report: nothing to report in " + run_dir.string());
  fs::create_directories(out_dir);

  {
    std::ofstream out(out_dir / "summary.csv", std::ios::binary);
    require(out.good(), "report: cannot open summary.csv");
    out << "stage,metric,group,value\n";
    for (const auto& r : rows)
      out << r.stage << "," << r.metric << "," << r.group << "," << format_value(r.value)
          << "\n";
  }

  // training progress plot (per-round accuracy or per-epoch loss)
  Series acc_series{"accuracy", {}}, loss_series{"train loss", {}};
  for (const auto& r : rows) {
    if (r.stage != "train") continue;
    if (r.metric == "accuracy") acc_series.points.emplace_back(group_index(r.group), r.value);
    if (r.metric == "loss") loss_series.points.emplace_back(group_index(r.group), r.value);
  }
  if (!acc_series.points.empty()) {
    std::ofstream out(out_dir / "accuracy_vs_round.svg", std::ios::binary);
    out << line_plot_svg({acc_series}, "Known-class accuracy", "round", "accuracy");
  }
  if (!loss_series.points.empty()) {
    std::ofstream out(out_dir / "loss_vs_epoch.svg", std::ios::binary);
    out << line_plot_svg({loss_series}, "Training loss", "epoch", "mean CA loss");
  }

  const auto known = read_scores(run_dir / "known_scores.csv");
  const auto unknown = read_scores(run_dir / "unknown_scores.csv");
  if (!known.empty() && !unknown.empty()) {
    Series roc{"ROC", roc_points(known, unknown)};
    Series diag{"chance", {{0.0, 0.0}, {1.0, 1.0}}};
    std::ofstream out(out_dir / "roc.svg", std::ios::binary);
    out << line_plot_svg({roc, diag}, "Unknown-rejection ROC", "false positive rate",
                         "true positive rate");
  }

  if (fs::exists(run_dir / "confusion.csv"))
    fs::copy_file(run_dir / "confusion.csv", out_dir / "confusion.csv",
                  fs::copy_options::overwrite_existing);
}

}  // namespace uavfl::harness
