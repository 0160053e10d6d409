#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "uavfl/core/require.hpp"
#include "uavfl/core/rng.hpp"
#include "uavfl/metrics/metrics.hpp"

using namespace uavfl;
using namespace uavfl::metrics;

namespace {

// exhaustive pairwise rank oracle, ties half-credit
double auroc_oracle(const std::vector<double>& known, const std::vector<double>& unknown) {
  double score = 0;
  for (double u : unknown)
    for (double k : known) score += u > k ? 1.0 : (u == k ? 0.5 : 0.0);
  return score / (static_cast<double>(known.size()) * static_cast<double>(unknown.size()));
}

}  // namespace

TEST_CASE("accuracy: all correct and constant predictor") {
  std::vector<int> labels{0, 1, 2, 0, 1, 2};
  const auto all = accuracy_report(labels, labels, {}, 3);
  CHECK(all.overall_accuracy == doctest::Approx(1.0));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(all.confusion(i, j) == (i == j ? 2 : 0));

  std::vector<int> constant(labels.size(), 1);
  const auto c = accuracy_report(constant, labels, {}, 3);
  CHECK(c.overall_accuracy == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("accuracy: empty SNR cell is absent, not zero") {
  std::vector<int> labels{0, 1};
  std::vector<int> preds{0, 0};
  std::vector<double> snrs{0.0, 0.0};
  const auto rep = accuracy_report(preds, labels, snrs, 2);
  CHECK(rep.per_snr_accuracy.size() == 1);
  CHECK(rep.per_snr_accuracy.count(10.0) == 0);
  CHECK(rep.per_snr_accuracy.at(0.0) == doctest::Approx(0.5));
}

TEST_CASE("confusion trace equals overall accuracy exactly") {
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    const int n = 40, k = 5;
    std::vector<int> labels(n), preds(n);
    for (int i = 0; i < n; ++i) {
      labels[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(k));
      preds[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(k));
    }
    const auto rep = accuracy_report(preds, labels, {}, k);
    CHECK(static_cast<double>(rep.confusion.trace()) / n == rep.overall_accuracy);
  }
}

TEST_CASE("auroc: separated, identical, and the 7/9 tie case") {
  CHECK(auroc({1.0, 2.0, 3.0}, {5.0, 6.0}) == doctest::Approx(1.0));
  CHECK(auroc({5.0, 6.0}, {1.0, 2.0, 3.0}) == doctest::Approx(0.0));
  CHECK(auroc({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == doctest::Approx(0.5));
  CHECK(auroc({1.0, 2.0, 3.0}, {2.0, 3.0, 4.0}) == doctest::Approx(7.0 / 9.0));
}

TEST_CASE("auroc equals the exhaustive pairwise oracle on random tied sets") {
  Rng rng(7);
  for (int t = 0; t < 50; ++t) {
    const int nk = 2 + static_cast<int>(rng.below(20));
    const int nu = 2 + static_cast<int>(rng.below(20));
    std::vector<double> known(static_cast<std::size_t>(nk)), unknown(static_cast<std::size_t>(nu));
    for (auto& v : known) v = static_cast<double>(rng.below(8));  // small grid forces ties
    for (auto& v : unknown) v = static_cast<double>(rng.below(8)) + (t % 2 ? 0.5 : 0.0);
    CHECK(auroc(known, unknown) == auroc_oracle(known, unknown));
  }
}

TEST_CASE("auroc is invariant under strictly monotone transforms") {
  Rng rng(9);
  std::vector<double> known(25), unknown(19);
  for (auto& v : known) v = rng.uniform(0.0, 4.0);
  for (auto& v : unknown) v = rng.uniform(1.0, 5.0);
  const double base = auroc(known, unknown);
  auto mono = [](double x) { return std::exp(0.3 * x) + 2.0 * x; };
  std::vector<double> k2, u2;
  for (double v : known) k2.push_back(mono(v));
  for (double v : unknown) u2.push_back(mono(v));
  CHECK(auroc(k2, u2) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("auroc antisymmetry for tie-free sets") {
  Rng rng(11);
  std::vector<double> a(17), b(13);
  for (auto& v : a) v = rng.uniform(0.0, 1.0);
  for (auto& v : b) v = rng.uniform(0.0, 1.0) + 1e-9;
  CHECK(auroc(a, b) + auroc(b, a) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("openness reproduces the six published rows to 4 decimals") {
  const double expected[6] = {0.5000, 0.3333, 0.2254, 0.1472, 0.0871, 0.0392};
  for (int known = 1; known <= 6; ++known) {
    const double v = openness(known, 7);
    CHECK(std::abs(v - expected[known - 1]) < 5e-5);
  }
}

TEST_CASE("openness closed-set and validation") {
  CHECK(openness(7, 7) == doctest::Approx(0.0));
  CHECK_THROWS_AS(openness(8, 7), ValidationError);
  CHECK_THROWS_AS(openness(0, 7), ValidationError);
}

TEST_CASE("threshold_for_tar covers the requested fraction") {
  std::vector<double> scores;
  for (int i = 1; i <= 100; ++i) scores.push_back(static_cast<double>(i));
  const double thr = threshold_for_tar(scores, 0.95);
  CHECK(thr == doctest::Approx(95.0));
  int accepted = 0;
  for (double s : scores)
    if (s <= thr) ++accepted;
  CHECK(accepted >= 95);
}

TEST_CASE("auroc validates empty inputs") {
  CHECK_THROWS_AS(auroc({}, {1.0}), ValidationError);
  CHECK_THROWS_AS(auroc({1.0}, {}), ValidationError);
}
