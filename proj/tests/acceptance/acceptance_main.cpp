// Acceptance suite: runs every criterion at its pinned tolerance and
// prints one PASS/FAIL line per criterion. Exit code 0 iff all pass.
// Optional argv: criterion numbers to run (default: all).

#include <chrono>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "uavfl/fedsim/federation.hpp"
#include "uavfl/harness/config.hpp"
#include "uavfl/harness/experiment.hpp"
#include "uavfl/lsnet/checkpoint.hpp"
#include "uavfl/metrics/metrics.hpp"

using namespace uavfl;
namespace fs = std::filesystem;

namespace {

fs::path work_dir() {
  const fs::path dir = fs::temp_directory_path() / "uavfl_acceptance";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool bit_equal(const lsnet::ParameterSet<float>& a, const lsnet::ParameterSet<float>& b) {
  if (a.entries.size() != b.entries.size()) return false;
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    if (a.entries[i].data.size() != b.entries[i].data.size()) return false;
    if (std::memcmp(a.entries[i].data.data(), b.entries[i].data.data(),
                    a.entries[i].data.size() * sizeof(float)) != 0)
      return false;
  }
  return true;
}

harness::ExperimentConfig desk_config() {
  harness::ExperimentConfig cfg;
  harness::SyntheticDataConfig s;
  s.train_per_class = 200;
  s.test_per_class = 50;
  s.snr_grid_db = {0.0, 10.0};
  s.interference_prob = 0.5;
  cfg.synthetic = s;
  cfg.known_classes = rfgen::class_labels();
  cfg.epochs = 10;
  cfg.batch = 32;
  cfg.lr = 0.04;
  cfg.momentum = 0.9;
  cfg.cosine = true;
  cfg.seed = 1;
  return cfg;
}

// ---------------------------------------------------------------- 1
bool criterion_architecture(std::string& detail) {
  lsnet::LSNetConfig cfg;
  lsnet::LSNet<float> model(cfg, 1);
  // expected chain: stem1 16x64x64, stem2 16x32x32, stage1 16x32x32,
  // trans 32x16x16, stage2 32x16x16, trans 64x8x8, stage3 64x8x8,
  // gap 64x1x1, proj 128, fc 7
  const auto r = model.shape_chain();
  bool shapes_ok =
      r.size() == 10 && r[0].channels == 16 && r[0].height == 64 && r[0].width == 64 &&
      r[1].channels == 16 && r[1].height == 32 && r[2].channels == 16 && r[2].height == 32 &&
      r[3].channels == 32 && r[3].height == 16 && r[4].channels == 32 && r[4].height == 16 &&
      r[5].channels == 64 && r[5].height == 8 && r[6].channels == 64 && r[6].height == 8 &&
      r[7].channels == 64 && r[7].height == 1 && r[8].channels == 128 && r[9].channels == 7;

  // verify the live forward path agrees (stem outputs already covered by
  // construction; check logits shape on a real batch)
  lsnet::Batch<float> in;
  in.resize_like_shape(2, 1, 128, 128);
  const auto logits = model.forward(in, lsnet::Mode::Eval);
  shapes_ok = shapes_ok && logits.rows() == 2 && logits.cols() == 7;

  const auto count = model.param_count();
  const bool count_ok = count >= 340000 && count <= 376000;

  const fs::path ckpt = work_dir() / "arch.ckpt";
  lsnet::save_checkpoint(ckpt, model.extract(), cfg, 1);
  const auto bytes = fs::file_size(ckpt);
  const bool size_ok = bytes < 2u * 1024u * 1024u;

  const auto macs = lsnet::LSNet<float>::mac_count(cfg);
  const bool macs_ok = macs >= 25000000 && macs <= 100000000;

  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "shape chain %s; params=%lld in [340000,376000]; checkpoint=%.2f MB; "
                "MACs=%.4f G (target 0.05 G within 2x)",
                shapes_ok ? "exact" : "WRONG", static_cast<long long>(count),
                static_cast<double>(bytes) / (1024.0 * 1024.0),
                static_cast<double>(macs) / 1e9);
  detail = buf;
  return shapes_ok && count_ok && size_ok && macs_ok;
}

// ---------------------------------------------------------------- 2
bool criterion_loss_identity(std::string& detail) {
  Rng rng(2024);
  double worst_id = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const int n = std::array<int, 3>{2, 5, 7}[t % 3];
    caloss::VecX<double> d(n);
    for (int i = 0; i < n; ++i) d[i] = rng.uniform(0.0, 12.0);
    const int y = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    const double lhs = -std::log(caloss::softmin<double>(d)[y]);
    const double rhs = caloss::tuplet_loss<double>(d, y);
    worst_id = std::max(worst_id, std::abs(lhs - rhs));
  }
  const bool id_ok = worst_id < 1e-10;

  double worst_grad = 0.0;
  int done = 0;
  while (done < 100) {
    const int n = std::array<int, 3>{2, 5, 7}[done % 3];
    const auto c = caloss::make_centers<double>(n, 0.1);
    caloss::VecX<double> z(n);
    for (int i = 0; i < n; ++i) z[i] = rng.uniform(-0.5, 0.5);
    const int y = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    if ((z - c.col(y)).norm() < 1e-6) continue;
    const double lambda = rng.uniform(0.0, 1.0);
    caloss::MatX<double> logits = z.transpose(), grad;
    caloss::ca_loss_batch<double>(logits, {y}, c, lambda, &grad);
    const double h = 1e-6;
    for (int k = 0; k < n; ++k) {
      caloss::VecX<double> zp = z, zm = z;
      zp[k] += h;
      zm[k] -= h;
      const double fd = (caloss::ca_loss<double>(caloss::center_distances<double>(zp, c), y, lambda) -
                         caloss::ca_loss<double>(caloss::center_distances<double>(zm, c), y, lambda)) /
                        (2 * h);
      const double rel =
          std::abs(grad(0, k) - fd) / std::max({std::abs(fd), std::abs(grad(0, k)), 1e-8});
      worst_grad = std::max(worst_grad, rel);
    }
    ++done;
  }
  const bool grad_ok = worst_grad < 1e-6;

  char buf[192];
  std::snprintf(buf, sizeof(buf),
                "softmin identity worst |diff|=%.2e (<1e-10); gradient worst rel=%.2e (<1e-6)",
                worst_id, worst_grad);
  detail = buf;
  return id_ok && grad_ok;
}

// ---------------------------------------------------------------- 3
bool criterion_openness(std::string& detail) {
  const double expected[6] = {0.5000, 0.3333, 0.2254, 0.1472, 0.0871, 0.0392};
  double worst = 0.0;
  for (int known = 1; known <= 6; ++known)
    worst = std::max(worst, std::abs(metrics::openness(known, 7) - expected[known - 1]));
  char buf[128];
  std::snprintf(buf, sizeof(buf), "all six rows reproduced, worst |diff|=%.2e (<5e-5)", worst);
  detail = buf;
  return worst < 5e-5;
}

// ---------------------------------------------------------------- 4
bool criterion_metrics_oracles(std::string& detail) {
  Rng rng(4);
  bool auroc_ok = true;
  for (int t = 0; t < 50; ++t) {
    const int nk = 2 + static_cast<int>(rng.below(25));
    const int nu = 2 + static_cast<int>(rng.below(25));
    std::vector<double> known(static_cast<std::size_t>(nk)), unknown(static_cast<std::size_t>(nu));
    for (auto& v : known) v = static_cast<double>(rng.below(10));
    for (auto& v : unknown) v = static_cast<double>(rng.below(10)) + (t % 2 ? 0.5 : 0.0);
    double oracle = 0.0;
    for (double u : unknown)
      for (double k : known) oracle += u > k ? 1.0 : (u == k ? 0.5 : 0.0);
    oracle /= static_cast<double>(nk) * static_cast<double>(nu);
    if (metrics::auroc(known, unknown) != oracle) auroc_ok = false;
  }

  bool conf_ok = true;
  for (int t = 0; t < 20; ++t) {
    const int n = 30, k = 4;
    std::vector<int> labels(static_cast<std::size_t>(n)), preds(static_cast<std::size_t>(n));
    for (auto& v : labels) v = static_cast<int>(rng.below(k));
    for (auto& v : preds) v = static_cast<int>(rng.below(k));
    const auto rep = metrics::accuracy_report(preds, labels, {}, k);
    if (static_cast<double>(rep.confusion.trace()) / n != rep.overall_accuracy) conf_ok = false;
  }
  detail = std::string("AUROC == pairwise oracle on 50 tied sets (exact): ") +
           (auroc_ok ? "yes" : "NO") +
           "; confusion-trace accuracy == overall (exact): " + (conf_ok ? "yes" : "NO");
  return auroc_ok && conf_ok;
}

// ---------------------------------------------------------------- 5
bool criterion_fedavg(std::string& detail) {
  Rng rng(5);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<lsnet::ParameterSet<double>> sets;
    std::vector<double> weights;
    const int n_updates = 2 + static_cast<int>(rng.below(4));
    for (int u = 0; u < n_updates; ++u) {
      lsnet::ParameterSet<double> ps;
      lsnet::ParameterSet<double>::Entry e;
      e.name = "w";
      e.rows = 32;
      e.cols = 1;
      for (int i = 0; i < 32; ++i) e.data.push_back(rng.normal());
      ps.entries.push_back(e);
      sets.push_back(std::move(ps));
      weights.push_back(1.0 + static_cast<double>(rng.below(20)));
    }
    std::vector<const lsnet::ParameterSet<double>*> refs;
    for (const auto& s : sets) refs.push_back(&s);
    const auto agg = fedsim::aggregate<double>(refs, weights);
    double wsum = 0;
    for (double w : weights) wsum += w;
    for (int i = 0; i < 32; ++i) {
      long double acc = 0;
      for (std::size_t u = 0; u < sets.size(); ++u)
        acc += static_cast<long double>(weights[u]) *
               sets[u].entries[0].data[static_cast<std::size_t>(i)];
      worst = std::max(worst, std::abs(agg.entries[0].data[static_cast<std::size_t>(i)] -
                                       static_cast<double>(acc / wsum)));
    }
  }
  const bool agg_ok = worst < 1e-12;

  // m = c = 1 federation == centralized SGD, 3 rounds x 1 epoch, bit level
  rfgen::DatasetConfig dc;
  dc.classes = {"DJI", "Turnigy"};
  dc.per_class = 12;
  dc.train_per_class = 12;
  dc.test_per_class = 0;
  dc.snr_grid_db = {10.0};
  dc.seed = 51;
  dc.interference_prob = 0.0;
  const auto data = lsnet::to_spec_dataset(rfgen::build_dataset(dc).train, {});
  lsnet::LSNetConfig mcfg;
  mcfg.num_classes = 2;
  const std::uint64_t master = 55;

  fedsim::FedConfig fc;
  fc.n_clients = 1;
  fc.per_round = 1;
  fc.rounds = 3;
  fc.local.epochs = 1;
  fc.local.batch = 8;
  fc.local.lr = 0.05;
  fc.local.momentum = 0.0;
  fc.seed = master;
  fc.norm_policy.kind = fedsim::NormPolicyConfig::Kind::None;
  const auto fed = fedsim::run_federation(fc, mcfg, 4321, data);

  lsnet::LSNet<float> central(mcfg, 4321);
  lsnet::OptimConfig oc;
  oc.lr = 0.05;
  lsnet::Sgd<float> opt(central, oc);
  const auto centers = caloss::make_centers<float>(2, 0.1f);
  long step = 0;
  for (int e = 0; e < 3; ++e)
    lsnet::train_epoch(central, data, centers, {}, opt, 8, step,
                       lsnet::epoch_seed_of(fedsim::train_seed_of(master), 0, e));
  const bool bit_ok = bit_equal(fed.global, central.extract());

  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "aggregate vs oracle worst |diff|=%.2e (<1e-12); m=c=1 bitwise equality: %s",
                worst, bit_ok ? "yes" : "NO");
  detail = buf;
  return agg_ok && bit_ok;
}

// ---------------------------------------------------------------- 6
bool criterion_zero_trust(std::string& detail) {
  Rng rng(6);
  const auto make_ps = [&](bool poison) {
    lsnet::ParameterSet<float> ps;
    for (int e = 0; e < 4; ++e) {
      lsnet::ParameterSet<float>::Entry en;
      en.name = "layer" + std::to_string(e) + ".w";
      en.rows = 8;
      en.cols = 2;
      for (int i = 0; i < 16; ++i) en.data.push_back(static_cast<float>(rng.normal()));
      if (poison) en.data[3] = std::numeric_limits<float>::quiet_NaN();
      ps.entries.push_back(std::move(en));
    }
    return ps;
  };

  int flipped_rej = 0, nan_rej = 0, replay_rej = 0, unreg_rej = 0;
  const int trials = 50;
  for (int t = 0; t < trials; ++t) {
    const auto kp = fedsim::make_keypair(derive_seed(6, static_cast<std::uint64_t>(t)));
    fedsim::KeyRegistry reg;
    reg.add(1, kp.pub);
    const auto global = make_ps(false);
    const std::uint32_t round = static_cast<std::uint32_t>(10 + t);

    auto honest = fedsim::sign_update(make_ps(false), 1, round, kp, 64);
    if (!fedsim::verify_update(honest, reg, round, global, {}).accepted) {
      detail = "honest update unexpectedly rejected";
      return false;
    }

    auto flipped = honest;
    const std::size_t entry = rng.below(flipped.params.entries.size());
    auto* bytes = reinterpret_cast<unsigned char*>(flipped.params.entries[entry].data.data());
    bytes[rng.below(16 * sizeof(float))] ^= static_cast<unsigned char>(1 + rng.below(255));
    auto v = fedsim::verify_update(flipped, reg, round, global, {});
    flipped_rej += (!v.accepted && v.reason == "digest-mismatch") ? 1 : 0;

    auto nan_update = fedsim::sign_update(make_ps(true), 1, round, kp, 64);
    v = fedsim::verify_update(nan_update, reg, round, global, {});
    nan_rej += (!v.accepted && v.reason == "non-finite") ? 1 : 0;

    auto stale = fedsim::sign_update(make_ps(false), 1, round - 1 - static_cast<std::uint32_t>(rng.below(5)), kp, 64);
    v = fedsim::verify_update(stale, reg, round, global, {});
    replay_rej += (!v.accepted && v.reason == "round-mismatch") ? 1 : 0;

    const auto stranger = fedsim::make_keypair(derive_seed(66, static_cast<std::uint64_t>(t)));
    auto foreign = fedsim::sign_update(make_ps(false), 2 + static_cast<std::uint32_t>(t), round, stranger, 64);
    v = fedsim::verify_update(foreign, reg, round, global, {});
    unreg_rej += (!v.accepted && v.reason == "unregistered-key") ? 1 : 0;
  }

  // sentinel: a rejected update never changes the aggregate
  const auto kp1 = fedsim::make_keypair(61), kp2 = fedsim::make_keypair(62),
             kp3 = fedsim::make_keypair(63);
  fedsim::KeyRegistry reg;
  reg.add(0, kp1.pub);
  reg.add(1, kp2.pub);
  reg.add(2, kp3.pub);
  const auto a = make_ps(false), b = make_ps(false);
  auto sentinel = make_ps(false);
  for (auto& e : sentinel.entries)
    for (auto& vv : e.data) vv = 31337.0f;
  const auto global = make_ps(false);
  auto ua = fedsim::sign_update(a, 0, 9, kp1, 10);
  auto ub = fedsim::sign_update(b, 1, 9, kp2, 30);
  auto ut = fedsim::sign_update(sentinel, 2, 9, kp3, 999);
  reinterpret_cast<unsigned char*>(ut.params.entries[0].data.data())[0] ^= 0xff;
  std::vector<const lsnet::ParameterSet<float>*> acc;
  std::vector<std::uint64_t> counts;
  bool digests_ok = true;
  for (const auto* u : {&ua, &ub, &ut}) {
    const auto v = fedsim::verify_update(*u, reg, 9, global, {});
    if (v.accepted) {
      // accepted updates must pass digest recomputation
      const auto bytes2 = fedsim::canonical_bytes(u->round, u->client_id, u->params);
      const auto digest2 = fedsim::sha256(bytes2.data(), bytes2.size());
      digests_ok = digests_ok &&
                   std::memcmp(digest2.data(), u->digest.data(), digest2.size()) == 0;
      acc.push_back(&u->params);
      counts.push_back(u->sample_count);
    }
  }
  const bool sentinel_excluded = acc.size() == 2;
  const auto with_sent = fedsim::aggregate_by_samples<float>(acc, counts);
  const auto without = fedsim::aggregate_by_samples<float>({&a, &b}, {10, 30});
  const bool sentinel_ok = sentinel_excluded && bit_equal(with_sent, without);

  char buf[224];
  std::snprintf(buf, sizeof(buf),
                "rejections: flip %d/50, nan %d/50, replay %d/50, unregistered %d/50; "
                "sentinel inert: %s; accepted digests recompute: %s",
                flipped_rej, nan_rej, replay_rej, unreg_rej, sentinel_ok ? "yes" : "NO",
                digests_ok ? "yes" : "NO");
  detail = buf;
  return flipped_rej == trials && nan_rej == trials && replay_rej == trials &&
         unreg_rej == trials && sentinel_ok && digests_ok;
}

// ---------------------------------------------------------------- 7
bool criterion_closed_set(std::string& detail) {
  const auto t0 = std::chrono::steady_clock::now();
  auto cfg = desk_config();
  cfg.mode = "central";
  cfg.seed = 7;
  const fs::path dir = work_dir() / "closed_set";
  fs::remove_all(dir);
  const auto rr = harness::run_experiment(cfg, dir);
  const double minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "7 classes, 200/50 per class @ {0,10} dB, 10 epochs: accuracy=%.4f "
                "(>=0.90), runtime=%.1f min (<=20)",
                rr.final_accuracy, minutes);
  detail = buf;
  return rr.final_accuracy >= 0.90 && minutes <= 20.0;
}

// ---------------------------------------------------------------- 8
bool criterion_open_set(std::string& detail) {
  std::vector<double> aurocs;
  for (std::uint64_t seed : {81ull, 82ull, 83ull}) {
    auto cfg = desk_config();
    cfg.mode = "central";
    cfg.known_classes = {"DJI", "FutabaT7", "FutabaT14", "Graupner", "Turnigy"};
    cfg.unknown_classes = {"Noise", "Taranis"};
    cfg.seed = seed;
    const fs::path dir = work_dir() / ("open_set_" + std::to_string(seed));
    fs::remove_all(dir);
    const auto rr = harness::run_experiment(cfg, dir);
    if (!rr.final_auroc) {
      detail = "run produced no AUROC";
      return false;
    }
    aurocs.push_back(*rr.final_auroc);
  }
  const double mean = (aurocs[0] + aurocs[1] + aurocs[2]) / 3.0;
  const double lo = std::min({aurocs[0], aurocs[1], aurocs[2]});
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "known-5/unknown-2 split, 3 seeds: AUROC = {%.3f, %.3f, %.3f}, mean=%.3f "
                "(>=0.65), min=%.3f (>0.55)",
                aurocs[0], aurocs[1], aurocs[2], mean, lo);
  detail = buf;
  return mean >= 0.65 && lo > 0.55;
}

// ---------------------------------------------------------------- 9
bool criterion_fl_trend(std::string& detail) {
  double acc_m5 = 0.0, acc_m1 = 0.0;
  for (std::uint64_t seed : {91ull, 92ull, 93ull}) {
    for (int m : {1, 5}) {
      auto cfg = desk_config();
      cfg.mode = "federated";
      cfg.synthetic->train_per_class = 100;
      cfg.synthetic->test_per_class = 50;
      cfg.clients = 5;
      cfg.per_round = m;
      cfg.rounds = 50;
      cfg.local_epochs = 1;
      cfg.fed_lr = 0.05;
      cfg.fed_batch = 64;
      cfg.seed = seed;
      const fs::path dir =
          work_dir() / ("fl_trend_m" + std::to_string(m) + "_" + std::to_string(seed));
      fs::remove_all(dir);
      const auto rr = harness::run_experiment(cfg, dir);
      (m == 5 ? acc_m5 : acc_m1) += rr.final_accuracy / 3.0;
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "c=5, T=50, mean over 3 seeds: accuracy m=5 %.4f vs m=1 %.4f, "
                "gap=%.2f points (>=2)",
                acc_m5, acc_m1, (acc_m5 - acc_m1) * 100.0);
  detail = buf;
  return acc_m5 - acc_m1 >= 0.02;
}

// ---------------------------------------------------------------- 10
bool criterion_reproducibility(std::string& detail) {
  auto cfg = desk_config();
  cfg.mode = "central";
  cfg.synthetic->train_per_class = 24;
  cfg.synthetic->test_per_class = 8;
  cfg.known_classes = {"DJI", "Graupner", "Noise"};
  cfg.unknown_classes = {"Taranis"};
  cfg.epochs = 2;
  cfg.batch = 16;
  cfg.seed = 101;
  const fs::path d1 = work_dir() / "repro_a";
  const fs::path d2 = work_dir() / "repro_b";
  fs::remove_all(d1);
  fs::remove_all(d2);
  harness::run_experiment(cfg, d1);
  const auto from_manifest = harness::load_config(d1 / "run.json");
  harness::run_experiment(from_manifest, d2);
  const bool metrics_same = slurp(d1 / "metrics.csv") == slurp(d2 / "metrics.csv");
  const bool scores_same = slurp(d1 / "known_scores.csv") == slurp(d2 / "known_scores.csv") &&
                           slurp(d1 / "unknown_scores.csv") == slurp(d2 / "unknown_scores.csv");
  const bool confusion_same = slurp(d1 / "confusion.csv") == slurp(d2 / "confusion.csv");
  detail = std::string("manifest re-run: metrics.csv bit-identical: ") +
           (metrics_same ? "yes" : "NO") + "; score CSVs identical: " +
           (scores_same ? "yes" : "NO") + "; confusion identical: " +
           (confusion_same ? "yes" : "NO");
  return metrics_same && scores_same && confusion_same;
}

struct Criterion {
  int id;
  const char* name;
  std::function<bool(std::string&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "architecture fidelity", criterion_architecture},
      {2, "loss identity and gradients", criterion_loss_identity},
      {3, "openness table", criterion_openness},
      {4, "metrics oracles", criterion_metrics_oracles},
      {5, "fedavg correctness", criterion_fedavg},
      {6, "zero-trust policy", criterion_zero_trust},
      {7, "desk-scale closed-set learning", criterion_closed_set},
      {8, "desk-scale open-set rejection", criterion_open_set},
      {9, "federated participation trend", criterion_fl_trend},
      {10, "manifest reproducibility", criterion_reproducibility},
  };

  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    std::string detail;
    bool ok = false;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      ok = c.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
      ok = false;
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] criterion %2d (%s): %s [%.1fs]\n", ok ? "PASS" : "FAIL", c.id, c.name,
                detail.c_str(), secs);
    std::fflush(stdout);
    failures += ok ? 0 : 1;
  }
  if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
