#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "uavfl/fedsim/federation.hpp"

using namespace uavfl;
using namespace uavfl::fedsim;
using uavfl::lsnet::ParameterSet;

namespace {

/// Small synthetic two-class spectrogram dataset used across the tests.
lsnet::SpecDataset toy_dataset(int per_class, std::uint64_t seed) {
  rfgen::DatasetConfig dc;
  dc.classes = {"DJI", "Turnigy"};
  dc.per_class = per_class;
  dc.train_per_class = per_class;
  dc.test_per_class = 0;
  dc.snr_grid_db = {10.0};
  dc.seed = seed;
  dc.interference_prob = 0.0;
  return lsnet::to_spec_dataset(rfgen::build_dataset(dc).train, {});
}

lsnet::LSNetConfig toy_model() {
  lsnet::LSNetConfig cfg;
  cfg.num_classes = 2;
  return cfg;
}

ParameterSet<float> random_ps(std::uint64_t seed, int entries = 3, int n = 5) {
  ParameterSet<float> ps;
  Rng rng(seed);
  for (int e = 0; e < entries; ++e) {
    ParameterSet<float>::Entry en;
    en.name = "p" + std::to_string(e);
    en.rows = n;
    en.cols = 1;
    en.trainable = true;
    for (int i = 0; i < n; ++i) en.data.push_back(static_cast<float>(rng.normal()));
    ps.entries.push_back(std::move(en));
  }
  return ps;
}

bool bit_equal(const ParameterSet<float>& a, const ParameterSet<float>& b) {
  if (a.entries.size() != b.entries.size()) return false;
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    if (a.entries[i].data.size() != b.entries[i].data.size()) return false;
    if (std::memcmp(a.entries[i].data.data(), b.entries[i].data.data(),
                    a.entries[i].data.size() * sizeof(float)) != 0)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("partition: balanced shards, disjoint and exhaustive union") {
  std::vector<int> labels;
  for (int c = 0; c < 7; ++c)
    for (int i = 0; i < 20; ++i) labels.push_back(c);
  const auto shards = partition_indices(labels, 5, 3);
  REQUIRE(shards.size() == 5);
  std::set<int> all;
  for (const auto& s : shards) {
    CHECK(s.size() == 28);  // 7 classes x 4 each
    std::map<int, int> per_class;
    for (int i : s) {
      per_class[labels[static_cast<std::size_t>(i)]] += 1;
      CHECK(all.insert(i).second);  // disjoint
    }
    for (const auto& [cls, n] : per_class) CHECK(n == 4);
  }
  CHECK(all.size() == labels.size());  // exhaustive
}

TEST_CASE("partition: one client gets the full dataset; remainders documented") {
  std::vector<int> labels{0, 0, 0, 1, 1, 1, 1};
  const auto one = partition_indices(labels, 1, 7);
  REQUIRE(one.size() == 1);
  CHECK(one[0].size() == labels.size());

  const auto two = partition_indices(labels, 2, 7);
  // per-class remainders go to the lowest client ids
  CHECK(two[0].size() == 4);
  CHECK(two[1].size() == 3);
}

TEST_CASE("select_clients: edge cases and determinism") {
  const auto all = select_clients(5, 5, 0, 1);
  CHECK(all == std::vector<std::uint32_t>{0, 1, 2, 3, 4});
  const auto one = select_clients(5, 1, 3, 1);
  CHECK(one.size() == 1);
  CHECK(select_clients(9, 4, 7, 42) == select_clients(9, 4, 7, 42));
  bool differs = false;
  for (int r = 0; r < 8 && !differs; ++r)
    differs = select_clients(9, 4, r, 42) != select_clients(9, 4, r + 1, 42);
  CHECK(differs);
  CHECK_THROWS_AS(select_clients(5, 6, 0, 1), ValidationError);
}

TEST_CASE("sign/verify: round-trip accepts, tampering rejects with reasons") {
  const auto ps = random_ps(1);
  const auto kp = make_keypair(5);
  KeyRegistry reg;
  reg.add(3, kp.pub);
  const auto update = sign_update(ps, 3, 7, kp, 100);

  SUBCASE("round-trip accepts") {
    const auto v = verify_update(update, reg, 7, ps, {});
    CHECK(v.accepted);
    CHECK(v.reason == "ok");
  }
  SUBCASE("flipped byte -> digest mismatch") {
    auto tampered = update;
    auto* bytes = reinterpret_cast<unsigned char*>(tampered.params.entries[1].data.data());
    bytes[2] ^= 0x01;
    const auto v = verify_update(tampered, reg, 7, ps, {});
    CHECK(!v.accepted);
    CHECK(v.reason == "digest-mismatch");
  }
  SUBCASE("re-signed non-finite payload -> non-finite") {
    auto ps_bad = ps;
    ps_bad.entries[0].data[0] = std::numeric_limits<float>::quiet_NaN();
    const auto resigned = sign_update(ps_bad, 3, 7, kp, 100);
    const auto v = verify_update(resigned, reg, 7, ps, {});
    CHECK(!v.accepted);
    CHECK(v.reason == "non-finite");
  }
  SUBCASE("stale round replay -> round mismatch") {
    const auto stale = sign_update(ps, 3, 6, kp, 100);
    const auto v = verify_update(stale, reg, 7, ps, {});
    CHECK(!v.accepted);
    CHECK(v.reason == "round-mismatch");
  }
  SUBCASE("unregistered key -> rejected") {
    const auto other = make_keypair(999);
    const auto foreign = sign_update(ps, 4, 7, other, 100);
    const auto v = verify_update(foreign, reg, 7, ps, {});
    CHECK(!v.accepted);
    CHECK(v.reason == "unregistered-key");
  }
  SUBCASE("wrong key for a registered id -> bad signature") {
    const auto other = make_keypair(999);
    const auto forged = sign_update(ps, 3, 7, other, 100);
    const auto v = verify_update(forged, reg, 7, ps, {});
    CHECK(!v.accepted);
    CHECK(v.reason == "bad-signature");
  }
  SUBCASE("shape mismatch -> rejected") {
    const auto v = verify_update(update, reg, 7, random_ps(2, 2), {});
    CHECK(!v.accepted);
    CHECK(v.reason == "shape-mismatch");
  }
  SUBCASE("norm bound enforced") {
    VerifyPolicy policy;
    policy.norm_bound = 1e-9;
    auto far = ps;
    far.entries[0].data[0] += 5.0f;
    const auto upd = sign_update(far, 3, 7, kp, 100);
    const auto v = verify_update(upd, reg, 7, ps, policy);
    CHECK(!v.accepted);
    CHECK(v.reason == "norm-bound");
  }
}

TEST_CASE("signatures bind the round index") {
  const auto ps = random_ps(3);
  const auto kp = make_keypair(8);
  const auto u1 = sign_update(ps, 1, 1, kp, 10);
  const auto u2 = sign_update(ps, 1, 2, kp, 10);
  CHECK(std::memcmp(u1.digest.data(), u2.digest.data(), u1.digest.size()) != 0);
}

TEST_CASE("key registry save/load round-trip") {
  namespace fs = std::filesystem;
  KeyRegistry reg;
  for (std::uint32_t k = 0; k < 4; ++k) reg.add(k, make_keypair(k).pub);
  const fs::path path = fs::temp_directory_path() / "uavfl_registry_test.txt";
  reg.save(path);
  const auto loaded = KeyRegistry::load(path);
  CHECK(loaded.size() == 4);
  for (std::uint32_t k = 0; k < 4; ++k) CHECK(loaded.lookup(k) == reg.lookup(k));
  fs::remove(path);
}

TEST_CASE("aggregate: arithmetic identities") {
  auto a = random_ps(1, 1, 4), b = random_ps(2, 1, 4), c = random_ps(3, 1, 4);
  a.entries[0].data = {1.0f, 1.0f, 1.0f, 1.0f};
  b.entries[0].data = {3.0f, 3.0f, 3.0f, 3.0f};
  const auto mean2 = aggregate<float>({&a, &b}, {1.0, 1.0});
  for (float v : mean2.entries[0].data) CHECK(v == 2.0f);

  const auto solo = aggregate<float>({&a}, {17.0});
  CHECK(bit_equal(solo, a));

  a.entries[0].data = {0.0f, 0.0f, 0.0f, 0.0f};
  b.entries[0].data = {3.0f, 3.0f, 3.0f, 3.0f};
  c.entries[0].data = {6.0f, 6.0f, 6.0f, 6.0f};
  const auto weighted = aggregate<float>({&a, &b, &c}, {1.0, 2.0, 1.0});
  for (float v : weighted.entries[0].data) CHECK(v == 3.0f);  // hand-computed oracle
}

TEST_CASE("aggregate equals an independent weighted-mean oracle to 1e-12") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<ParameterSet<double>> sets;
    std::vector<double> weights;
    const int n_updates = 2 + static_cast<int>(rng.below(4));
    for (int u = 0; u < n_updates; ++u) {
      ParameterSet<double> ps;
      ParameterSet<double>::Entry e;
      e.name = "w";
      e.rows = 16;
      e.cols = 1;
      for (int i = 0; i < 16; ++i) e.data.push_back(rng.normal());
      ps.entries.push_back(e);
      sets.push_back(std::move(ps));
      weights.push_back(1.0 + rng.below(9));
    }
    std::vector<const ParameterSet<double>*> refs;
    for (const auto& s : sets) refs.push_back(&s);
    const auto agg = aggregate<double>(refs, weights);

    double wsum = 0;
    for (double w : weights) wsum += w;
    for (int i = 0; i < 16; ++i) {
      long double acc = 0;  // independent accumulation path
      for (std::size_t u = 0; u < sets.size(); ++u)
        acc += static_cast<long double>(weights[u]) * sets[u].entries[0].data[static_cast<std::size_t>(i)];
      const double oracle = static_cast<double>(acc / wsum);
      CHECK(std::abs(agg.entries[0].data[static_cast<std::size_t>(i)] - oracle) < 1e-12);
    }
  }
}

TEST_CASE("equal shard sizes make FedAvg the unweighted mean") {
  const auto a = random_ps(11, 1, 8), b = random_ps(12, 1, 8), c = random_ps(13, 1, 8);
  const auto agg = aggregate_by_samples<float>({&a, &b, &c}, {40, 40, 40});
  for (int i = 0; i < 8; ++i) {
    const double mean = (static_cast<double>(a.entries[0].data[static_cast<std::size_t>(i)]) +
                         b.entries[0].data[static_cast<std::size_t>(i)] +
                         c.entries[0].data[static_cast<std::size_t>(i)]) /
                        3.0;
    CHECK(agg.entries[0].data[static_cast<std::size_t>(i)] ==
          doctest::Approx(mean).epsilon(1e-7));
  }
}

TEST_CASE("local_train: zero epochs returns the global parameters unchanged") {
  const auto data = toy_dataset(6, 21);
  lsnet::LSNet<float> model(toy_model(), 5);
  const auto global = model.extract();
  LocalTrainConfig cfg;
  cfg.epochs = 0;
  const auto [out, n] = local_train(global, data, toy_model(), cfg, 1, 0, 0);
  CHECK(n == static_cast<std::uint64_t>(data.size()));
  CHECK(bit_equal(out, global));
}

TEST_CASE("local_train: loss decreases on a separable toy shard") {
  const auto data = toy_dataset(24, 22);
  lsnet::LSNet<float> model(toy_model(), 5);
  lsnet::OptimConfig oc;
  oc.lr = 0.05;
  lsnet::Sgd<float> opt(model, oc);
  const auto centers = caloss::make_centers<float>(2, 0.1f);
  long step = 0;
  double first = 0, last = 0;
  for (int e = 0; e < 5; ++e) {
    const double loss = lsnet::train_epoch(model, data, centers, {}, opt, 16, step,
                                           lsnet::epoch_seed_of(7, 0, e));
    if (e == 0) first = loss;
    last = loss;
  }
  CHECK(last < first);
}

TEST_CASE("local_train is deterministic given identical inputs") {
  const auto data = toy_dataset(8, 23);
  lsnet::LSNet<float> model(toy_model(), 5);
  const auto global = model.extract();
  LocalTrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch = 8;
  const auto [a, na] = local_train(global, data, toy_model(), cfg, 77, 2, 4);
  const auto [b, nb] = local_train(global, data, toy_model(), cfg, 77, 2, 4);
  CHECK(na == nb);
  CHECK(bit_equal(a, b));
}

TEST_CASE("federation: m=c=1 reproduces centralized SGD bit-identically") {
  const auto data = toy_dataset(12, 24);
  const auto mcfg = toy_model();
  const std::uint64_t master = 99;

  FedConfig fc;
  fc.n_clients = 1;
  fc.per_round = 1;
  fc.rounds = 2;
  fc.local.epochs = 1;
  fc.local.batch = 8;
  fc.local.lr = 0.05;
  fc.local.momentum = 0.0;
  fc.seed = master;
  fc.norm_policy.kind = NormPolicyConfig::Kind::None;
  const auto fed = run_federation(fc, mcfg, 1234, data);

  lsnet::LSNet<float> central(mcfg, 1234);
  lsnet::OptimConfig oc;
  oc.lr = 0.05;
  lsnet::Sgd<float> opt(central, oc);
  const auto centers = caloss::make_centers<float>(2, 0.1f);
  const std::uint64_t tseed = train_seed_of(master);
  long step = 0;
  for (int e = 0; e < 2; ++e)
    lsnet::train_epoch(central, data, centers, {}, opt, 8, step,
                       lsnet::epoch_seed_of(tseed, 0, e));
  CHECK(bit_equal(fed.global, central.extract()));
}

TEST_CASE("federation: audit history and verdicts cover the selected set") {
  const auto data = toy_dataset(12, 25);
  FedConfig fc;
  fc.n_clients = 3;
  fc.per_round = 2;
  fc.rounds = 3;
  fc.local.epochs = 1;
  fc.local.batch = 8;
  fc.seed = 5;
  const auto result = run_federation(fc, toy_model(), 77, data);
  REQUIRE(result.history.size() == 3);
  for (const auto& rec : result.history) {
    CHECK(rec.selected.size() == 2);
    CHECK(rec.verdicts.size() == rec.selected.size());
    CHECK(rec.aggregated);
    for (const auto& v : rec.verdicts) CHECK(v.accepted);
  }
}

TEST_CASE("federation: T=0 returns the initialized model") {
  const auto data = toy_dataset(6, 26);
  FedConfig fc;
  fc.n_clients = 2;
  fc.per_round = 1;
  fc.rounds = 0;
  fc.seed = 6;
  const auto result = run_federation(fc, toy_model(), 31, data);
  lsnet::LSNet<float> fresh(toy_model(), 31);
  CHECK(bit_equal(result.global, fresh.extract()));
  CHECK(result.history.empty());
}

TEST_CASE("federation: history is reproducible from (config, seed)") {
  const auto data = toy_dataset(10, 27);
  FedConfig fc;
  fc.n_clients = 3;
  fc.per_round = 2;
  fc.rounds = 2;
  fc.local.epochs = 1;
  fc.local.batch = 8;
  fc.seed = 11;

  namespace fs = std::filesystem;
  const fs::path h1 = fs::temp_directory_path() / "uavfl_hist_a.jsonl";
  const fs::path h2 = fs::temp_directory_path() / "uavfl_hist_b.jsonl";
  run_federation(fc, toy_model(), 3, data, {}, &h1);
  run_federation(fc, toy_model(), 3, data, {}, &h2);
  std::ifstream f1(h1), f2(h2);
  std::stringstream s1, s2;
  s1 << f1.rdbuf();
  s2 << f2.rdbuf();
  CHECK(s1.str() == s2.str());
  CHECK(!s1.str().empty());
  fs::remove(h1);
  fs::remove(h2);
}

TEST_CASE("rejected updates never influence the aggregate (sentinel)") {
  const auto ps_a = random_ps(31, 2, 6);
  const auto ps_b = random_ps(32, 2, 6);
  auto sentinel = random_ps(33, 2, 6);
  for (auto& e : sentinel.entries)
    for (auto& v : e.data) v = 1e6f;  // obvious poison values

  const auto kp_a = make_keypair(1), kp_b = make_keypair(2), kp_evil = make_keypair(3);
  KeyRegistry reg;
  reg.add(0, kp_a.pub);
  reg.add(1, kp_b.pub);
  reg.add(2, kp_evil.pub);
  const auto global = random_ps(30, 2, 6);

  auto u_a = sign_update(ps_a, 0, 4, kp_a, 10);
  auto u_b = sign_update(ps_b, 1, 4, kp_b, 10);
  auto u_evil = sign_update(sentinel, 2, 4, kp_evil, 10);
  u_evil.params.entries[0].data[0] += 1.0f;  // tamper after signing

  std::vector<const ParameterSet<float>*> accepted;
  std::vector<std::uint64_t> counts;
  for (const auto* u : {&u_a, &u_b, &u_evil}) {
    const auto v = verify_update(*u, reg, 4, global, {});
    if (v.accepted) {
      accepted.push_back(&u->params);
      counts.push_back(u->sample_count);
    }
  }
  REQUIRE(accepted.size() == 2);
  const auto with_reject = aggregate_by_samples<float>(accepted, counts);
  const auto without = aggregate_by_samples<float>({&ps_a, &ps_b}, {10, 10});
  CHECK(bit_equal(with_reject, without));
}

TEST_CASE("permanently malicious client is rejected every round, others aggregate") {
  const auto data = toy_dataset(9, 28);
  FedConfig fc;
  fc.n_clients = 3;
  fc.per_round = 3;
  fc.rounds = 2;
  fc.local.epochs = 1;
  fc.local.batch = 8;
  fc.seed = 13;
  fc.tamper_clients = {2};
  fc.tamper_hook = [](SignedUpdate& u) {
    auto* bytes = reinterpret_cast<unsigned char*>(u.params.entries[0].data.data());
    bytes[0] ^= 0x80;
  };
  const auto tampered = run_federation(fc, toy_model(), 7, data);
  for (const auto& rec : tampered.history) {
    CHECK(rec.verdicts.size() == 3);
    int rejections = 0;
    for (const auto& v : rec.verdicts) {
      if (!v.accepted) {
        ++rejections;
        CHECK(v.client == 2);
        CHECK(v.reason == "digest-mismatch");
      }
    }
    CHECK(rejections == 1);
    CHECK(rec.aggregated);
  }

  // the tampered submission must not influence the aggregate: a clean run
  // over only the two honest clients' updates would give the same model
  FedConfig fc_clean = fc;
  fc_clean.tamper_clients.clear();
  fc_clean.tamper_hook = nullptr;
  const auto clean = run_federation(fc_clean, toy_model(), 7, data);
  // clean run aggregates 3 clients, tampered run 2: models differ, but the
  // tampered run must equal a run where client 2's update is dropped.
  CHECK(!bit_equal(tampered.global, clean.global));
}
