#include "uavfl/fedsim/federation.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "uavfl/lsnet/checkpoint.hpp"
#include "uavfl/metrics/metrics.hpp"

namespace uavfl::fedsim {

namespace {
constexpr std::uint64_t kTagSelect = 0x73656c656374ull;
constexpr std::uint64_t kTagKeys = 0x6b657970616972ull;
constexpr std::uint64_t kTagPartition = 0x7061727469ull;
}  // namespace

std::vector<std::vector<int>> partition_indices(const std::vector<int>& labels, int n_clients,
                                                std::uint64_t seed) {
  require(n_clients >= 1, "partition: need at least one client");
  std::vector<std::vector<int>> shards(static_cast<std::size_t>(n_clients));
  int max_label = -1;
  for (int l : labels) max_label = std::max(max_label, l);
  for (int cls = 0; cls <= max_label; ++cls) {
    std::vector<int> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) idx.push_back(static_cast<int>(i));
    if (idx.empty()) continue;
    Rng rng(derive_seed(seed, kTagPartition, static_cast<std::uint64_t>(cls)));
    rng.shuffle(idx);
    const std::size_t q = idx.size() / static_cast<std::size_t>(n_clients);
    const std::size_t r = idx.size() % static_cast<std::size_t>(n_clients);
    std::size_t at = 0;
    for (std::size_t k = 0; k < static_cast<std::size_t>(n_clients); ++k) {
      const std::size_t take = q + (k < r ? 1 : 0);
      for (std::size_t j = 0; j < take; ++j) shards[k].push_back(idx[at++]);
    }
  }
  for (auto& s : shards) std::sort(s.begin(), s.end());
  return shards;
}

lsnet::SpecDataset subset(const lsnet::SpecDataset& data, const std::vector<int>& idx) {
  lsnet::SpecDataset out;
  out.channels = data.channels;
  out.height = data.height;
  out.width = data.width;
  out.class_names = data.class_names;
  for (int i : idx) {
    out.images.push_back(data.images[static_cast<std::size_t>(i)]);
    out.labels.push_back(data.labels[static_cast<std::size_t>(i)]);
    out.snrs.push_back(data.snrs[static_cast<std::size_t>(i)]);
  }
  return out;
}

rfgen::LabeledDataset subset(const rfgen::LabeledDataset& data, const std::vector<int>& idx) {
  rfgen::LabeledDataset out;
  out.classes = data.classes;
  out.split = data.split;
  for (int i : idx) out.items.push_back(data.items[static_cast<std::size_t>(i)]);
  for (const auto& [label, n] : out.count_by_class()) out.manifest[label] = n;
  return out;
}

std::vector<std::uint32_t> select_clients(int n_clients, int m, int round, std::uint64_t seed) {
  require(m >= 1 && m <= n_clients, "select_clients: m out of range");
  std::vector<std::uint32_t> ids(static_cast<std::size_t>(n_clients));
  std::iota(ids.begin(), ids.end(), 0u);
  Rng rng(derive_seed(seed, kTagSelect, static_cast<std::uint64_t>(round)));
  // partial Fisher-Yates: the first m entries are a uniform sample
  for (int i = 0; i < m; ++i) {
    const auto j = static_cast<std::size_t>(i) +
                   static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(n_clients - i)));
    std::swap(ids[static_cast<std::size_t>(i)], ids[j]);
  }
  ids.resize(static_cast<std::size_t>(m));
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::pair<lsnet::ParameterSet<float>, std::uint64_t> local_train(
    const lsnet::ParameterSet<float>& global, const lsnet::SpecDataset& shard,
    const lsnet::LSNetConfig& model_cfg, const LocalTrainConfig& cfg, std::uint64_t train_seed,
    std::uint32_t client_id, long global_epoch_base) {
  require(shard.size() > 0, "local_train: empty shard");
  lsnet::LSNet<float> model(model_cfg, 0);
  model.load(global);
  lsnet::OptimConfig oc;
  oc.lr = cfg.lr;
  oc.momentum = cfg.momentum;
  oc.cosine = cfg.cosine;
  oc.total_steps =
      static_cast<long>(cfg.epochs) * ((shard.size() + cfg.batch - 1) / cfg.batch);
  lsnet::Sgd<float> opt(model, oc);
  const auto centers = caloss::make_centers<float>(model_cfg.num_classes,
                                                   static_cast<float>(cfg.loss.alpha));
  long step = 0;
  for (int e = 0; e < cfg.epochs; ++e) {
    const std::uint64_t es = lsnet::epoch_seed_of(train_seed, client_id, global_epoch_base + e);
    lsnet::train_epoch(model, shard, centers, cfg.loss, opt, cfg.batch, step, es);
  }
  return {model.extract(), static_cast<std::uint64_t>(shard.size())};
}

namespace {

void evaluate_into(lsnet::LSNet<float>& model, const EvalContext& eval, double alpha,
                   RoundRecord& rec) {
  if (!eval.test_known) return;
  const auto centers =
      caloss::make_centers<float>(model.config().num_classes, static_cast<float>(alpha));
  const auto logits = lsnet::eval_logits(model, *eval.test_known);
  std::vector<int> preds;
  std::vector<double> known_scores;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const auto d = caloss::predict_and_score<float>(logits.row(i).transpose(), centers,
                                                    std::nullopt, eval.score_kind);
    preds.push_back(d.cls);
    known_scores.push_back(d.score);
  }
  int correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i] == eval.test_known->labels[i]) ++correct;
  rec.accuracy = static_cast<double>(correct) / static_cast<double>(preds.size());
  if (eval.test_unknown && eval.test_unknown->size() > 0) {
    const auto ulogits = lsnet::eval_logits(model, *eval.test_unknown);
    std::vector<double> unknown_scores;
    for (Eigen::Index i = 0; i < ulogits.rows(); ++i)
      unknown_scores.push_back(caloss::predict_and_score<float>(ulogits.row(i).transpose(),
                                                                centers, std::nullopt,
                                                                eval.score_kind)
                                   .score);
    rec.auroc_value = metrics::auroc(known_scores, unknown_scores);
  }
}

nlohmann::json record_to_json(const RoundRecord& r) {
  nlohmann::json jv = nlohmann::json::array();
  for (const auto& v : r.verdicts)
    jv.push_back({{"client", v.client},
                  {"accepted", v.accepted},
                  {"reason", v.reason},
                  {"distance", v.distance}});
  nlohmann::json j{{"round", r.round},
                   {"selected", r.selected},
                   {"verdicts", jv},
                   {"aggregated", r.aggregated},
                   {"aggregate_norm", r.aggregate_norm}};
  if (r.accuracy) j["accuracy"] = *r.accuracy;
  if (r.auroc_value) j["auroc"] = *r.auroc_value;
  return j;
}

}  // namespace

void write_history(const std::filesystem::path& path, const std::vector<RoundRecord>& history) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "write_history: cannot open " + path.string());
  for (const auto& r : history) out << record_to_json(r).dump() << "\n";
}

FederationResult run_federation(const FedConfig& cfg, const lsnet::LSNetConfig& model_cfg,
                                std::uint64_t model_seed, const lsnet::SpecDataset& train_data,
                                const EvalContext& eval,
                                const std::filesystem::path* history_path,
                                const std::filesystem::path* checkpoint_dir) {
  require(cfg.n_clients >= 1 && cfg.per_round >= 1 && cfg.per_round <= cfg.n_clients,
          "run_federation: bad client configuration");
  require(cfg.rounds >= 0, "run_federation: bad round count");

  const auto shards = partition_indices(train_data.labels, cfg.n_clients, cfg.seed);
  std::vector<lsnet::SpecDataset> client_data;
  client_data.reserve(shards.size());
  for (const auto& s : shards) client_data.push_back(subset(train_data, s));

  std::vector<Keypair> keys;
  KeyRegistry registry;
  for (int k = 0; k < cfg.n_clients; ++k) {
    keys.push_back(make_keypair(derive_seed(cfg.seed, kTagKeys, static_cast<std::uint64_t>(k))));
    registry.add(static_cast<std::uint32_t>(k), keys.back().pub);
  }

  lsnet::LSNet<float> global_model(model_cfg, model_seed);
  lsnet::ParameterSet<float> global = global_model.extract();
  lsnet::LSNet<float> eval_model(model_cfg, 0);

  const std::uint64_t tseed = train_seed_of(cfg.seed);
  std::optional<double> prev_median;
  FederationResult result;

  std::ofstream hist_stream;
  if (history_path) {
    hist_stream.open(*history_path, std::ios::binary);
    require(hist_stream.good(), "run_federation: cannot open history " + history_path->string());
  }

  for (int t = 0; t < cfg.rounds; ++t) {
    RoundRecord rec;
    rec.round = t;
    rec.selected = select_clients(cfg.n_clients, cfg.per_round, t, cfg.seed);

    VerifyPolicy policy;
    if (cfg.norm_policy.kind == NormPolicyConfig::Kind::Fixed)
      policy.norm_bound = cfg.norm_policy.value;
    else if (cfg.norm_policy.kind == NormPolicyConfig::Kind::Adaptive && prev_median)
      policy.norm_bound = cfg.norm_policy.value * *prev_median;

    std::vector<SignedUpdate> accepted;
    std::vector<double> accepted_dists;
    for (std::uint32_t k : rec.selected) {
      VerdictRecord vr;
      vr.client = k;
      try {
        auto [params, count] =
            local_train(global, client_data[k], model_cfg, cfg.local, tseed, k,
                        static_cast<long>(t) * cfg.local.epochs);
        SignedUpdate update = sign_update(params, k, static_cast<std::uint32_t>(t), keys[k], count);
        if (cfg.tamper_hook && cfg.tamper_clients.count(k)) cfg.tamper_hook(update);
        const Verdict v = verify_update(update, registry, static_cast<std::uint32_t>(t), global, policy);
        vr.accepted = v.accepted;
        vr.reason = v.reason;
        vr.distance = lsnet::l2_distance(update.params, global);
        if (v.accepted) {
          accepted_dists.push_back(vr.distance);
          accepted.push_back(std::move(update));
        }
      } catch (const lsnet::TrainingDiverged&) {
        vr.accepted = false;
        vr.reason = "nonfinite-loss";
      }
      rec.verdicts.push_back(std::move(vr));
    }

    if (!accepted.empty()) {
      std::vector<const lsnet::ParameterSet<float>*> ps;
      std::vector<std::uint64_t> counts;
      for (const auto& u : accepted) {
        ps.push_back(&u.params);
        counts.push_back(u.sample_count);
      }
      global = aggregate_by_samples(ps, counts);
      rec.aggregated = true;
      std::sort(accepted_dists.begin(), accepted_dists.end());
      prev_median = accepted_dists[accepted_dists.size() / 2];
    } else {
      rec.aggregated = false;  // carry the global model forward unchanged
    }
    rec.aggregate_norm = lsnet::l2_norm(global);

    const bool do_eval =
        (cfg.eval_cadence > 0 && (t + 1) % cfg.eval_cadence == 0) || t == cfg.rounds - 1;
    if (do_eval && eval.test_known) {
      eval_model.load(global);
      evaluate_into(eval_model, eval, cfg.local.loss.alpha, rec);
    }
    if (do_eval && checkpoint_dir) {
      char name[48];
      std::snprintf(name, sizeof(name), "ckpt_round_%04d.bin", t);
      lsnet::save_checkpoint(*checkpoint_dir / name, global, model_cfg, model_seed);
    }
    if (history_path) hist_stream << record_to_json(rec).dump() << "\n";
    result.history.push_back(std::move(rec));
  }
  result.global = std::move(global);
  result.registry = registry;
  return result;
}

}  // namespace uavfl::fedsim
