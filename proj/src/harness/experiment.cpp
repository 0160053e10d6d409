#include "uavfl/harness/experiment.hpp"

#include <cstdio>
#include <fstream>

#include "uavfl/fedsim/federation.hpp"
#include "uavfl/lsnet/checkpoint.hpp"
#include "uavfl/metrics/metrics.hpp"
#include "uavfl/rfgen/dataset_io.hpp"

namespace uavfl::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "uavfl 0.1.0";
constexpr std::uint64_t kTagData = 0x64617461ull;
constexpr std::uint64_t kTagUnknown = 0x756e6bull;
constexpr std::uint64_t kTagModel = 0x6d6f64656cull;

struct MetricsWriter {
  std::ofstream out;
  std::string run_id;
  explicit MetricsWriter(const fs::path& path, std::string id) : run_id(std::move(id)) {
    out.open(path, std::ios::binary);
    require(out.good(), "cannot open metrics file " + path.string());
    out << "run_id,stage,metric,group,value\n";
  }
  void row(const std::string& stage, const std::string& metric, const std::string& group,
           double value) {
    out << run_id << "," << stage << "," << metric << "," << group << ","
        << format_value(value) << "\n";
  }
};

void write_scores(const fs::path& path, const std::vector<double>& scores) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot open " + path.string());
  out << "score\n";
  for (double s : scores) out << format_value(s) << "\n";
}

void write_manifest(const fs::path& run_dir, const ExperimentConfig& cfg,
                    const std::string& status, std::int64_t param_count) {
  json j;
  j["run_format"] = 1;
  j["version"] = kVersion;
  j["config"] = config_to_json(cfg);
  j["seed"] = cfg.seed;
  j["status"] = status;
  if (param_count >= 0) j["param_count"] = param_count;
  std::ofstream out(run_dir / "run.json", std::ios::binary);
  require(out.good(), "cannot open run manifest");
  out << j.dump(2) << "\n";
}

struct Datasets {
  lsnet::SpecDataset train, test_known, test_unknown;
};

Datasets prepare_data(const ExperimentConfig& cfg) {
  specgram::StftParams stft;
  stft.channels = cfg.model.input_channels;
  Datasets out;
  if (cfg.synthetic) {
    rfgen::DatasetConfig dc;
    dc.classes = cfg.known_classes;
    dc.per_class = cfg.synthetic->train_per_class + cfg.synthetic->test_per_class;
    dc.train_per_class = cfg.synthetic->train_per_class;
    dc.test_per_class = cfg.synthetic->test_per_class;
    dc.snr_grid_db = cfg.synthetic->snr_grid_db;
    dc.seed = derive_seed(cfg.seed, kTagData);
    dc.interference_prob = cfg.synthetic->interference_prob;
    dc.min_burst_fill = cfg.synthetic->min_burst_fill;
    const auto pair = rfgen::build_dataset(dc);
    out.train = lsnet::to_spec_dataset(pair.train, stft);
    out.test_known = lsnet::to_spec_dataset(pair.test, stft);
    if (!cfg.unknown_classes.empty()) {
      rfgen::DatasetConfig uc = dc;
      uc.classes = cfg.unknown_classes;
      uc.per_class = cfg.synthetic->test_per_class;
      uc.train_per_class = 0;
      uc.test_per_class = cfg.synthetic->test_per_class;
      uc.seed = derive_seed(cfg.seed, kTagUnknown);
      out.test_unknown = lsnet::to_spec_dataset(rfgen::build_dataset(uc).test, stft);
    }
  } else {
    const auto loaded = rfgen::load_external(cfg.external->path, cfg.external->manifest);
    require(loaded.report.accepted > 0, "external dataset: no usable records");
    // split known/unknown by label, 80/20 train/test on known classes
    std::vector<int> known_idx, unknown_idx;
    for (std::size_t i = 0; i < loaded.dataset.items.size(); ++i) {
      const std::string& label =
          loaded.dataset.classes[static_cast<std::size_t>(loaded.dataset.items[i].label)];
      const bool known =
          std::find(cfg.known_classes.begin(), cfg.known_classes.end(), label) !=
          cfg.known_classes.end();
      const bool unknown =
          std::find(cfg.unknown_classes.begin(), cfg.unknown_classes.end(), label) !=
          cfg.unknown_classes.end();
      if (known) known_idx.push_back(static_cast<int>(i));
      else if (unknown) unknown_idx.push_back(static_cast<int>(i));
    }
    require(!known_idx.empty(), "external dataset: no known-class records");
    Rng rng(derive_seed(cfg.seed, kTagData));
    rng.shuffle(known_idx);
    const std::size_t ntr = known_idx.size() * 8 / 10;
    std::vector<int> tr(known_idx.begin(), known_idx.begin() + static_cast<std::ptrdiff_t>(ntr));
    std::vector<int> te(known_idx.begin() + static_cast<std::ptrdiff_t>(ntr), known_idx.end());
    // relabel into the known-class space
    auto remap = [&](rfgen::LabeledDataset ds) {
      rfgen::LabeledDataset out2;
      out2.classes = cfg.known_classes;
      out2.split = ds.split;
      for (auto& rec : ds.items) {
        const std::string& label = ds.classes[static_cast<std::size_t>(rec.label)];
        const auto it = std::find(cfg.known_classes.begin(), cfg.known_classes.end(), label);
        if (it == cfg.known_classes.end()) continue;
        rec.label = static_cast<int>(it - cfg.known_classes.begin());
        out2.items.push_back(std::move(rec));
      }
      return out2;
    };
    out.train = lsnet::to_spec_dataset(remap(fedsim::subset(loaded.dataset, tr)), stft);
    out.test_known = lsnet::to_spec_dataset(remap(fedsim::subset(loaded.dataset, te)), stft);
    if (!unknown_idx.empty())
      out.test_unknown =
          lsnet::to_spec_dataset(fedsim::subset(loaded.dataset, unknown_idx), stft);
  }
  require(out.train.size() > 0 && out.test_known.size() > 0, "dataset stages produced no data");
  return out;
}

caloss::ScoreKind score_kind_of(const ExperimentConfig& cfg) {
  return cfg.score == "softmin" ? caloss::ScoreKind::SoftminProb
                                : caloss::ScoreKind::MinDistance;
}

struct EvalOutputs {
  double accuracy = 0.0;
  std::optional<double> auroc_v;
};

EvalOutputs evaluate_final(lsnet::LSNet<float>& model, const ExperimentConfig& cfg,
                           const Datasets& data, const fs::path& run_dir, MetricsWriter& mw) {
  const auto centers = caloss::make_centers<float>(model.config().num_classes,
                                                   static_cast<float>(cfg.alpha));
  const auto kind = score_kind_of(cfg);
  const auto logits = lsnet::eval_logits(model, data.test_known);
  std::vector<int> preds;
  std::vector<double> known_scores;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const auto d =
        caloss::predict_and_score<float>(logits.row(i).transpose(), centers, std::nullopt, kind);
    preds.push_back(d.cls);
    known_scores.push_back(d.score);
  }
  const auto rep = metrics::accuracy_report(preds, data.test_known.labels, data.test_known.snrs,
                                            model.config().num_classes);
  mw.row("eval", "accuracy_overall", "", rep.overall_accuracy);
  for (const auto& [snr, acc] : rep.per_snr_accuracy) {
    char group[32];
    std::snprintf(group, sizeof(group), "snr=%g", snr);
    mw.row("eval", "accuracy", group, acc);
  }
  metrics::write_confusion_csv((run_dir / "confusion.csv").string(), rep.confusion,
                               cfg.known_classes);
  write_scores(run_dir / "known_scores.csv", known_scores);

  EvalOutputs out;
  out.accuracy = rep.overall_accuracy;
  if (data.test_unknown.size() > 0) {
    const auto ulogits = lsnet::eval_logits(model, data.test_unknown);
    std::vector<double> unknown_scores;
    for (Eigen::Index i = 0; i < ulogits.rows(); ++i)
      unknown_scores.push_back(
          caloss::predict_and_score<float>(ulogits.row(i).transpose(), centers, std::nullopt, kind)
              .score);
    write_scores(run_dir / "unknown_scores.csv", unknown_scores);
    out.auroc_v = metrics::auroc(known_scores, unknown_scores);
    mw.row("eval", "auroc", "", *out.auroc_v);
    const int n_tr = static_cast<int>(cfg.known_classes.size());
    const int n_te = n_tr + static_cast<int>(cfg.unknown_classes.size());
    mw.row("eval", "openness", "", metrics::openness(n_tr, n_te));
    mw.row("eval", "threshold_tar95", "", metrics::threshold_for_tar(known_scores, 0.95));
  }
  return out;
}

}  // namespace

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

RunResult run_experiment(const ExperimentConfig& cfg, const fs::path& run_dir) {
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    throw StageError("config", e.what());
  }
  fs::create_directories(run_dir);
  // the run id names the experiment (from its configured output), not the
  // directory a re-run happens to land in, so manifest re-runs reproduce
  // metrics byte-for-byte
  const std::string run_id = fs::path(cfg.out_dir).filename().empty()
                                 ? run_dir.filename().string()
                                 : fs::path(cfg.out_dir).filename().string();

  ExperimentConfig snapshot = cfg;
  snapshot.model.num_classes = static_cast<int>(cfg.known_classes.size());
  write_manifest(run_dir, snapshot, "running", -1);

  Datasets data;
  try {
    data = prepare_data(snapshot);
  } catch (const std::exception& e) {
    write_manifest(run_dir, snapshot, "failed:data", -1);
    throw StageError("data", e.what());
  }

  MetricsWriter mw(run_dir / "metrics.csv", run_id);
  const std::uint64_t model_seed = derive_seed(snapshot.seed, kTagModel);
  lsnet::LSNet<float> model(snapshot.model, model_seed);

  try {
    if (snapshot.mode == "central") {
      const auto centers = caloss::make_centers<float>(snapshot.model.num_classes,
                                                       static_cast<float>(snapshot.alpha));
      lsnet::OptimConfig oc;
      oc.lr = snapshot.lr;
      oc.momentum = snapshot.momentum;
      oc.cosine = snapshot.cosine;
      const long steps_per_epoch = (data.train.size() + snapshot.batch - 1) / snapshot.batch;
      oc.total_steps = steps_per_epoch * snapshot.epochs;
      lsnet::Sgd<float> opt(model, oc);
      lsnet::LossConfig lc{snapshot.alpha, snapshot.lambda};
      const std::uint64_t tseed = fedsim::train_seed_of(snapshot.seed);
      long step = 0;
      for (int e = 0; e < snapshot.epochs; ++e) {
        const double loss = lsnet::train_epoch(model, data.train, centers, lc, opt,
                                               snapshot.batch, step,
                                               lsnet::epoch_seed_of(tseed, 0, e));
        char group[32];
        std::snprintf(group, sizeof(group), "epoch=%d", e);
        mw.row("train", "loss", group, loss);
      }
      lsnet::save_checkpoint(run_dir / "model.ckpt", model.extract(), snapshot.model, model_seed);
    } else {
      fedsim::FedConfig fc;
      fc.n_clients = snapshot.clients;
      fc.per_round = snapshot.per_round;
      fc.rounds = snapshot.rounds;
      fc.local.epochs = snapshot.local_epochs;
      fc.local.batch = snapshot.fed_batch;
      fc.local.lr = snapshot.fed_lr;
      fc.local.loss = {snapshot.alpha, snapshot.lambda};
      fc.eval_cadence = snapshot.eval_cadence;
      fc.seed = snapshot.seed;
      if (snapshot.norm_policy == "none")
        fc.norm_policy.kind = fedsim::NormPolicyConfig::Kind::None;
      else if (snapshot.norm_policy == "fixed")
        fc.norm_policy.kind = fedsim::NormPolicyConfig::Kind::Fixed;
      else
        fc.norm_policy.kind = fedsim::NormPolicyConfig::Kind::Adaptive;
      fc.norm_policy.value = snapshot.norm_policy_value;

      fedsim::EvalContext ec;
      ec.test_known = &data.test_known;
      ec.test_unknown = data.test_unknown.size() > 0 ? &data.test_unknown : nullptr;
      ec.score_kind = score_kind_of(snapshot);
      const fs::path hist = run_dir / "round_log.jsonl";
      const auto result =
          fedsim::run_federation(fc, snapshot.model, model_seed, data.train, ec, &hist, &run_dir);
      result.registry.save(run_dir / "key_registry.txt");
      for (const auto& r : result.history) {
        char group[32];
        std::snprintf(group, sizeof(group), "round=%d", r.round);
        if (r.accuracy) mw.row("train", "accuracy", group, *r.accuracy);
        if (r.auroc_value) mw.row("train", "auroc", group, *r.auroc_value);
      }
      model.load(result.global);
      lsnet::save_checkpoint(run_dir / "model.ckpt", result.global, snapshot.model, model_seed);
    }
  } catch (const std::exception& e) {
    write_manifest(run_dir, snapshot, "failed:train", model.param_count());
    throw StageError("train", e.what());
  }

  RunResult rr;
  rr.run_dir = run_dir;
  try {
    const auto ev = evaluate_final(model, snapshot, data, run_dir, mw);
    rr.final_accuracy = ev.accuracy;
    rr.final_auroc = ev.auroc_v;
  } catch (const std::exception& e) {
    write_manifest(run_dir, snapshot, "failed:eval", model.param_count());
    throw StageError("eval", e.what());
  }
  write_manifest(run_dir, snapshot, "ok", model.param_count());
  return rr;
}

RunResult evaluate_checkpoint(const ExperimentConfig& cfg, const fs::path& ckpt,
                              const fs::path& run_dir) {
  try {
    cfg.validate();
  } catch (const std::exception& e) {
    throw StageError("config", e.what());
  }
  fs::create_directories(run_dir);
  ExperimentConfig snapshot = cfg;
  snapshot.model.num_classes = static_cast<int>(cfg.known_classes.size());

  Datasets data;
  try {
    data = prepare_data(snapshot);
  } catch (const std::exception& e) {
    throw StageError("data", e.what());
  }
  MetricsWriter mw(run_dir / "metrics.csv", run_dir.filename().string());
  RunResult rr;
  rr.run_dir = run_dir;
  try {
    const auto loaded = lsnet::load_checkpoint(ckpt);
    require(loaded.config.num_classes == snapshot.model.num_classes,
            "checkpoint class count does not match config");
    lsnet::LSNet<float> model(loaded.config, 0);
    model.load(loaded.params);
    const auto ev = evaluate_final(model, snapshot, data, run_dir, mw);
    rr.final_accuracy = ev.accuracy;
    rr.final_auroc = ev.auroc_v;
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError("eval", e.what());
  }
  return rr;
}

}  // namespace uavfl::harness
