#include "uavfl/harness/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "uavfl/rfgen/emitter.hpp"

namespace uavfl::harness {

using nlohmann::json;

void ExperimentConfig::validate() const {
  require(mode == "central" || mode == "federated", "config: mode must be central or federated");
  require(synthetic.has_value() != external.has_value(),
          "config: exactly one of dataset.synthetic / dataset.external required");
  require(known_classes.size() >= 2, "config: need at least two known classes");
  std::set<std::string> seen;
  for (const auto& c : known_classes) {
    require(rfgen::class_index(c) >= 0, "config: unknown class label " + c);
    require(seen.insert(c).second, "config: duplicate known class " + c);
  }
  for (const auto& c : unknown_classes) {
    require(rfgen::class_index(c) >= 0, "config: unknown class label " + c);
    require(seen.insert(c).second, "config: class in both known and unknown splits: " + c);
  }
  require(alpha > 0.0, "config: alpha must be positive");
  require(lambda >= 0.0, "config: lambda must be nonnegative");
  require(score == "min-distance" || score == "softmin", "config: bad score kind");
  require(lr > 0.0 && fed_lr > 0.0, "config: learning rates must be positive");
  require(momentum >= 0.0 && momentum < 1.0, "config: momentum out of range");
  require(epochs >= 0 && batch > 0, "config: bad centralized optimizer settings");
  require(clients >= 1 && per_round >= 1 && per_round <= clients,
          "config: bad federated client counts");
  require(rounds >= 0 && local_epochs >= 0 && fed_batch > 0, "config: bad federated settings");
  require(norm_policy == "none" || norm_policy == "fixed" || norm_policy == "adaptive",
          "config: bad norm policy");
  require(eval_cadence >= 0, "config: bad eval cadence");
  if (synthetic) {
    require(synthetic->train_per_class >= 0 && synthetic->test_per_class > 0,
            "config: bad synthetic split sizes");
    require(!synthetic->snr_grid_db.empty(), "config: empty SNR grid");
    require(synthetic->interference_prob >= 0.0 && synthetic->interference_prob <= 1.0,
            "config: interference_prob out of range");
  }
  if (external) {
    require(std::filesystem::exists(external->path),
            "config: external dataset path does not exist: " + external->path);
    require(std::filesystem::exists(external->manifest),
            "config: external manifest does not exist: " + external->manifest);
  }
  lsnet::LSNetConfig m = model;
  m.num_classes = static_cast<int>(known_classes.size());
  m.validate();
}

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["mode"] = cfg.mode;
  if (cfg.synthetic) {
    j["dataset"]["synthetic"] = {{"train_per_class", cfg.synthetic->train_per_class},
                                 {"test_per_class", cfg.synthetic->test_per_class},
                                 {"snr_grid_db", cfg.synthetic->snr_grid_db},
                                 {"interference_prob", cfg.synthetic->interference_prob},
                                 {"min_burst_fill", cfg.synthetic->min_burst_fill}};
  }
  if (cfg.external)
    j["dataset"]["external"] = {{"path", cfg.external->path},
                                {"manifest", cfg.external->manifest}};
  j["classes"] = {{"known", cfg.known_classes}, {"unknown", cfg.unknown_classes}};
  j["model"] = {{"stage_channels", cfg.model.stage_channels},
                {"stage_depths", cfg.model.stage_depths},
                {"head_width", cfg.model.head_width},
                {"droppath_max", cfg.model.droppath_max},
                {"input_channels", cfg.model.input_channels},
                {"expansion", cfg.model.expansion},
                {"input_size", cfg.model.input_size},
                {"gn_groups", cfg.model.gn_groups}};
  j["loss"] = {{"alpha", cfg.alpha}, {"lambda", cfg.lambda}, {"score", cfg.score}};
  j["optimizer"] = {{"lr", cfg.lr},
                    {"momentum", cfg.momentum},
                    {"cosine", cfg.cosine},
                    {"epochs", cfg.epochs},
                    {"batch", cfg.batch}};
  j["federated"] = {{"clients", cfg.clients},
                    {"per_round", cfg.per_round},
                    {"rounds", cfg.rounds},
                    {"local_epochs", cfg.local_epochs},
                    {"lr", cfg.fed_lr},
                    {"batch", cfg.fed_batch},
                    {"norm_policy", cfg.norm_policy},
                    {"norm_policy_value", cfg.norm_policy_value}};
  j["eval_cadence"] = cfg.eval_cadence;
  j["seed"] = cfg.seed;
  j["out"] = cfg.out_dir;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  cfg.mode = j.value("mode", cfg.mode);
  if (j.contains("dataset")) {
    const auto& d = j["dataset"];
    if (d.contains("synthetic")) {
      SyntheticDataConfig s;
      const auto& js = d["synthetic"];
      s.train_per_class = js.value("train_per_class", s.train_per_class);
      s.test_per_class = js.value("test_per_class", s.test_per_class);
      if (js.contains("snr_grid_db")) js["snr_grid_db"].get_to(s.snr_grid_db);
      s.interference_prob = js.value("interference_prob", s.interference_prob);
      s.min_burst_fill = js.value("min_burst_fill", s.min_burst_fill);
      cfg.synthetic = s;
    }
    if (d.contains("external")) {
      ExternalDataConfig e;
      e.path = d["external"].at("path");
      e.manifest = d["external"].at("manifest");
      cfg.external = e;
    }
  }
  if (j.contains("classes")) {
    const auto& c = j["classes"];
    if (c.contains("known")) c["known"].get_to(cfg.known_classes);
    if (c.contains("unknown")) c["unknown"].get_to(cfg.unknown_classes);
  }
  if (j.contains("model")) {
    const auto& m = j["model"];
    if (m.contains("stage_channels")) m["stage_channels"].get_to(cfg.model.stage_channels);
    if (m.contains("stage_depths")) m["stage_depths"].get_to(cfg.model.stage_depths);
    cfg.model.head_width = m.value("head_width", cfg.model.head_width);
    cfg.model.droppath_max = m.value("droppath_max", cfg.model.droppath_max);
    cfg.model.input_channels = m.value("input_channels", cfg.model.input_channels);
    cfg.model.expansion = m.value("expansion", cfg.model.expansion);
    cfg.model.input_size = m.value("input_size", cfg.model.input_size);
    cfg.model.gn_groups = m.value("gn_groups", cfg.model.gn_groups);
  }
  if (j.contains("loss")) {
    cfg.alpha = j["loss"].value("alpha", cfg.alpha);
    cfg.lambda = j["loss"].value("lambda", cfg.lambda);
    cfg.score = j["loss"].value("score", cfg.score);
  }
  if (j.contains("optimizer")) {
    const auto& o = j["optimizer"];
    cfg.lr = o.value("lr", cfg.lr);
    cfg.momentum = o.value("momentum", cfg.momentum);
    cfg.cosine = o.value("cosine", cfg.cosine);
    cfg.epochs = o.value("epochs", cfg.epochs);
    cfg.batch = o.value("batch", cfg.batch);
  }
  if (j.contains("federated")) {
    const auto& f = j["federated"];
    cfg.clients = f.value("clients", cfg.clients);
    cfg.per_round = f.value("per_round", cfg.per_round);
    cfg.rounds = f.value("rounds", cfg.rounds);
    cfg.local_epochs = f.value("local_epochs", cfg.local_epochs);
    cfg.fed_lr = f.value("lr", cfg.fed_lr);
    cfg.fed_batch = f.value("batch", cfg.fed_batch);
    cfg.norm_policy = f.value("norm_policy", cfg.norm_policy);
    cfg.norm_policy_value = f.value("norm_policy_value", cfg.norm_policy_value);
  }
  cfg.eval_cadence = j.value("eval_cadence", cfg.eval_cadence);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.out_dir = j.value("out", cfg.out_dir);
  cfg.model.num_classes = std::max<int>(2, static_cast<int>(cfg.known_classes.size()));
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), "config: cannot open " + path.string());
  json j = json::parse(in);
  if (j.contains("config") && j.contains("run_format")) j = j["config"];  // run manifest
  return config_from_json(j);
}

}  // namespace uavfl::harness
