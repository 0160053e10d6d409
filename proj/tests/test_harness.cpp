#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "uavfl/harness/config.hpp"
#include "uavfl/harness/experiment.hpp"
#include "uavfl/harness/report.hpp"

using namespace uavfl;
using namespace uavfl::harness;

namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny_config(const std::string& mode) {
  ExperimentConfig cfg;
  cfg.mode = mode;
  SyntheticDataConfig s;
  s.train_per_class = 8;
  s.test_per_class = 4;
  s.snr_grid_db = {10.0};
  s.interference_prob = 0.0;
  cfg.synthetic = s;
  cfg.known_classes = {"DJI", "Turnigy"};
  cfg.unknown_classes = {"Noise"};
  cfg.epochs = 1;
  cfg.batch = 8;
  cfg.momentum = 0.0;
  cfg.cosine = false;
  cfg.clients = 2;
  cfg.per_round = 2;
  cfg.rounds = 1;
  cfg.local_epochs = 1;
  cfg.fed_batch = 8;
  cfg.seed = 3;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config validation rejects bad splits and hyperparameters") {
  auto cfg = tiny_config("central");
  CHECK_NOTHROW(cfg.validate());

  auto overlap = cfg;
  overlap.unknown_classes = {"DJI"};
  CHECK_THROWS_AS(overlap.validate(), ValidationError);

  auto unknown_label = cfg;
  unknown_label.known_classes = {"DJI", "NotAClass"};
  CHECK_THROWS_AS(unknown_label.validate(), ValidationError);

  auto bad_lr = cfg;
  bad_lr.lr = 0.0;
  CHECK_THROWS_AS(bad_lr.validate(), ValidationError);

  auto bad_mode = cfg;
  bad_mode.mode = "quantum";
  CHECK_THROWS_AS(bad_mode.validate(), ValidationError);

  auto bad_fed = cfg;
  bad_fed.per_round = 9;
  CHECK_THROWS_AS(bad_fed.validate(), ValidationError);

  auto one_class = cfg;
  one_class.known_classes = {"DJI"};
  CHECK_THROWS_AS(one_class.validate(), ValidationError);

  auto no_data = cfg;
  no_data.synthetic.reset();
  CHECK_THROWS_AS(no_data.validate(), ValidationError);
}

TEST_CASE("config JSON round-trip preserves every field") {
  const auto cfg = tiny_config("federated");
  const auto j = config_to_json(cfg);
  const auto back = config_from_json(j);
  CHECK(back.mode == cfg.mode);
  CHECK(back.synthetic.has_value());
  CHECK(back.synthetic->train_per_class == 8);
  CHECK(back.known_classes == cfg.known_classes);
  CHECK(back.unknown_classes == cfg.unknown_classes);
  CHECK(back.alpha == cfg.alpha);
  CHECK(back.clients == cfg.clients);
  CHECK(back.seed == cfg.seed);
  CHECK(config_to_json(back) == j);  // fixpoint
}

TEST_CASE("central run writes the full run directory and is reproducible") {
  const fs::path dir1 = fs::temp_directory_path() / "uavfl_run_c1";
  const fs::path dir2 = fs::temp_directory_path() / "uavfl_run_c2";
  fs::remove_all(dir1);
  fs::remove_all(dir2);
  const auto cfg = tiny_config("central");
  const auto rr = run_experiment(cfg, dir1);
  CHECK(fs::exists(dir1 / "run.json"));
  CHECK(fs::exists(dir1 / "metrics.csv"));
  CHECK(fs::exists(dir1 / "confusion.csv"));
  CHECK(fs::exists(dir1 / "model.ckpt"));
  CHECK(fs::exists(dir1 / "known_scores.csv"));
  CHECK(fs::exists(dir1 / "unknown_scores.csv"));
  CHECK(rr.final_auroc.has_value());

  // re-run from the manifest: bit-identical metrics
  const auto from_manifest = load_config(dir1 / "run.json");
  run_experiment(from_manifest, dir2);
  CHECK(slurp(dir1 / "metrics.csv") == slurp(dir2 / "metrics.csv"));
  CHECK(slurp(dir1 / "known_scores.csv") == slurp(dir2 / "known_scores.csv"));
  fs::remove_all(dir1);
  fs::remove_all(dir2);
}

TEST_CASE("federated run writes a round log and metrics") {
  const fs::path dir = fs::temp_directory_path() / "uavfl_run_f1";
  fs::remove_all(dir);
  auto cfg = tiny_config("federated");
  cfg.eval_cadence = 1;
  const auto rr = run_experiment(cfg, dir);
  CHECK(fs::exists(dir / "round_log.jsonl"));
  CHECK(fs::exists(dir / "metrics.csv"));
  CHECK(rr.final_accuracy >= 0.0);
  const std::string log = slurp(dir / "round_log.jsonl");
  CHECK(log.find("\"round\":0") != std::string::npos);
  CHECK(log.find("\"verdicts\"") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("export_report produces plots and summary; empty dir errors") {
  const fs::path dir = fs::temp_directory_path() / "uavfl_run_r1";
  fs::remove_all(dir);
  const auto cfg = tiny_config("central");
  run_experiment(cfg, dir);
  export_report(dir, dir / "report");
  CHECK(fs::exists(dir / "report" / "summary.csv"));
  CHECK(fs::exists(dir / "report" / "roc.svg"));
  CHECK(fs::exists(dir / "report" / "confusion.csv"));
  CHECK(fs::exists(dir / "report" / "loss_vs_epoch.svg"));

  // determinism: exporting twice gives identical bytes
  export_report(dir, dir / "report2");
  CHECK(slurp(dir / "report" / "summary.csv") == slurp(dir / "report2" / "summary.csv"));
  CHECK(slurp(dir / "report" / "roc.svg") == slurp(dir / "report2" / "roc.svg"));

  const fs::path empty = fs::temp_directory_path() / "uavfl_empty_run";
  fs::remove_all(empty);
  fs::create_directories(empty);
  CHECK_THROWS(export_report(empty, empty / "report"));
  fs::remove_all(dir);
  fs::remove_all(empty);
}

TEST_CASE("evaluate_checkpoint reproduces the run evaluation") {
  const fs::path dir = fs::temp_directory_path() / "uavfl_run_e1";
  const fs::path evaldir = fs::temp_directory_path() / "uavfl_run_e2";
  fs::remove_all(dir);
  fs::remove_all(evaldir);
  const auto cfg = tiny_config("central");
  const auto rr = run_experiment(cfg, dir);
  const auto er = evaluate_checkpoint(cfg, dir / "model.ckpt", evaldir);
  CHECK(er.final_accuracy == doctest::Approx(rr.final_accuracy));
  REQUIRE(er.final_auroc.has_value());
  CHECK(*er.final_auroc == doctest::Approx(*rr.final_auroc));
  fs::remove_all(dir);
  fs::remove_all(evaldir);
}

#ifdef UAVFL_CLI_PATH
TEST_CASE("CLI: gen-data writes the on-disk dataset layout") {
  const fs::path dir = fs::temp_directory_path() / "uavfl_cli_gen";
  fs::remove_all(dir);
  const std::string cmd = std::string(UAVFL_CLI_PATH) +
                          " gen-data --classes DJI,Noise --per-class 4 --snr-min 0 --snr-max 10"
                          " --snr-step 10 --seed 3 --out " +
                          dir.string() + " > /dev/null";
  CHECK(std::system(cmd.c_str()) == 0);
  CHECK(fs::exists(dir / "train" / "manifest.json"));
  CHECK(fs::exists(dir / "train" / "DJI"));
  CHECK(fs::exists(dir / "test" / "Noise"));
  // record size: 16384 complex float32 samples
  bool found = false;
  for (const auto& f : fs::directory_iterator(dir / "train" / "DJI")) {
    CHECK(fs::file_size(f.path()) == 16384u * 8u);
    found = true;
  }
  CHECK(found);
  fs::remove_all(dir);
}

TEST_CASE("CLI: bad config exits with the config stage code") {
  const fs::path cfg_path = fs::temp_directory_path() / "uavfl_bad_cfg.json";
  std::ofstream out(cfg_path);
  out << "{\"classes\": {\"known\": [\"DJI\"]}}";  // one known class: invalid
  out.close();
  const std::string cmd = std::string(UAVFL_CLI_PATH) + " train-central --config " +
                          cfg_path.string() + " --out /tmp/uavfl_never 2> /dev/null";
  const int rc = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(rc) == 2);
  fs::remove(cfg_path);
}
#endif
