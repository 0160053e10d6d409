// Command-line front end: dataset generation, centralized / federated
// training, checkpoint evaluation and report export.

#include <CLI11.hpp>

#include <cstdio>

#include "uavfl/harness/experiment.hpp"
#include "uavfl/harness/report.hpp"
#include "uavfl/rfgen/dataset_io.hpp"

namespace {

int exit_code_for(const std::string& stage) {
  if (stage == "config") return 2;
  if (stage == "data") return 3;
  if (stage == "train") return 4;
  if (stage == "eval") return 5;
  if (stage == "report") return 6;
  return 1;
}

int fail_stage(const std::string& stage, const std::string& msg) {
  std::fprintf(stderr, "stage %s failed: %s\n", stage.c_str(), msg.c_str());
  return exit_code_for(stage);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"federated open-set RF emitter authentication simulator"};
  app.require_subcommand(1);
  app.fallthrough();  // global --config/--seed/--out may follow the subcommand

  std::string config_path, out_dir, ckpt_path, run_dir;
  std::uint64_t seed_override = 0;
  bool seed_set = false;
  app.add_option("--config", config_path, "experiment config or run manifest (JSON)");
  app.add_option("--out", out_dir, "output directory");
  auto* seed_opt = app.add_option("--seed", seed_override, "override the config seed");

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "synthesize a labeled IQ dataset on disk");
  std::string classes_csv = "DJI,FutabaT7,FutabaT14,Graupner,Noise,Taranis,Turnigy";
  int per_class = 100;
  double snr_min = -20.0, snr_max = 30.0, snr_step = 2.0;
  std::uint64_t gen_seed = 1;
  std::string gen_out = "dataset";
  gen->add_option("--classes", classes_csv, "comma-separated class labels");
  gen->add_option("--per-class", per_class, "windows per class");
  gen->add_option("--snr-min", snr_min, "lowest SNR (dB)");
  gen->add_option("--snr-max", snr_max, "highest SNR (dB)");
  gen->add_option("--snr-step", snr_step, "SNR grid step (dB)");
  gen->add_option("--seed", gen_seed, "generation seed");
  gen->add_option("--out", gen_out, "output directory");

  auto* central = app.add_subcommand("train-central", "centralized training run");
  auto* fed = app.add_subcommand("train-fed", "federated training run");
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--ckpt", ckpt_path, "checkpoint path")->required();
  auto* report = app.add_subcommand("report", "export report bundle for a run");
  report->add_option("--run", run_dir, "run directory");

  CLI11_PARSE(app, argc, argv);
  seed_set = seed_opt->count() > 0;

  try {
    if (gen->parsed()) {
      uavfl::rfgen::DatasetConfig dc;
      dc.classes.clear();
      std::stringstream ss(classes_csv);
      std::string item;
      while (std::getline(ss, item, ','))
        if (!item.empty()) dc.classes.push_back(item);
      dc.per_class = per_class;
      uavfl::require(snr_step > 0.0 && snr_max >= snr_min, "bad SNR grid");
      for (double s = snr_min; s <= snr_max + 1e-9; s += snr_step)
        dc.snr_grid_db.push_back(s);
      dc.seed = gen_seed;
      const auto pair = uavfl::rfgen::build_dataset(dc);
      uavfl::rfgen::write_dataset(std::filesystem::path(gen_out) / "train", pair.train);
      uavfl::rfgen::write_dataset(std::filesystem::path(gen_out) / "test", pair.test);
      std::printf("wrote %zu train / %zu test windows under %s\n", pair.train.items.size(),
                  pair.test.items.size(), gen_out.c_str());
      return 0;
    }

    if (central->parsed() || fed->parsed() || eval->parsed()) {
      uavfl::require(!config_path.empty(), "--config is required");
      uavfl::harness::ExperimentConfig cfg = uavfl::harness::load_config(config_path);
      cfg.mode = central->parsed() ? "central" : fed->parsed() ? "federated" : cfg.mode;
      if (seed_set) cfg.seed = seed_override;
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      const std::filesystem::path run(cfg.out_dir);
      if (eval->parsed()) {
        const auto rr = uavfl::harness::evaluate_checkpoint(cfg, ckpt_path, run);
        std::printf("accuracy %.4f\n", rr.final_accuracy);
        if (rr.final_auroc) std::printf("auroc %.4f\n", *rr.final_auroc);
        return 0;
      }
      const auto rr = uavfl::harness::run_experiment(cfg, run);
      std::printf("run complete: accuracy %.4f", rr.final_accuracy);
      if (rr.final_auroc) std::printf(", auroc %.4f", *rr.final_auroc);
      std::printf(" (%s)\n", rr.run_dir.string().c_str());
      return 0;
    }

    if (report->parsed()) {
      uavfl::require(!run_dir.empty() || !config_path.empty(), "--run is required");
      const std::filesystem::path rd(run_dir.empty() ? config_path : run_dir);
      const std::filesystem::path od(out_dir.empty() ? (rd / "report").string() : out_dir);
      uavfl::harness::export_report(rd, od);
      std::printf("report written to %s\n", od.string().c_str());
      return 0;
    }
  } catch (const uavfl::harness::StageError& e) {
    return fail_stage(e.stage, e.what());
  } catch (const uavfl::ValidationError& e) {
    return fail_stage(gen->parsed() ? "data" : report->parsed() ? "report" : "config", e.what());
  } catch (const std::exception& e) {
    return fail_stage(report->parsed() ? "report" : gen->parsed() ? "data" : "config", e.what());
  }
  return 0;
}
