// Command-line front end: scenario generation, training, evaluation,
// comparison and plot emission.
#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "hyperds/cli/plot.hpp"
#include "hyperds/cli/run_config.hpp"
#include "hyperds/train/evaluate.hpp"
#include "hyperds/train/factory.hpp"

namespace fs = std::filesystem;
using namespace hyperds;

namespace {

std::string data_root() {
  const char* env = std::getenv("HYPERDS_DATA_ROOT");
  return env ? env : ".";
}

std::string resolve_dataset(const std::string& path) {
  if (fs::exists(fs::path(path) / "manifest")) return path;
  const fs::path rooted = fs::path(data_root()) / path;
  if (fs::exists(rooted / "manifest")) return rooted.string();
  return path;  // let the loader produce the error
}

void ensure_out_dir(const std::string& dir, bool force) {
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!force)
      throw Error("output directory exists and is not empty: " + dir +
                  " (use --force to overwrite)");
    fs::remove_all(dir);
  }
  fs::create_directories(dir);
}

void echo_config(const cli::RunConfig& cfg, std::uint64_t resolved_seed, const std::string& dir) {
  nlohmann::json j = cli::run_config_to_json(cfg);
  j["resolved_seed"] = resolved_seed;
  std::ofstream(fs::path(dir) / "config.json") << j.dump(2) << "\n";
}

cli::RunConfig load_config_or_default(const std::string& path) {
  if (path.empty()) return cli::RunConfig{};
  return cli::load_run_config(path);
}

int cmd_gen_data(const std::string& config_path, const std::string& out, long long seed,
                 bool force) {
  cli::RunConfig cfg = load_config_or_default(config_path);
  if (seed >= 0) cfg.scenario.seed = static_cast<std::uint64_t>(seed);
  ensure_out_dir(out, force);
  auto scenario = synth::SyntheticScenario::build(cfg.scenario);
  synth::build_dataset(scenario, out);
  echo_config(cfg, cfg.scenario.seed, out);
  std::cout << "dataset written to " << out << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& dataset,
              const std::string& out, const std::string& method, const std::string& variant,
              bool no_hr, long long seed, bool force) {
  cli::RunConfig cfg = load_config_or_default(config_path);
  if (!variant.empty()) cfg.model.variant = variant;
  if (no_hr) {
    cfg.loss.hr_supervision = false;
    cfg.train.hr_supervision = false;
  }
  if (seed >= 0) cfg.train.seed = static_cast<std::uint64_t>(seed);
  ensure_out_dir(out, force);

  auto data = train::DatasetView::load(resolve_dataset(dataset));
  auto model = train::make_model(method, cfg.model, cfg.unet, cfg.edsr, data, cfg.train.seed);
  train::TrainOutput result = train::train(*model, data, cfg.train);
  io::write_checkpoint(result.best, (fs::path(out) / "checkpoint").string());
  io::write_curves_csv((fs::path(out) / "curves.csv").string(), result.curves);
  echo_config(cfg, cfg.train.seed, out);
  std::cout << "best epoch " << result.best.epoch << " (val station loss "
            << result.best.val_station_loss << "); checkpoint in " << out << "/checkpoint\n";
  return 0;
}

core::Split parse_split(const std::string& s) {
  if (s == "train") return core::Split::Train;
  if (s == "val") return core::Split::Val;
  if (s == "test") return core::Split::Test;
  throw ConfigError("unknown split: " + s);
}

int cmd_eval(const std::string& checkpoint, const std::string& method,
             const std::string& dataset, const std::string& split_name, const std::string& out,
             long long seed, bool force) {
  auto data = train::DatasetView::load(resolve_dataset(dataset));
  const core::Split split = parse_split(split_name);
  const std::uint64_t s = seed >= 0 ? static_cast<std::uint64_t>(seed) : 7;
  train::EvalReport report;
  if (!checkpoint.empty()) {
    auto bundle = io::read_checkpoint(checkpoint);
    auto model = train::model_from_checkpoint(bundle, data);
    report = train::evaluate_model(*model, data, split, s);
  } else if (method == "interp_lr") {
    report = train::evaluate_interp(data, core::Resolution::Low, split);
  } else if (method == "interp_hr") {
    report = train::evaluate_interp(data, core::Resolution::High, split);
  } else if (method == "truth") {
    report = train::evaluate_truth(data, split);
  } else {
    throw ConfigError("eval needs --checkpoint or --method interp_lr|interp_hr|truth");
  }
  ensure_out_dir(out, force);
  train::write_report(report, out);
  for (const auto& row : report.rows)
    std::cout << row.method << " " << row.variable << " mse=" << row.mse << " mae=" << row.mae
              << "\n";
  std::cout << "report written to " << out << "\n";
  return 0;
}

int cmd_compare(const std::vector<std::string>& checkpoints, const std::string& dataset,
                const std::string& split_name, const std::string& out, long long seed,
                bool force) {
  auto data = train::DatasetView::load(resolve_dataset(dataset));
  const core::Split split = parse_split(split_name);
  const std::uint64_t s = seed >= 0 ? static_cast<std::uint64_t>(seed) : 7;
  std::vector<train::EvalReport> reports;
  // interpolation baselines are parameter-free and always appear
  reports.push_back(train::evaluate_interp(data, core::Resolution::Low, split));
  reports.push_back(train::evaluate_interp(data, core::Resolution::High, split));
  for (const auto& ck : checkpoints) {
    auto bundle = io::read_checkpoint(ck);
    auto model = train::model_from_checkpoint(bundle, data);
    reports.push_back(train::evaluate_model(*model, data, split, s));
  }
  auto cmp = train::compare_methods(reports);
  ensure_out_dir(out, force);
  io::write_metrics_csv((fs::path(out) / "metrics.csv").string(), cmp.rows);
  train::write_ranking_csv((fs::path(out) / "ranking.csv").string(), cmp.ranking);
  for (const auto& r : cmp.ranking)
    if (r.rank == 1) std::cout << r.variable << ": best = " << r.method << " (mse " << r.mse << ")\n";
  std::cout << "comparison written to " << out << "\n";
  return 0;
}

int cmd_plot(const std::string& report_dir, const std::string& out_prefix) {
  train::EvalReport report = train::read_report(report_dir);
  auto files = cli::plot_station_errors(report, out_prefix);
  for (const auto& f : files) std::cout << f << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hyperds: observation-guided downscaling to scattered stations"};
  app.require_subcommand(1);

  std::string config_path, out, dataset, method = "hyperds", variant, split = "test";
  std::string checkpoint, report_dir, out_prefix;
  std::vector<std::string> checkpoints;
  long long seed = -1;
  bool force = false, no_hr = false;

  auto add_common = [&](CLI::App* c) {
    c->add_option("--config", config_path, "run configuration (JSON)");
    c->add_option("--seed", seed, "seed override");
    c->add_flag("--force", force, "overwrite a non-empty output directory");
  };

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  add_common(gen);
  gen->add_option("--out", out, "dataset directory")->required();

  auto* tr = app.add_subcommand("train", "train a model on a dataset");
  add_common(tr);
  tr->add_option("--dataset", dataset, "dataset directory")->required();
  tr->add_option("--out", out, "output directory")->required();
  tr->add_option("--method", method, "hyperds | unet | edsr");
  tr->add_option("--variant", variant, "hyperds decoder variant: multi_block | multi_var");
  tr->add_flag("--no-hr-supervision", no_hr, "train without high-res grid labels");

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint or baseline");
  add_common(ev);
  ev->add_option("--checkpoint", checkpoint, "checkpoint directory");
  ev->add_option("--method", method, "parameter-free method: interp_lr | interp_hr | truth");
  ev->add_option("--dataset", dataset, "dataset directory")->required();
  ev->add_option("--split", split, "train | val | test");
  ev->add_option("--out", out, "report directory")->required();

  auto* cp = app.add_subcommand("compare", "compare methods on one dataset");
  add_common(cp);
  cp->add_option("--checkpoint", checkpoints, "checkpoint directories (repeatable)");
  cp->add_option("--dataset", dataset, "dataset directory")->required();
  cp->add_option("--split", split, "train | val | test");
  cp->add_option("--out", out, "output directory")->required();

  auto* pl = app.add_subcommand("plot", "render station error maps from an eval report");
  pl->add_option("--report", report_dir, "eval report directory")->required();
  pl->add_option("--out", out_prefix, "output image prefix")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_data(config_path, out, seed, force);
    if (tr->parsed())
      return cmd_train(config_path, dataset, out, method, variant, no_hr, seed, force);
    if (ev->parsed()) {
      if (!checkpoint.empty() && method == "hyperds") method.clear();
      return cmd_eval(checkpoint, method, dataset, split, out, seed, force);
    }
    if (cp->parsed()) return cmd_compare(checkpoints, dataset, split, out, seed, force);
    if (pl->parsed()) return cmd_plot(report_dir, out_prefix);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
