#include <CLI11.hpp>

#include <iostream>

#include "commands.hpp"

using namespace tnad::cli;

int main(int argc, char** argv) {
  CLI::App app{"Tensor-network anomaly detector"};
  app.require_subcommand(1);

  std::string config, model, data, out, seeds, standardizer;
  std::size_t jobs = 1;

  auto* train = app.add_subcommand("train", "Train one model from a config");
  train->add_option("--config", config, "Experiment config")->required();
  train->add_option("--out", out, "Output directory");
  train->add_option("--seeds", seeds, "Seed list; the first one is used");

  auto* score = app.add_subcommand("score", "Print index,decision_log for each sample");
  score->add_option("--model", model, "Model file")->required();
  score->add_option("--data", data, "CSV or IDX image file")->required();
  score->add_option("--standardizer", standardizer, "Feature statistics for CSV rows");

  auto* evaluate = app.add_subcommand("evaluate", "Run the one-class protocol over seeds");
  evaluate->add_option("--config", config, "Experiment config")->required();
  evaluate->add_option("--out", out, "Output directory");
  evaluate->add_option("--seeds", seeds, "Comma-separated seeds");
  evaluate->add_option("--jobs", jobs, "Seeds run in parallel")->check(CLI::PositiveNumber);

  auto* inspect = app.add_subcommand("inspect", "Print a model header");
  inspect->add_option("--model", model, "Model file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  Streams io{std::cout, std::cerr};
  RunOptions opts;
  opts.jobs = jobs;
  if (!out.empty()) opts.out_dir = out;
  if (!seeds.empty()) {
    try {
      opts.seeds = parse_seed_list(seeds);
    } catch (const ConfigError& e) {
      std::cerr << "error: --seeds: " << e.what() << "\n";
      return kExitUsage;
    }
  }

  if (*train) return cmd_train(config, opts, io);
  if (*evaluate) return cmd_evaluate(config, opts, io);
  if (*inspect) return cmd_inspect(model, io);
  std::optional<std::filesystem::path> std_path;
  if (!standardizer.empty()) std_path = standardizer;
  return cmd_score(model, data, std_path, io);
}
