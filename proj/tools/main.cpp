#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "intformer/errors.hpp"
#include "intformer/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Zone-specific real-time crash likelihood pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_override;
  std::vector<std::string> overrides;

  const std::vector<std::string> subcommands = {"generate", "prepare",  "train",
                                                "evaluate", "explain", "benchmark"};
  const std::vector<std::string> descriptions = {
      "Generate a synthetic year of 15-minute snapshots plus crash events",
      "Format, index, select, stack, split, and SMOTE-balance windows",
      "Train the configured model family and write a checkpoint",
      "Score the untouched test split and write metrics.json",
      "Write per-(timestep, feature) attribution tables for test windows",
      "Train and evaluate all five model families on the prepared data"};
  for (std::size_t i = 0; i < subcommands.size(); ++i) {
    CLI::App* sub = app.add_subcommand(subcommands[i], descriptions[i]);
    sub->add_option("--config", config_path, "Path to the run-config JSON")
        ->required();
    sub->add_option("--seed-override", overrides,
                    "KEY=VALUE config override (repeatable)");
    sub->add_option("--out", out_override, "Override the configured output directory");
  }

  CLI11_PARSE(app, argc, argv);

  const std::string& name = app.get_subcommands().front()->get_name();
  try {
    intformer::RunConfig config = intformer::load_config(config_path, overrides);
    if (!out_override.empty()) config.out_dir = out_override;
    intformer::run_subcommand(name, config);
  } catch (const intformer::DependencyError& e) {
    std::cerr << "dependency error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
