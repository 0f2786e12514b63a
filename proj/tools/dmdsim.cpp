#include <CLI11.hpp>
#include <iostream>

#include "dmd/harness/harness.hpp"
#include "dmd/simd/kernels.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Distributed mirror descent simulator (ISMD / EISMD / EPISMD)"};
  app.require_subcommand(1);

  dmd::harness::CommonOptions opts;
  std::string config;
  long long seed = -1;
  std::string out;
  std::string simd;
  app.add_option("--simd", simd, "Kernel backend override: scalar|avx2");

  auto common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", config, "INI config or run manifest");
    if (needs_config) opt->required();
    sub->add_option("--seed", seed, "Overrides run.seed")->check(CLI::NonNegativeNumber);
    sub->add_option("--out", out, "Overrides run.output");
    sub->add_flag("--quiet", opts.quiet, "Suppress progress output");
  };

  auto* run = app.add_subcommand("run", "Run one experiment and write metrics.csv + manifest.json");
  common(run, true);

  std::vector<std::string> compare_configs;
  auto* compare = app.add_subcommand("compare", "Run several configs into one labelled CSV");
  compare->add_option("configs", compare_configs, "Config files")->required()->expected(2, -1);
  compare->add_option("--seed", seed, "Shared seed for every run")->check(CLI::NonNegativeNumber);
  compare->add_option("--out", out, "Output directory for compare.csv");
  compare->add_flag("--quiet", opts.quiet, "Suppress progress output");

  std::string param;
  std::vector<std::string> values;
  int jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "Run one config for each value of a parameter");
  common(sweep, true);
  sweep->add_option("--param", param, "Parameter path, e.g. hyper.sigma")->required();
  sweep->add_option("--values", values, "Values (comma separated or repeated)")->required()->delimiter(',');
  sweep->add_option("--jobs", jobs, "Parallel runs")->check(CLI::PositiveNumber);

  auto* graph_info = app.add_subcommand("graph-info", "Print Laplacian spectral constants");
  common(graph_info, true);
  auto* problem_gen = app.add_subcommand("problem-gen", "Write a problem bundle");
  common(problem_gen, true);
  auto* oracle = app.add_subcommand("oracle", "Solve for the optimum and print it");
  common(oracle, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : dmd::harness::kConfigError;
  }

  if (!simd.empty()) {
    try {
      dmd::simd::set_backend(dmd::simd::parse_backend(simd));
    } catch (const std::exception& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return dmd::harness::kConfigError;
    }
  }
  if (seed >= 0) opts.seed = static_cast<std::uint64_t>(seed);
  if (!out.empty()) opts.out = out;

  using namespace dmd::harness;
  if (*run) return cmd_run(config, opts, std::cout, std::cerr);
  if (*compare) {
    std::vector<std::filesystem::path> paths(compare_configs.begin(), compare_configs.end());
    return cmd_compare(paths, opts, std::cout, std::cerr);
  }
  if (*sweep) return cmd_sweep(config, param, values, jobs, opts, std::cout, std::cerr);
  if (*graph_info) return cmd_graph_info(config, opts, std::cout, std::cerr);
  if (*problem_gen) return cmd_problem_gen(config, opts, std::cout, std::cerr);
  if (*oracle) return cmd_oracle(config, opts, std::cout, std::cerr);
  return kConfigError;
}
