#pragma once

// Experiment assembly and the CLI subcommands. Commands return process exit
// codes: 0 ok, 1 config/validation error, 2 numerical divergence, 3 I/O error.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dmd/diagnostics.hpp"
#include "dmd/dual_preconditioner.hpp"
#include "dmd/dynamics.hpp"
#include "dmd/graph.hpp"
#include "dmd/harness/config.hpp"
#include "dmd/mirror_map.hpp"
#include "dmd/objectives.hpp"
#include "dmd/oracle.hpp"

namespace dmd::harness {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode { kOk = 0, kConfigError = 1, kDiverged = 2, kIoError = 3 };

/// Everything a run needs, derived deterministically from a RunConfig.
struct Experiment {
  RunConfig config;
  objectives::DistributedProblem problem;
  graph::WeightedGraph graph;
  graph::LaplacianSpectra spectra;
  mirror::MirrorMap map;
  std::optional<mirror::DualPreconditioner> dual;
  oracle::OptimalPair opt;
  diagnostics::ConvexityConstants constants;
  double c = 0.0;
  std::optional<diagnostics::KappaG> kappa_g;  // absent for the entropy map
  std::optional<double> predicted_rate;        // indicative, from the row-space kappa_g
  Eigen::VectorXd x0;                          // stacked N*d

  const mirror::DualPreconditioner* dual_ptr() const { return dual ? &*dual : nullptr; }
};

objectives::DistributedProblem build_problem(const RunConfig& cfg);
graph::WeightedGraph build_graph(const RunConfig& cfg);
Experiment build_experiment(const RunConfig& cfg);

struct RunOutput {
  dynamics::RunResult result;
  double wall_seconds = 0.0;
};

/// Runs the configured dynamics. Throws dynamics::IntegrationDiverged.
RunOutput execute(const Experiment& ex);

/// JSON manifest text. `diverged_at` < 0 means the run completed.
std::string manifest_json(const Experiment& ex, const std::vector<diagnostics::MetricsRecord>& records,
                          double wall_seconds, long diverged_at = -1);

struct CommonOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool quiet = false;
};

int cmd_run(const std::filesystem::path& config, const CommonOptions& opts, std::ostream& out,
            std::ostream& err);
int cmd_compare(const std::vector<std::filesystem::path>& configs, const CommonOptions& opts,
                std::ostream& out, std::ostream& err);
int cmd_sweep(const std::filesystem::path& config, const std::string& param,
              const std::vector<std::string>& values, int jobs, const CommonOptions& opts,
              std::ostream& out, std::ostream& err);
int cmd_graph_info(const std::filesystem::path& config, const CommonOptions& opts, std::ostream& out,
                   std::ostream& err);
int cmd_problem_gen(const std::filesystem::path& config, const CommonOptions& opts,
                    std::ostream& out, std::ostream& err);
int cmd_oracle(const std::filesystem::path& config, const CommonOptions& opts, std::ostream& out,
               std::ostream& err);

}  // namespace dmd::harness
