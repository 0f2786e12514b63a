#pragma once

// Sectioned INI run configuration: parsing, validation, canonical rendering
// and single-key overrides (used by --seed and sweeps).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dmd/dynamics.hpp"
#include "dmd/graph.hpp"
#include "dmd/mirror_map.hpp"
#include "dmd/objectives.hpp"

namespace dmd::harness {

enum class DualChoice { Identity, DualHessian };

struct ProblemSection {
  int d = 20;
  int m = 20;
  double condition_number = 15.0;
  bool shared_minimizer = false;
  objectives::Domain domain = objectives::Domain::Unconstrained;
  objectives::OptimumPlacement placement = objectives::OptimumPlacement::Interior;
  std::string bundle;  // problem-gen output directory; overrides the generator
};

struct GraphSection {
  graph::TopologyKind topology = graph::TopologyKind::Cyclic;
  int particles = 10;
  double edge_prob = 0.5;
  int cluster_size = 5;
  double beta = 1.0;
  std::string weights;  // N x N CSV; overrides the topology
};

struct AlgorithmSection {
  dynamics::Algorithm name = dynamics::Algorithm::Eismd;
  dynamics::InteractionOperand interaction_on = dynamics::InteractionOperand::X;
  mirror::MapKind mirror_map = mirror::MapKind::Euclidean;
  std::string mirror_matrix;  // d x d CSV for the quadratic map
  DualChoice dual = DualChoice::Identity;
};

struct RunSection {
  std::uint64_t seed = 0;
  std::string output = "run";
  std::vector<double> x0;  // empty: default initialization
  std::optional<double> lyapunov_c;
};

struct RunConfig {
  ProblemSection problem;
  GraphSection graph;
  AlgorithmSection algorithm;
  dynamics::Hyperparams hyper;
  RunSection run;
};

/// All recognized "section.key" paths, in rendering order.
const std::vector<std::string>& config_keys();

/// Sets one "section.key" from its textual value. Unknown paths and malformed
/// values throw ValidationError naming the key. Relative paths resolve against `base`.
void set_value(RunConfig& cfg, std::string_view key, std::string_view value,
               const std::filesystem::path& base = {});
std::string get_value(const RunConfig& cfg, std::string_view key);

/// Cross-field checks (simplex needs the entropy map, barbell sizes, ...).
void validate(const RunConfig& cfg);

RunConfig parse_config(const std::string& text, const std::filesystem::path& base = {});
/// Reads an INI file, or a run manifest (JSON) whose embedded config is reused.
RunConfig load_config(const std::filesystem::path& path);
/// Canonical INI text; parse_config(render_config(c)) == c.
std::string render_config(const RunConfig& cfg);

std::string_view topology_name(graph::TopologyKind k) noexcept;
std::string_view domain_name(objectives::Domain d) noexcept;
std::string_view dual_name(DualChoice d) noexcept;

}  // namespace dmd::harness
