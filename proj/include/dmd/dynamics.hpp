#pragma once

// Euler-Maruyama integration of the interacting mirror descent dynamics
// (ISMD), its exact variant with an integrated Lagrange multiplier (EISMD)
// and the variant with a mirrored multiplier (EPISMD).

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "dmd/counter_rng.hpp"
#include "dmd/diagnostics.hpp"
#include "dmd/dual_preconditioner.hpp"
#include "dmd/error.hpp"
#include "dmd/graph.hpp"
#include "dmd/mirror_map.hpp"
#include "dmd/objectives.hpp"

namespace dmd::dynamics {

enum class Algorithm { Ismd, Eismd, Epismd };
/// Which state the epsilon-weighted Laplacian coupling of EISMD/EPISMD acts on.
enum class InteractionOperand { X, Z };

std::string_view algorithm_name(Algorithm a) noexcept;
Algorithm parse_algorithm(std::string_view name);
std::string_view operand_name(InteractionOperand op) noexcept;
InteractionOperand parse_operand(std::string_view name);

struct Hyperparams {
  double eta = 1.0;
  double epsilon = 1.0;
  double sigma = 0.0;
  double dt = 0.01;
  long epochs = 50000;
  long metrics_every = 50;

  /// Throws ValidationError naming the offending field.
  void validate() const;
};

struct ParticleSystem {
  int n = 0;
  int d = 0;
  Eigen::VectorXd z;
  Eigen::VectorXd x;
  Eigen::VectorXd lambda;
  Eigen::VectorXd mu;
  long step = 0;
  double t = 0.0;
};

/// lambda_0 = 0, z_0 = grad Phi(x_0), mu_0 = grad Psi(0) = 0. `x0` is either a
/// single d-vector (replicated) or a stacked N*d vector.
ParticleSystem initialize(const mirror::MirrorMap& map, int n, const Eigen::VectorXd& x0);

/// Barycenter of the simplex for the entropy map, otherwise N(0, 1) per
/// coordinate from a dedicated stream of `seed`.
Eigen::VectorXd default_x0(const mirror::MirrorMap& map, int n, std::uint64_t seed);

class IntegrationDiverged : public NumericalError {
 public:
  IntegrationDiverged(long step, std::vector<diagnostics::MetricsRecord> records);
  long step() const noexcept { return step_; }
  const std::vector<diagnostics::MetricsRecord>& records() const noexcept { return records_; }

 private:
  long step_;
  std::vector<diagnostics::MetricsRecord> records_;
};

/// Owns the scratch buffers for repeated steps. Referenced objects must
/// outlive the integrator. `dual` is only used by EPISMD (null = identity).
class Integrator {
 public:
  Integrator(Algorithm algorithm, const objectives::DistributedProblem& problem,
             const mirror::MirrorMap& map, const graph::WeightedGraph& graph,
             const mirror::DualPreconditioner* dual, const Hyperparams& hp, std::uint64_t seed,
             InteractionOperand operand = InteractionOperand::X);

  /// Advances `s` by one step in place. Throws IntegrationDiverged (without
  /// records) when the new state is not finite; `s` is then left unchanged.
  void step(ParticleSystem& s);

  Algorithm algorithm() const noexcept { return algorithm_; }
  const Hyperparams& hyperparams() const noexcept { return hp_; }
  int particles() const noexcept { return n_; }
  int dim() const noexcept { return d_; }

 private:
  Algorithm algorithm_;
  const objectives::DistributedProblem* problem_;
  const mirror::MirrorMap* map_;
  const graph::WeightedGraph* graph_;
  const mirror::DualPreconditioner* dual_;
  Hyperparams hp_;
  rng::NoiseStream noise_;
  InteractionOperand operand_;
  int n_;
  int d_;
  Eigen::VectorXd grad_, coupling_, lap_lambda_, lap_x_, drift_, z_next_, x_next_, aux_next_,
      lambda_next_;
};

ParticleSystem ismd_step(const ParticleSystem& s, const objectives::DistributedProblem& problem,
                         const mirror::MirrorMap& map, const graph::WeightedGraph& graph,
                         const Hyperparams& hp, std::uint64_t seed);
ParticleSystem eismd_step(const ParticleSystem& s, const objectives::DistributedProblem& problem,
                          const mirror::MirrorMap& map, const graph::WeightedGraph& graph,
                          const Hyperparams& hp, std::uint64_t seed,
                          InteractionOperand operand = InteractionOperand::X);
ParticleSystem epismd_step(const ParticleSystem& s, const objectives::DistributedProblem& problem,
                           const mirror::MirrorMap& map, const mirror::DualPreconditioner& dual,
                           const graph::WeightedGraph& graph, const Hyperparams& hp,
                           std::uint64_t seed, InteractionOperand operand = InteractionOperand::X);

using Probe = std::function<diagnostics::MetricsRecord(const ParticleSystem&)>;
/// Called after every step (including step 0 before any update).
using Observer = std::function<void(const ParticleSystem&)>;

struct RunResult {
  std::vector<diagnostics::MetricsRecord> records;
  ParticleSystem final_state;
};

/// Runs hp.epochs steps from `initial`, recording at step 0, every
/// metrics_every steps, and at the final step. Divergence rethrows
/// IntegrationDiverged carrying the records gathered so far.
RunResult run(Integrator& integrator, ParticleSystem initial, const Probe& probe,
              const Observer& observer = {});

}  // namespace dmd::dynamics
