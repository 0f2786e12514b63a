#pragma once

// Ground-truth optima (x*, lambda*) of the consensus problem and the
// centralized mirror descent baseline.

#include <Eigen/Dense>
#include <cstdint>

#include "dmd/dynamics.hpp"
#include "dmd/graph.hpp"
#include "dmd/mirror_map.hpp"
#include "dmd/objectives.hpp"

namespace dmd::oracle {

struct OptimalPair {
  Eigen::VectorXd x_star;       // d
  Eigen::VectorXd lambda_star;  // stacked N*d, minimal norm
  double f_star = 0.0;
  /// Unconstrained: |grad f(x*) + L lambda*|. Simplex: max of the
  /// complementarity and dual-feasibility residuals of the centralized KKT system.
  double kkt_residual = 0.0;
  bool interior = true;
};

/// lambda* = -L^+ grad f(1 (x) x*), the minimal-norm multiplier.
Eigen::VectorXd minimal_multiplier(const objectives::DistributedProblem& problem,
                                   const graph::LaplacianSpectra& spectra,
                                   const Eigen::VectorXd& x_star);

/// Solves (sum Q_i^T Q_i) x = sum Q_i^T b_i by Cholesky with one refinement
/// step. Throws NumericalError when the aggregate Hessian is singular.
OptimalPair solve_unconstrained(const objectives::DistributedProblem& problem,
                                const graph::WeightedGraph& graph);

struct SimplexOptions {
  double tol = 1e-12;
  long max_iterations = 10'000'000;
};

/// Centralized entropic mirror descent z <- z - dt grad f(x), x = softmax(z),
/// dt = 1 / lambda_max(sum Q_i^T Q_i), until |x_{k+1} - x_k| <= tol * dt.
/// Throws NumericalError on budget exhaustion or a failed KKT check (1e-6).
OptimalPair solve_simplex(const objectives::DistributedProblem& problem,
                          const graph::WeightedGraph& graph, const SimplexOptions& options = {});

/// Dispatches on the problem domain.
OptimalPair solve(const objectives::DistributedProblem& problem, const graph::WeightedGraph& graph);

/// Single-node run of dz = -eta grad f(x) dt + sigma dB on the centralized
/// problem (all blocks stacked). Records are measured against `opt`.
dynamics::RunResult centralized_md_baseline(const objectives::DistributedProblem& problem,
                                            const mirror::MirrorMap& map,
                                            const dynamics::Hyperparams& hp, std::uint64_t seed,
                                            const OptimalPair& opt, const Eigen::VectorXd& x0);

}  // namespace dmd::oracle
