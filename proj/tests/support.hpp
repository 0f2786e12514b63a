#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "dmd/diagnostics.hpp"
#include "dmd/dual_preconditioner.hpp"
#include "dmd/dynamics.hpp"
#include "dmd/graph.hpp"
#include "dmd/mirror_map.hpp"
#include "dmd/objectives.hpp"
#include "dmd/oracle.hpp"

namespace dmd::test {

/// A problem with its graph, map and optimum, ready to integrate.
struct Instance {
  objectives::DistributedProblem problem;
  graph::WeightedGraph graph;
  graph::LaplacianSpectra spectra;
  mirror::MirrorMap map;
  oracle::OptimalPair opt;
  Eigen::VectorXd planted;
};

Instance make_instance(const objectives::GeneratorConfig& gen, graph::TopologyKind topology,
                       double beta = 1.0, int cluster_size = 0);

/// Problem-A style desk instance: d = m = 20, N = 10, condition number 15, cyclic graph.
Instance desk_instance(std::uint64_t seed, bool shared_minimizer = false);

/// Scalar Euclidean instance f_i = 1/2 (x - b_i)^2 on a graph given by its weights.
objectives::DistributedProblem scalar_problem(const std::vector<double>& b);

/// Deterministic test-side Gaussian / uniform draws (independent of the library RNG).
class TestRng {
 public:
  explicit TestRng(std::uint64_t seed) : state_(seed * 0x9E3779B97F4A7C15ULL + 1) {}
  double uniform();  // [0, 1)
  double normal();
  int integer(int lo, int hi);  // inclusive
  Eigen::VectorXd normal_vector(Eigen::Index n);
  Eigen::MatrixXd normal_matrix(Eigen::Index r, Eigen::Index c);

 private:
  std::uint64_t next();
  std::uint64_t state_;
};

/// Dense Kronecker M (x) I_d.
Eigen::MatrixXd kron_identity(const Eigen::MatrixXd& m, int d);

/// Runs `steps` steps and returns the final state.
dynamics::ParticleSystem integrate(dynamics::Integrator& integ, dynamics::ParticleSystem s, long steps);

}  // namespace dmd::test
