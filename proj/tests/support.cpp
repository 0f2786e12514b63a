#include "support.hpp"

#include <cmath>

namespace dmd::test {

Instance make_instance(const objectives::GeneratorConfig& gen, graph::TopologyKind topology,
                       double beta, int cluster_size) {
  objectives::GeneratedProblem gp = objectives::generate_problem(gen);
  graph::Topology t;
  t.kind = topology;
  t.n = gen.n;
  t.cluster_size = cluster_size;
  t.seed = gen.seed;
  graph::WeightedGraph g = graph::WeightedGraph::metropolis(graph::build_topology(t));
  graph::LaplacianSpectra sp = graph::spectra(g, beta);
  mirror::MirrorMap map = gen.domain == objectives::Domain::Simplex ? mirror::MirrorMap::entropy(gen.d)
                                                                    : mirror::MirrorMap::euclidean(gen.d);
  oracle::OptimalPair opt = oracle::solve(gp.problem, g);
  return Instance{std::move(gp.problem), std::move(g), std::move(sp), std::move(map), std::move(opt),
                  std::move(gp.planted)};
}

Instance desk_instance(std::uint64_t seed, bool shared_minimizer) {
  objectives::GeneratorConfig gen;
  gen.seed = seed;
  gen.shared_minimizer = shared_minimizer;
  return make_instance(gen, graph::TopologyKind::Cyclic);
}

objectives::DistributedProblem scalar_problem(const std::vector<double>& b) {
  std::vector<objectives::QuadraticBlock> blocks;
  for (double bi : b) blocks.emplace_back(Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Constant(1, bi));
  return objectives::DistributedProblem(std::move(blocks), objectives::Domain::Unconstrained);
}

std::uint64_t TestRng::next() {
  // splitmix64
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double TestRng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double TestRng::normal() {
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

int TestRng::integer(int lo, int hi) {
  return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
}

Eigen::VectorXd TestRng::normal_vector(Eigen::Index n) {
  Eigen::VectorXd v(n);
  for (Eigen::Index k = 0; k < n; ++k) v(k) = normal();
  return v;
}

Eigen::MatrixXd TestRng::normal_matrix(Eigen::Index r, Eigen::Index c) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index j = 0; j < c; ++j) {
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = normal();
  }
  return m;
}

Eigen::MatrixXd kron_identity(const Eigen::MatrixXd& m, int d) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m.rows() * d, m.cols() * d);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out.block(i * d, j * d, d, d) = m(i, j) * Eigen::MatrixXd::Identity(d, d);
    }
  }
  return out;
}

dynamics::ParticleSystem integrate(dynamics::Integrator& integ, dynamics::ParticleSystem s, long steps) {
  for (long k = 0; k < steps; ++k) integ.step(s);
  return s;
}

}  // namespace dmd::test
