#include "dmd/graph.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <string>

#include "dmd/counter_rng.hpp"
#include "dmd/error.hpp"
#include "dmd/simd/kernels.hpp"

namespace dmd::graph {
namespace {

constexpr double kStochasticTol = 1e-12;
constexpr double kPinvCutoff = 1e-10;

void add_edge(std::vector<Edge>& edges, int a, int b) {
  edges.push_back({std::min(a, b), std::max(a, b)});
}

EdgeSet cyclic(int n) {
  EdgeSet out{n, {}};
  if (n == 2) {
    add_edge(out.edges, 0, 1);
  } else if (n >= 3) {
    for (int i = 0; i < n; ++i) add_edge(out.edges, i, (i + 1) % n);
  }
  return out;
}

EdgeSet erdos_renyi(int n, double p, std::uint64_t seed) {
  EdgeSet out{n, {}};
  const rng::CounterRng draws(seed, 0x45524452u);
  std::uint64_t k = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      // uniform() is in (0, 1]; p = 1 keeps every edge.
      if (draws.uniform(k++) <= p) add_edge(out.edges, i, j);
    }
  }
  return out;
}

EdgeSet barbell(int n, int cluster) {
  EdgeSet out{n, {}};
  for (int c = 0; c < 2; ++c) {
    const int base = c * cluster;
    for (int i = 0; i < cluster; ++i) {
      for (int j = i + 1; j < cluster; ++j) add_edge(out.edges, base + i, base + j);
    }
  }
  add_edge(out.edges, cluster - 1, cluster);
  return out;
}

}  // namespace

EdgeSet build_topology(const Topology& topology) {
  if (topology.n < 1) throw ValidationError("graph: particle count must be >= 1");
  switch (topology.kind) {
    case TopologyKind::Cyclic:
      return cyclic(topology.n);
    case TopologyKind::ErdosRenyi: {
      if (!(topology.edge_prob > 0.0 && topology.edge_prob <= 1.0)) {
        throw ValidationError("graph: edge_prob must lie in (0, 1]");
      }
      for (int attempt = 0; attempt < kErdosRenyiMaxAttempts; ++attempt) {
        EdgeSet e = erdos_renyi(topology.n, topology.edge_prob,
                                topology.seed + static_cast<std::uint64_t>(attempt));
        if (is_connected(e)) return e;
      }
      throw NumericalError("graph: Erdos-Renyi graph disconnected after " +
                           std::to_string(kErdosRenyiMaxAttempts) + " draws");
    }
    case TopologyKind::Barbell:
      if (topology.cluster_size < 1 || topology.n != 2 * topology.cluster_size) {
        throw ValidationError("graph: barbell needs n == 2 * cluster_size, cluster_size >= 1");
      }
      return barbell(topology.n, topology.cluster_size);
  }
  throw ValidationError("graph: unknown topology kind");
}

bool is_connected(const EdgeSet& edges) {
  if (edges.n <= 1) return true;
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(edges.n));
  for (const Edge& e : edges.edges) {
    adj[static_cast<std::size_t>(e.u)].push_back(e.v);
    adj[static_cast<std::size_t>(e.v)].push_back(e.u);
  }
  std::vector<bool> seen(static_cast<std::size_t>(edges.n), false);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = true;
  int visited = 1;
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    for (int v : adj[static_cast<std::size_t>(u)]) {
      if (!seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = true;
        ++visited;
        frontier.push(v);
      }
    }
  }
  return visited == edges.n;
}

WeightedGraph WeightedGraph::metropolis(const EdgeSet& edges) {
  const int n = edges.n;
  if (n < 1) throw ValidationError("graph: empty edge set");
  std::vector<int> degree(static_cast<std::size_t>(n), 0);
  for (const Edge& e : edges.edges) {
    if (e.u < 0 || e.v >= n || e.u >= e.v) throw ValidationError("graph: malformed edge");
    ++degree[static_cast<std::size_t>(e.u)];
    ++degree[static_cast<std::size_t>(e.v)];
  }
  if (!is_connected(edges)) throw ValidationError("graph: edge set is not connected");

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (const Edge& e : edges.edges) {
    const double w =
        1.0 / (1.0 + std::max(degree[static_cast<std::size_t>(e.u)],
                              degree[static_cast<std::size_t>(e.v)]));
    a(e.u, e.v) = w;
    a(e.v, e.u) = w;
  }
  for (int i = 0; i < n; ++i) a(i, i) = 1.0 - (a.row(i).sum() - a(i, i));
  return WeightedGraph(std::move(a));
}

WeightedGraph WeightedGraph::from_weights(const Eigen::MatrixXd& adjacency) {
  const Eigen::Index n = adjacency.rows();
  if (n < 1 || adjacency.cols() != n) throw ValidationError("graph: weight matrix must be square");
  if (!adjacency.allFinite()) throw ValidationError("graph: weight matrix has non-finite entries");
  if ((adjacency - adjacency.transpose()).cwiseAbs().maxCoeff() > kStochasticTol) {
    throw ValidationError("graph: weight matrix is not symmetric");
  }
  if (adjacency.minCoeff() < 0.0) throw ValidationError("graph: negative weight");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(adjacency.row(i).sum() - 1.0) > kStochasticTol ||
        std::abs(adjacency.col(i).sum() - 1.0) > kStochasticTol) {
      throw ValidationError("graph: weight matrix is not doubly stochastic (row/col " +
                            std::to_string(i) + ")");
    }
  }
  EdgeSet edges{static_cast<int>(n), {}};
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (adjacency(i, j) > 0.0) edges.edges.push_back({i, j});
    }
  }
  if (!is_connected(edges)) throw ValidationError("graph: weight matrix graph is not connected");
  return WeightedGraph(adjacency);
}

WeightedGraph::WeightedGraph(Eigen::MatrixXd adjacency) : adjacency_(std::move(adjacency)) {
  const int n = size();
  laplacian_ = -adjacency_;
  laplacian_.diagonal() += adjacency_.rowwise().sum();

  row_start_.assign(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j != i && adjacency_(i, j) > 0.0) {
        neighbors_.push_back({j, adjacency_(i, j)});
        if (j > i) ++edge_count_;
      }
    }
    row_start_[static_cast<std::size_t>(i) + 1] = neighbors_.size();
  }
}

std::span<const WeightedGraph::Neighbor> WeightedGraph::neighbors(int i) const noexcept {
  const auto idx = static_cast<std::size_t>(i);
  return {neighbors_.data() + row_start_[idx], row_start_[idx + 1] - row_start_[idx]};
}

void WeightedGraph::apply_laplacian(std::span<const double> x, int d,
                                    std::span<double> out) const {
  const auto n = static_cast<std::size_t>(size());
  const auto dd = static_cast<std::size_t>(d);
  if (d < 1 || x.size() != n * dd || out.size() != x.size()) {
    throw ValidationError("apply_laplacian: expected stacked vectors of length N*d");
  }
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto xi = x.subspan(i * dd, dd);
    const auto oi = out.subspan(i * dd, dd);
    for (const Neighbor& nb : neighbors(static_cast<int>(i))) {
      simd::add_scaled_diff(nb.weight, xi, x.subspan(static_cast<std::size_t>(nb.index) * dd, dd),
                            oi);
    }
  }
}

Eigen::VectorXd WeightedGraph::apply_laplacian(const Eigen::VectorXd& x, int d) const {
  Eigen::VectorXd out(x.size());
  apply_laplacian(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), d,
                  std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
  return out;
}

void apply_block(const Eigen::MatrixXd& m, std::span<const double> x, int d,
                 std::span<double> out) {
  const auto n = static_cast<std::size_t>(m.rows());
  const auto dd = static_cast<std::size_t>(d);
  if (m.cols() != m.rows() || d < 1 || x.size() != n * dd || out.size() != x.size()) {
    throw ValidationError("apply_block: dimension mismatch");
  }
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto oi = out.subspan(i * dd, dd);
    for (std::size_t j = 0; j < n; ++j) {
      const double w = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (w != 0.0) simd::axpy(w, x.subspan(j * dd, dd), oi);
    }
  }
}

Eigen::VectorXd apply_block(const Eigen::MatrixXd& m, const Eigen::VectorXd& x, int d) {
  Eigen::VectorXd out(x.size());
  apply_block(m, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), d,
              std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
  return out;
}

LaplacianSpectra spectra(const WeightedGraph& graph, double beta) {
  if (!(beta > 0.0)) throw ValidationError("spectra: beta must be > 0");
  const int n = graph.size();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(graph.laplacian());
  if (eig.info() != Eigen::Success) throw NumericalError("spectra: eigensolver failed");

  LaplacianSpectra s;
  s.beta = beta;
  s.eigenvalues = eig.eigenvalues();
  s.eigenvectors = eig.eigenvectors();
  const double lmax = std::max(0.0, s.eigenvalues(n - 1));
  s.kappa_n = lmax;
  s.algebraic_connectivity = n > 1 ? s.eigenvalues(1) : 0.0;

  Eigen::VectorXd inv = Eigen::VectorXd::Zero(n);
  const double cutoff = kPinvCutoff * lmax;
  for (int k = 0; k < n; ++k) {
    if (s.eigenvalues(k) > cutoff && s.eigenvalues(k) > 0.0) inv(k) = 1.0 / s.eigenvalues(k);
  }
  s.pseudo_inverse = s.eigenvectors * inv.asDiagonal() * s.eigenvectors.transpose();

  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(n, n);
  s.regularized = graph.laplacian() + (beta / n) * ones;
  s.regularized_inverse = s.pseudo_inverse + (1.0 / (beta * n)) * ones;
  const double lbeta_max = std::max(lmax, beta);
  s.kappa_beta_n = lbeta_max * lbeta_max;
  return s;
}

}  // namespace dmd::graph
