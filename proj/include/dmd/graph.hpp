#pragma once

// Communication graphs: topologies, doubly stochastic weights, and the
// Laplacian spectral objects used by the dynamics and the analysis.
//
// Stacked vectors hold N particles of dimension d as N consecutive blocks;
// an N x N matrix M acts on them as M (x) I_d.

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

namespace dmd::graph {

enum class TopologyKind { Cyclic, ErdosRenyi, Barbell };

struct Topology {
  TopologyKind kind = TopologyKind::Cyclic;
  int n = 1;
  double edge_prob = 0.5;  // ErdosRenyi only
  int cluster_size = 0;    // Barbell only; n must equal 2 * cluster_size
  std::uint64_t seed = 0;  // ErdosRenyi only
};

struct Edge {
  int u = 0;
  int v = 0;  // u < v
  friend bool operator==(const Edge&, const Edge&) = default;
};

struct EdgeSet {
  int n = 0;
  std::vector<Edge> edges;
};

/// Erdos-Renyi draws are retried with seed+1, seed+2, ... up to this many times.
inline constexpr int kErdosRenyiMaxAttempts = 100;

EdgeSet build_topology(const Topology& topology);
bool is_connected(const EdgeSet& edges);

class WeightedGraph {
 public:
  struct Neighbor {
    int index;
    double weight;
  };

  /// A_ij = 1 / (1 + max(deg_i, deg_j)) on edges, A_ii = 1 - sum_{j != i} A_ij.
  static WeightedGraph metropolis(const EdgeSet& edges);
  /// Validates symmetry, nonnegativity, unit row sums (1e-12) and connectivity.
  static WeightedGraph from_weights(const Eigen::MatrixXd& adjacency);

  int size() const noexcept { return static_cast<int>(adjacency_.rows()); }
  std::size_t edge_count() const noexcept { return edge_count_; }
  const Eigen::MatrixXd& adjacency() const noexcept { return adjacency_; }
  const Eigen::MatrixXd& laplacian() const noexcept { return laplacian_; }
  std::span<const Neighbor> neighbors(int i) const noexcept;

  /// out = (L (x) I_d) x via the edge lists: out_i = sum_j A_ij (x_i - x_j).
  void apply_laplacian(std::span<const double> x, int d, std::span<double> out) const;
  Eigen::VectorXd apply_laplacian(const Eigen::VectorXd& x, int d) const;

 private:
  explicit WeightedGraph(Eigen::MatrixXd adjacency);

  Eigen::MatrixXd adjacency_;
  Eigen::MatrixXd laplacian_;
  std::vector<std::size_t> row_start_;
  std::vector<Neighbor> neighbors_;
  std::size_t edge_count_ = 0;
};

/// out = (M (x) I_d) x for a dense N x N matrix M, without forming the Kronecker product.
void apply_block(const Eigen::MatrixXd& m, std::span<const double> x, int d,
                 std::span<double> out);
Eigen::VectorXd apply_block(const Eigen::MatrixXd& m, const Eigen::VectorXd& x, int d);

struct LaplacianSpectra {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // columns match eigenvalues
  Eigen::MatrixXd pseudo_inverse;
  double beta = 1.0;
  Eigen::MatrixXd regularized;          // L_beta = L + (beta/N) 1 1^T
  Eigen::MatrixXd regularized_inverse;  // L_beta^{-1} = L^+ + 1/(beta N) 1 1^T
  double kappa_beta_n = 0.0;            // lambda_max(L_beta)^2
  double kappa_n = 0.0;                 // lambda_max(L)
  double algebraic_connectivity = 0.0;  // second-smallest eigenvalue of L (0 when N = 1)
};

/// Eigenvalues below 1e-10 * lambda_max count as zero when forming L^+.
LaplacianSpectra spectra(const WeightedGraph& graph, double beta);

}  // namespace dmd::graph
