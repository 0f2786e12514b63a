#pragma once

// Per-particle least-squares objectives f_i(x) = 1/2 |Q_i x - b_i|^2 and the
// generators for the unconstrained and simplex-constrained test problems.

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

namespace dmd::objectives {

enum class Domain { Unconstrained, Simplex };

class QuadraticBlock {
 public:
  QuadraticBlock(Eigen::MatrixXd q, Eigen::VectorXd b);

  int rows() const noexcept { return static_cast<int>(q_.rows()); }
  int dim() const noexcept { return static_cast<int>(q_.cols()); }
  const Eigen::MatrixXd& q() const noexcept { return q_; }
  const Eigen::VectorXd& b() const noexcept { return b_; }

  double value(std::span<const double> x) const;
  /// out = Q^T (Q x - b)
  void grad(std::span<const double> x, std::span<double> out) const;
  Eigen::VectorXd grad(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd hessian() const { return q_.transpose() * q_; }

 private:
  Eigen::MatrixXd q_;
  Eigen::MatrixXd qt_;  // Q^T, so rows of Q are contiguous columns here
  Eigen::VectorXd b_;
};

class DistributedProblem {
 public:
  DistributedProblem(std::vector<QuadraticBlock> blocks, Domain domain);

  int particles() const noexcept { return static_cast<int>(blocks_.size()); }
  int dim() const noexcept { return blocks_.front().dim(); }
  int rows() const noexcept { return blocks_.front().rows(); }
  Domain domain() const noexcept { return domain_; }
  const std::vector<QuadraticBlock>& blocks() const noexcept { return blocks_; }
  const QuadraticBlock& block(int i) const { return blocks_.at(static_cast<std::size_t>(i)); }

  /// Stacked gradient: block i of `out` is grad f_i(x^i).
  void stacked_grad(std::span<const double> x, std::span<double> out) const;
  Eigen::VectorXd stacked_grad(const Eigen::VectorXd& x) const;
  /// sum_i f_i(x^i)
  double stacked_value(std::span<const double> x) const;
  /// f(x) = sum_i f_i(x) at a single consensus point. Simplex problems reject
  /// points with negative coordinates.
  double aggregate_value(std::span<const double> x) const;
  double aggregate_value(const Eigen::VectorXd& x) const;

  Eigen::MatrixXd aggregate_hessian() const;
  Eigen::VectorXd aggregate_rhs() const;  // sum_i Q_i^T b_i
  std::vector<Eigen::MatrixXd> hessian_blocks() const;

  /// Single-block problem with Q = [Q_1; ...; Q_N], b = [b_1; ...; b_N].
  DistributedProblem centralized() const;

 private:
  std::vector<QuadraticBlock> blocks_;
  Domain domain_;
};

enum class OptimumPlacement { Interior, Boundary };

struct GeneratorConfig {
  std::uint64_t seed = 0;
  int d = 20;
  int m = 20;
  int n = 10;
  double condition_number = 15.0;
  bool shared_minimizer = false;
  Domain domain = Domain::Unconstrained;
  /// Simplex only. Interior plants the aggregate minimizer inside the simplex;
  /// Boundary plants it outside so the constrained optimum lands on the boundary
  /// (diagnostics only).
  OptimumPlacement placement = OptimumPlacement::Interior;
};

struct GeneratedProblem {
  DistributedProblem problem;
  /// The shared minimizer when cfg.shared_minimizer, else empty.
  Eigen::VectorXd shared_minimizer;
  /// Minimizer of the unconstrained aggregate f for simplex problems and
  /// shared-minimizer problems, else empty.
  Eigen::VectorXd planted;
  /// Whether sum_i Q_i^T Q_i is positive definite.
  bool strongly_convex = false;
};

/// Q_i = U diag(s) V^T with Haar-like orthogonal U, V (QR of Gaussian
/// matrices) and s log-uniform in [1/kappa, 1], endpoints pinned so that
/// sigma_max / sigma_min equals the condition number. Pure function of cfg.
GeneratedProblem generate_problem(const GeneratorConfig& cfg);

}  // namespace dmd::objectives
