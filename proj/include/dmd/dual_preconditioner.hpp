#pragma once

// Mirror map Psi on the Lagrange multipliers. Identity is Psi = 1/2 |.|^2;
// the regularized dual Hessian uses the constant quadratic
//   Hess Psi  = L_beta H^{-1} L_beta,   Hess Psi* = L_beta^{-1} H L_beta^{-1},
// with H = diag(Q_i^T Q_i) the stacked problem Hessian.

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "dmd/graph.hpp"

namespace dmd::mirror {

enum class DualKind { Identity, RegularizedDualHessian };

class DualPreconditioner {
 public:
  static DualPreconditioner identity(int n, int d);
  /// `hessian_blocks` are the N per-particle d x d Hessians; each must be
  /// positive definite.
  static DualPreconditioner regularized_dual_hessian(const graph::LaplacianSpectra& spectra,
                                                     std::vector<Eigen::MatrixXd> hessian_blocks);

  DualKind kind() const noexcept { return kind_; }
  int particles() const noexcept { return n_; }
  int dim() const noexcept { return d_; }
  double beta() const noexcept { return beta_; }

  /// lambda = grad Psi*(mu).
  void backward(std::span<const double> mu, std::span<double> lambda) const;
  /// mu = grad Psi(lambda).
  void forward(std::span<const double> lambda, std::span<double> mu) const;
  Eigen::VectorXd backward(const Eigen::VectorXd& mu) const;
  Eigen::VectorXd forward(const Eigen::VectorXd& lambda) const;

  /// D_Psi(a, b) = 1/2 (a - b)^T Hess Psi (a - b).
  double bregman(std::span<const double> a, std::span<const double> b) const;

  /// Extreme eigenvalues of Hess Psi (strong convexity and smoothness of Psi).
  double strong_convexity() const noexcept { return mu_psi_; }
  double smoothness() const noexcept { return l_psi_; }

 private:
  DualPreconditioner(DualKind kind, int n, int d);
  void check(std::span<const double> v) const;

  DualKind kind_;
  int n_;
  int d_;
  double beta_ = 0.0;
  Eigen::MatrixXd lbeta_;
  Eigen::MatrixXd lbeta_inv_;
  std::vector<Eigen::MatrixXd> hess_;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> hess_llt_;
  double mu_psi_ = 1.0;
  double l_psi_ = 1.0;
};

}  // namespace dmd::mirror
