#include "dmd/dual_preconditioner.hpp"

#include <algorithm>
#include <string>

#include "dmd/error.hpp"
#include "dmd/mirror_map.hpp"

namespace dmd::mirror {

DualPreconditioner::DualPreconditioner(DualKind kind, int n, int d) : kind_(kind), n_(n), d_(d) {
  if (n < 1 || d < 1) throw ValidationError("dual preconditioner: N and d must be >= 1");
}

DualPreconditioner DualPreconditioner::identity(int n, int d) {
  return DualPreconditioner(DualKind::Identity, n, d);
}

DualPreconditioner DualPreconditioner::regularized_dual_hessian(
    const graph::LaplacianSpectra& spectra, std::vector<Eigen::MatrixXd> hessian_blocks) {
  const auto n = static_cast<int>(spectra.regularized.rows());
  if (hessian_blocks.size() != static_cast<std::size_t>(n)) {
    throw ValidationError("dual preconditioner: need one Hessian block per particle");
  }
  const auto d = static_cast<int>(hessian_blocks.front().rows());
  DualPreconditioner p(DualKind::RegularizedDualHessian, n, d);
  p.beta_ = spectra.beta;
  p.lbeta_ = spectra.regularized;
  p.lbeta_inv_ = spectra.regularized_inverse;
  for (std::size_t i = 0; i < hessian_blocks.size(); ++i) {
    const Eigen::MatrixXd& h = hessian_blocks[i];
    if (h.rows() != d || h.cols() != d) {
      throw ValidationError("dual preconditioner: Hessian block shape mismatch");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(h);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h, Eigen::EigenvaluesOnly);
    if (llt.info() != Eigen::Success || !(eig.eigenvalues().minCoeff() > 0.0)) {
      throw ValidationError("dual preconditioner: Hessian block " + std::to_string(i) +
                            " is not positive definite (need m >= d and full-rank Q_i)");
    }
    p.hess_llt_.push_back(std::move(llt));
  }
  p.hess_ = std::move(hessian_blocks);

  // Hess Psi* = L_beta^{-1} H L_beta^{-1}; its extreme eigenvalues invert those of Hess Psi.
  const int nd = n * d;
  Eigen::MatrixXd kron_inv = Eigen::MatrixXd::Zero(nd, nd);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      kron_inv.block(i * d, j * d, d, d).diagonal().setConstant(p.lbeta_inv_(i, j));
    }
  }
  Eigen::MatrixXd h_kron = kron_inv;
  for (int i = 0; i < n; ++i) {
    h_kron.middleRows(i * d, d) = p.hess_[static_cast<std::size_t>(i)] * kron_inv.middleRows(i * d, d);
  }
  Eigen::MatrixXd conj = kron_inv * h_kron;
  conj = 0.5 * (conj + conj.transpose()).eval();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(conj, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalError("dual preconditioner: eigensolver failed");
  p.mu_psi_ = 1.0 / eig.eigenvalues().maxCoeff();
  p.l_psi_ = 1.0 / eig.eigenvalues().minCoeff();
  return p;
}

void DualPreconditioner::check(std::span<const double> v) const {
  if (v.size() != static_cast<std::size_t>(n_) * static_cast<std::size_t>(d_)) {
    throw ValidationError("dual preconditioner: stacked vector length must be N*d");
  }
}

void DualPreconditioner::backward(std::span<const double> mu, std::span<double> lambda) const {
  check(mu);
  check(lambda);
  if (kind_ == DualKind::Identity) {
    std::copy(mu.begin(), mu.end(), lambda.begin());
    return;
  }
  Eigen::VectorXd tmp(mu.size());
  graph::apply_block(lbeta_inv_, mu, d_, as_span(tmp));
  for (int i = 0; i < n_; ++i) {
    tmp.segment(i * d_, d_) = hess_[static_cast<std::size_t>(i)] * tmp.segment(i * d_, d_);
  }
  graph::apply_block(lbeta_inv_, as_span(tmp), d_, lambda);
}

void DualPreconditioner::forward(std::span<const double> lambda, std::span<double> mu) const {
  check(lambda);
  check(mu);
  if (kind_ == DualKind::Identity) {
    std::copy(lambda.begin(), lambda.end(), mu.begin());
    return;
  }
  Eigen::VectorXd tmp(lambda.size());
  graph::apply_block(lbeta_, lambda, d_, as_span(tmp));
  for (int i = 0; i < n_; ++i) {
    tmp.segment(i * d_, d_) =
        hess_llt_[static_cast<std::size_t>(i)].solve(tmp.segment(i * d_, d_)).eval();
  }
  graph::apply_block(lbeta_, as_span(tmp), d_, mu);
}

Eigen::VectorXd DualPreconditioner::backward(const Eigen::VectorXd& mu) const {
  Eigen::VectorXd out(mu.size());
  backward(as_span(mu), as_span(out));
  return out;
}

Eigen::VectorXd DualPreconditioner::forward(const Eigen::VectorXd& lambda) const {
  Eigen::VectorXd out(lambda.size());
  forward(as_span(lambda), as_span(out));
  return out;
}

double DualPreconditioner::bregman(std::span<const double> a, std::span<const double> b) const {
  check(a);
  check(b);
  Eigen::VectorXd diff(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) diff(static_cast<Eigen::Index>(k)) = a[k] - b[k];
  if (kind_ == DualKind::Identity) return 0.5 * diff.squaredNorm();
  // 1/2 (L_beta diff)^T H^{-1} (L_beta diff)
  Eigen::VectorXd lb(diff.size());
  graph::apply_block(lbeta_, as_span(diff), d_, as_span(lb));
  double s = 0.0;
  for (int i = 0; i < n_; ++i) {
    const Eigen::VectorXd seg = lb.segment(i * d_, d_);
    s += seg.dot(hess_llt_[static_cast<std::size_t>(i)].solve(seg));
  }
  return 0.5 * s;
}

}  // namespace dmd::mirror
