#include "dmd/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dmd/counter_rng.hpp"
#include "dmd/error.hpp"
#include "dmd/simd/kernels.hpp"

namespace dmd::objectives {
namespace {

std::span<const double> col_span(const Eigen::MatrixXd& m, Eigen::Index c) {
  return {m.data() + c * m.rows(), static_cast<std::size_t>(m.rows())};
}

Eigen::MatrixXd gaussian_matrix(const rng::CounterRng& draws, std::uint64_t& k, int rows,
                                int cols) {
  Eigen::MatrixXd g(rows, cols);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) g(r, c) = draws.normal(k++);
  }
  return g;
}

Eigen::MatrixXd orthogonal_factor(const rng::CounterRng& draws, std::uint64_t& k, int size) {
  const Eigen::MatrixXd g = gaussian_matrix(draws, k, size, size);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(size, size);
  // Sign-fix against R's diagonal so the factor is Haar distributed.
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int c = 0; c < size; ++c) {
    if (r(c, c) < 0.0) q.col(c) = -q.col(c);
  }
  return q;
}

}  // namespace

QuadraticBlock::QuadraticBlock(Eigen::MatrixXd q, Eigen::VectorXd b)
    : q_(std::move(q)), qt_(q_.transpose()), b_(std::move(b)) {
  if (q_.rows() < 1 || q_.cols() < 1) throw ValidationError("quadratic block: empty Q");
  if (b_.size() != q_.rows()) throw ValidationError("quadratic block: b must have one entry per row of Q");
}

double QuadraticBlock::value(std::span<const double> x) const {
  if (x.size() != static_cast<std::size_t>(dim())) throw ValidationError("local_value: shape mismatch");
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), dim());
  return 0.5 * (q_ * xv - b_).squaredNorm();
}

void QuadraticBlock::grad(std::span<const double> x, std::span<double> out) const {
  const auto d = static_cast<std::size_t>(dim());
  const auto m = static_cast<std::size_t>(rows());
  if (x.size() != d || out.size() != d) throw ValidationError("local_grad: shape mismatch");
  // r = Q x - b as column axpys, then Q^T r as row axpys.
  Eigen::VectorXd r = -b_;
  const std::span<double> rs(r.data(), m);
  for (std::size_t c = 0; c < d; ++c) {
    simd::axpy(x[c], col_span(q_, static_cast<Eigen::Index>(c)), rs);
  }
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t row = 0; row < m; ++row) {
    simd::axpy(r(static_cast<Eigen::Index>(row)), col_span(qt_, static_cast<Eigen::Index>(row)),
               out);
  }
}

Eigen::VectorXd QuadraticBlock::grad(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out(dim());
  grad({x.data(), static_cast<std::size_t>(x.size())},
       {out.data(), static_cast<std::size_t>(out.size())});
  return out;
}

DistributedProblem::DistributedProblem(std::vector<QuadraticBlock> blocks, Domain domain)
    : blocks_(std::move(blocks)), domain_(domain) {
  if (blocks_.empty()) throw ValidationError("problem: need at least one block");
  for (const QuadraticBlock& b : blocks_) {
    if (b.dim() != dim() || b.rows() != rows()) {
      throw ValidationError("problem: blocks must share Q shape");
    }
  }
}

void DistributedProblem::stacked_grad(std::span<const double> x, std::span<double> out) const {
  const auto d = static_cast<std::size_t>(dim());
  if (x.size() != d * blocks_.size() || out.size() != x.size()) {
    throw ValidationError("stacked_grad: expected length N*d");
  }
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    blocks_[i].grad(x.subspan(i * d, d), out.subspan(i * d, d));
  }
}

Eigen::VectorXd DistributedProblem::stacked_grad(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out(x.size());
  stacked_grad({x.data(), static_cast<std::size_t>(x.size())},
               {out.data(), static_cast<std::size_t>(out.size())});
  return out;
}

double DistributedProblem::stacked_value(std::span<const double> x) const {
  const auto d = static_cast<std::size_t>(dim());
  if (x.size() != d * blocks_.size()) throw ValidationError("stacked_value: expected length N*d");
  double s = 0.0;
  for (std::size_t i = 0; i < blocks_.size(); ++i) s += blocks_[i].value(x.subspan(i * d, d));
  return s;
}

double DistributedProblem::aggregate_value(std::span<const double> x) const {
  if (x.size() != static_cast<std::size_t>(dim())) throw ValidationError("aggregate_value: expected length d");
  if (domain_ == Domain::Simplex) {
    for (double v : x) {
      if (v < 0.0) throw DomainError("aggregate_value: point outside the simplex");
    }
  }
  double s = 0.0;
  for (const QuadraticBlock& b : blocks_) s += b.value(x);
  return s;
}

double DistributedProblem::aggregate_value(const Eigen::VectorXd& x) const {
  return aggregate_value(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

Eigen::MatrixXd DistributedProblem::aggregate_hessian() const {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim(), dim());
  for (const QuadraticBlock& b : blocks_) h.noalias() += b.q().transpose() * b.q();
  return h;
}

Eigen::VectorXd DistributedProblem::aggregate_rhs() const {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(dim());
  for (const QuadraticBlock& b : blocks_) r.noalias() += b.q().transpose() * b.b();
  return r;
}

std::vector<Eigen::MatrixXd> DistributedProblem::hessian_blocks() const {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(blocks_.size());
  for (const QuadraticBlock& b : blocks_) out.push_back(b.hessian());
  return out;
}

DistributedProblem DistributedProblem::centralized() const {
  const int m = rows() * particles();
  Eigen::MatrixXd q(m, dim());
  Eigen::VectorXd b(m);
  for (int i = 0; i < particles(); ++i) {
    q.middleRows(i * rows(), rows()) = block(i).q();
    b.segment(i * rows(), rows()) = block(i).b();
  }
  std::vector<QuadraticBlock> one;
  one.emplace_back(std::move(q), std::move(b));
  return DistributedProblem(std::move(one), domain_);
}

GeneratedProblem generate_problem(const GeneratorConfig& cfg) {
  if (cfg.d < 1 || cfg.m < 1 || cfg.n < 1) throw ValidationError("generator: d, m, n must be >= 1");
  if (!(cfg.condition_number >= 1.0) || !std::isfinite(cfg.condition_number)) {
    throw ValidationError("generator: condition_number must be >= 1");
  }
  const int rank = std::min(cfg.m, cfg.d);
  if (rank < 2 && cfg.condition_number > 1.0) {
    throw ValidationError("generator: condition_number > 1 needs min(m, d) >= 2");
  }
  if (cfg.domain == Domain::Simplex && cfg.placement == OptimumPlacement::Boundary &&
      cfg.d < 2) {
    throw ValidationError("generator: boundary optimum needs d >= 2");
  }

  // Stream 0: shared minimizer; stream i + 1: block i.
  // Simplex problems always plant a point; without a shared minimizer it is the
  // aggregate optimum (interior placement) or lies outside the simplex (boundary).
  const bool planted = cfg.shared_minimizer || cfg.domain == Domain::Simplex;
  Eigen::VectorXd x_shared;
  if (planted) {
    const rng::CounterRng draws(cfg.seed, 0);
    x_shared.resize(cfg.d);
    if (cfg.domain == Domain::Simplex) {
      if (cfg.placement == OptimumPlacement::Interior) {
        // Uniform on the simplex: normalized exponential spacings.
        for (int j = 0; j < cfg.d; ++j) x_shared(j) = -std::log(draws.uniform(static_cast<std::uint64_t>(j)));
        x_shared /= x_shared.sum();
      } else {
        x_shared.setConstant(-0.5 / std::max(cfg.d - 1, 1));
        x_shared(0) = 1.5;
      }
    } else {
      for (int j = 0; j < cfg.d; ++j) x_shared(j) = draws.normal(static_cast<std::uint64_t>(j));
    }
  }

  std::vector<QuadraticBlock> blocks;
  blocks.reserve(static_cast<std::size_t>(cfg.n));
  const double log_kappa = std::log(cfg.condition_number);
  for (int i = 0; i < cfg.n; ++i) {
    const rng::CounterRng draws(cfg.seed, static_cast<std::uint32_t>(i) + 1u);
    std::uint64_t k = 0;
    const Eigen::MatrixXd u = orthogonal_factor(draws, k, cfg.m);
    const Eigen::MatrixXd v = orthogonal_factor(draws, k, cfg.d);
    Eigen::VectorXd s(rank);
    for (int r = 0; r < rank; ++r) s(r) = std::exp(-log_kappa * draws.uniform(k++));
    std::sort(s.data(), s.data() + rank, std::greater<>());
    s(0) = 1.0;
    if (rank > 1) s(rank - 1) = 1.0 / cfg.condition_number;
    Eigen::MatrixXd q = u.leftCols(rank) * s.asDiagonal() * v.leftCols(rank).transpose();

    Eigen::VectorXd b(cfg.m);
    if (cfg.shared_minimizer) {
      b = q * x_shared;
    } else {
      for (int r = 0; r < cfg.m; ++r) b(r) = draws.normal(k++);
      if (planted) b += q * x_shared;
    }
    blocks.emplace_back(std::move(q), std::move(b));
  }

  if (planted && !cfg.shared_minimizer) {
    // Shift every b_i by Q_i delta with H delta = g, H = sum_i Q_i^T Q_i, so that
    // sum_i Q_i^T (Q_i x - b_i) vanishes at the planted point. Spreading the
    // correction keeps the local gradients on the scale of the noise in b_i.
    Eigen::VectorXd g = Eigen::VectorXd::Zero(cfg.d);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(cfg.d, cfg.d);
    for (const QuadraticBlock& blk : blocks) {
      g += blk.grad(x_shared);
      h += blk.hessian();
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(h);
    if (llt.info() != Eigen::Success) {
      throw ValidationError("generator: simplex problems without a shared minimizer need a positive definite aggregate Hessian");
    }
    const Eigen::VectorXd delta = llt.solve(g);
    for (QuadraticBlock& blk : blocks) {
      Eigen::MatrixXd q = blk.q();
      Eigen::VectorXd b = blk.b() + q * delta;
      blk = QuadraticBlock(std::move(q), std::move(b));
    }
  }

  DistributedProblem problem(std::move(blocks), cfg.domain);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(problem.aggregate_hessian(),
                                                           Eigen::EigenvaluesOnly);
  const bool strongly_convex =
      eig.info() == Eigen::Success && eig.eigenvalues().minCoeff() > 1e-12 * eig.eigenvalues().maxCoeff();
  Eigen::VectorXd shared = cfg.shared_minimizer ? x_shared : Eigen::VectorXd();
  return GeneratedProblem{std::move(problem), std::move(shared), std::move(x_shared), strongly_convex};
}

}  // namespace dmd::objectives
