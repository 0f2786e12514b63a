#include "dmd/mirror_map.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dmd/error.hpp"

namespace dmd::mirror {
namespace {

constexpr double kLogFloor = 1e-300;

double log_sum_exp(std::span<const double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  return m + std::log(s);
}

}  // namespace

std::string_view map_kind_name(MapKind kind) noexcept {
  switch (kind) {
    case MapKind::Euclidean:
      return "euclidean";
    case MapKind::NegativeEntropy:
      return "entropy";
    case MapKind::Quadratic:
      return "quadratic";
  }
  return "unknown";
}

MirrorMap::MirrorMap(MapKind kind, int d) : kind_(kind), dim_(d) {
  if (d < 1) throw ValidationError("mirror map: dimension must be >= 1");
}

MirrorMap MirrorMap::euclidean(int d) { return MirrorMap(MapKind::Euclidean, d); }

MirrorMap MirrorMap::entropy(int d) {
  MirrorMap m(MapKind::NegativeEntropy, d);
  // Pinsker: 1-strongly convex w.r.t. l1 on the simplex; no finite smoothness constant.
  m.mu_ = 1.0;
  m.smooth_ = std::numeric_limits<double>::infinity();
  return m;
}

MirrorMap MirrorMap::quadratic(const Eigen::MatrixXd& p) {
  if (p.rows() != p.cols() || p.rows() < 1) {
    throw ValidationError("quadratic mirror map: P must be square");
  }
  if ((p - p.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + p.cwiseAbs().maxCoeff())) {
    throw ValidationError("quadratic mirror map: P must be symmetric");
  }
  MirrorMap m(MapKind::Quadratic, static_cast<int>(p.rows()));
  m.p_ = 0.5 * (p + p.transpose());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m.p_, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalError("quadratic mirror map: eigensolver failed");
  m.mu_ = eig.eigenvalues().minCoeff();
  m.smooth_ = eig.eigenvalues().maxCoeff();
  if (!(m.mu_ > 0.0)) throw ValidationError("quadratic mirror map: P must be positive definite");
  m.p_llt_.compute(m.p_);
  if (m.p_llt_.info() != Eigen::Success) {
    throw NumericalError("quadratic mirror map: Cholesky factorization failed");
  }
  return m;
}

void MirrorMap::check(std::span<const double> v, const char* what) const {
  if (v.size() != static_cast<std::size_t>(dim_)) {
    throw ValidationError(std::string("mirror map: ") + what + " has wrong dimension");
  }
}

void MirrorMap::forward(std::span<const double> x, std::span<double> z) const {
  check(x, "x");
  check(z, "z");
  switch (kind_) {
    case MapKind::Euclidean:
      std::copy(x.begin(), x.end(), z.begin());
      return;
    case MapKind::NegativeEntropy:
      for (std::size_t j = 0; j < x.size(); ++j) {
        if (!(x[j] > 0.0)) throw DomainError("entropy mirror map: coordinate must be > 0");
        z[j] = 1.0 + std::log(x[j]);
      }
      return;
    case MapKind::Quadratic: {
      const Eigen::Map<const Eigen::VectorXd> xv(x.data(), dim_);
      Eigen::Map<Eigen::VectorXd>(z.data(), dim_) = p_ * xv;
      return;
    }
  }
}

void MirrorMap::backward(std::span<const double> z, std::span<double> x) const {
  check(z, "z");
  check(x, "x");
  switch (kind_) {
    case MapKind::Euclidean:
      std::copy(z.begin(), z.end(), x.begin());
      return;
    case MapKind::NegativeEntropy: {
      // exp(z_j - 1) / sum_k exp(z_k - 1); the -1 cancels, subtracting max avoids overflow.
      const double m = *std::max_element(z.begin(), z.end());
      double s = 0.0;
      for (std::size_t j = 0; j < z.size(); ++j) {
        x[j] = std::exp(z[j] - m);
        s += x[j];
      }
      for (double& v : x) v /= s;
      return;
    }
    case MapKind::Quadratic: {
      const Eigen::Map<const Eigen::VectorXd> zv(z.data(), dim_);
      Eigen::Map<Eigen::VectorXd>(x.data(), dim_) = p_llt_.solve(zv);
      return;
    }
  }
}

Eigen::VectorXd MirrorMap::forward(const Eigen::VectorXd& x) const {
  Eigen::VectorXd z(x.size());
  forward(as_span(x), as_span(z));
  return z;
}

Eigen::VectorXd MirrorMap::backward(const Eigen::VectorXd& z) const {
  Eigen::VectorXd x(z.size());
  backward(as_span(z), as_span(x));
  return x;
}

double MirrorMap::value(std::span<const double> x) const {
  check(x, "x");
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), dim_);
  switch (kind_) {
    case MapKind::Euclidean:
      return 0.5 * xv.squaredNorm();
    case MapKind::NegativeEntropy: {
      double s = 0.0;
      for (double v : x) {
        if (v < 0.0) throw DomainError("entropy mirror map: negative coordinate");
        if (v > 0.0) s += v * std::log(v);
      }
      return s;
    }
    case MapKind::Quadratic:
      return 0.5 * xv.dot(p_ * xv);
  }
  return 0.0;
}

double MirrorMap::conjugate_value(std::span<const double> z) const {
  check(z, "z");
  const Eigen::Map<const Eigen::VectorXd> zv(z.data(), dim_);
  switch (kind_) {
    case MapKind::Euclidean:
      return 0.5 * zv.squaredNorm();
    case MapKind::NegativeEntropy:
      // sup over the simplex of <z, x> - sum x log x.
      return log_sum_exp(z);
    case MapKind::Quadratic:
      return 0.5 * zv.dot(p_llt_.solve(zv));
  }
  return 0.0;
}

double MirrorMap::bregman(std::span<const double> x, std::span<const double> y) const {
  check(x, "x");
  check(y, "y");
  if (kind_ == MapKind::NegativeEntropy) {
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (x[j] < 0.0 || !(y[j] > 0.0)) {
        throw DomainError("entropy Bregman divergence: point outside the domain");
      }
      // Generalized KL; equals KL(x || y) on the simplex.
      if (x[j] > 0.0) s += x[j] * std::log(x[j] / y[j]);
      s += y[j] - x[j];
    }
    return std::max(s, 0.0);
  }
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), dim_);
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), dim_);
  const Eigen::VectorXd diff = xv - yv;
  if (kind_ == MapKind::Euclidean) return 0.5 * diff.squaredNorm();
  return 0.5 * diff.dot(p_ * diff);
}

double MirrorMap::bregman_clamped(std::span<const double> x, std::span<const double> y,
                                  bool* clamped) const {
  if (kind_ != MapKind::NegativeEntropy) return bregman(x, y);
  check(x, "x");
  check(y, "y");
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double xj = std::max(x[j], 0.0);
    double yj = y[j];
    if (yj < kLogFloor || x[j] < 0.0) {
      yj = std::max(yj, kLogFloor);
      if (clamped) *clamped = true;
    }
    if (xj > 0.0) s += xj * (std::log(xj) - std::log(yj));
    s += yj - xj;
  }
  return std::max(s, 0.0);
}

double MirrorMap::conjugate_bregman(std::span<const double> z, std::span<const double> z2) const {
  check(z, "z");
  check(z2, "z2");
  Eigen::VectorXd x2(dim_);
  backward(z2, as_span(x2));
  double inner = 0.0;
  for (int j = 0; j < dim_; ++j) inner += x2(j) * (z[static_cast<std::size_t>(j)] -
                                                   z2[static_cast<std::size_t>(j)]);
  return std::max(conjugate_value(z) - conjugate_value(z2) - inner, 0.0);
}

void MirrorMap::hessian_conj_apply(std::span<const double> z, std::span<const double> v,
                                   std::span<double> out) const {
  check(z, "z");
  check(v, "v");
  check(out, "out");
  switch (kind_) {
    case MapKind::Euclidean:
      std::copy(v.begin(), v.end(), out.begin());
      return;
    case MapKind::NegativeEntropy: {
      // (diag(x) - x x^T) v with x = grad Phi*(z).
      Eigen::VectorXd x(dim_);
      backward(z, as_span(x));
      double xv = 0.0;
      for (int j = 0; j < dim_; ++j) xv += x(j) * v[static_cast<std::size_t>(j)];
      for (int j = 0; j < dim_; ++j) {
        out[static_cast<std::size_t>(j)] = x(j) * (v[static_cast<std::size_t>(j)] - xv);
      }
      return;
    }
    case MapKind::Quadratic: {
      const Eigen::Map<const Eigen::VectorXd> vv(v.data(), dim_);
      Eigen::Map<Eigen::VectorXd>(out.data(), dim_) = p_llt_.solve(vv);
      return;
    }
  }
}

Eigen::MatrixXd MirrorMap::hessian_conj(std::span<const double> z) const {
  check(z, "z");
  switch (kind_) {
    case MapKind::Euclidean:
      return Eigen::MatrixXd::Identity(dim_, dim_);
    case MapKind::NegativeEntropy: {
      Eigen::VectorXd x(dim_);
      backward(z, as_span(x));
      Eigen::MatrixXd h = -x * x.transpose();
      h.diagonal() += x;
      return h;
    }
    case MapKind::Quadratic:
      return p_llt_.solve(Eigen::MatrixXd::Identity(dim_, dim_));
  }
  return {};
}

void forward_stacked(const MirrorMap& map, std::span<const double> x, std::span<double> z) {
  const auto d = static_cast<std::size_t>(map.dim());
  if (x.size() % d != 0 || z.size() != x.size()) {
    throw ValidationError("forward_stacked: length is not a multiple of d");
  }
  for (std::size_t off = 0; off < x.size(); off += d) {
    map.forward(x.subspan(off, d), z.subspan(off, d));
  }
}

void backward_stacked(const MirrorMap& map, std::span<const double> z, std::span<double> x) {
  const auto d = static_cast<std::size_t>(map.dim());
  if (z.size() % d != 0 || z.size() != x.size()) {
    throw ValidationError("backward_stacked: length is not a multiple of d");
  }
  for (std::size_t off = 0; off < z.size(); off += d) {
    map.backward(z.subspan(off, d), x.subspan(off, d));
  }
}

}  // namespace dmd::mirror
