#pragma once

// Primal mirror maps Phi: gradient, conjugate gradient, Hessian of the
// conjugate and Bregman divergences for the three supported families.

#include <Eigen/Dense>
#include <limits>
#include <span>
#include <string_view>

namespace dmd::mirror {

enum class MapKind { Euclidean, NegativeEntropy, Quadratic };

std::string_view map_kind_name(MapKind kind) noexcept;

class MirrorMap {
 public:
  /// Phi(x) = 1/2 |x|^2.
  static MirrorMap euclidean(int d);
  /// Phi(x) = sum_j x_j log x_j, restricted to the probability simplex.
  static MirrorMap entropy(int d);
  /// Phi(x) = 1/2 x^T P x, P symmetric positive definite.
  static MirrorMap quadratic(const Eigen::MatrixXd& p);

  MapKind kind() const noexcept { return kind_; }
  int dim() const noexcept { return dim_; }
  const Eigen::MatrixXd& matrix() const noexcept { return p_; }

  /// Strong convexity / smoothness constants in the map's natural norm
  /// (l2 for Euclidean and Quadratic, l1 for entropy where L_Phi is unbounded).
  double strong_convexity() const noexcept { return mu_; }
  double smoothness() const noexcept { return smooth_; }

  /// z = grad Phi(x). Entropy requires x > 0 (throws DomainError).
  void forward(std::span<const double> x, std::span<double> z) const;
  /// x = grad Phi*(z). Entropy: normalized exp(z - 1), invariant to shifts of z.
  void backward(std::span<const double> z, std::span<double> x) const;
  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
  Eigen::VectorXd backward(const Eigen::VectorXd& z) const;

  double value(std::span<const double> x) const;
  double conjugate_value(std::span<const double> z) const;

  /// D_Phi(x, y) = Phi(x) - Phi(y) - <grad Phi(y), x - y>.
  double bregman(std::span<const double> x, std::span<const double> y) const;
  /// Same, but entropy coordinates of y are clamped to >= 1e-300 before the log
  /// (and 0 log 0 = 0 for x). Sets *clamped when clamping changed anything.
  double bregman_clamped(std::span<const double> x, std::span<const double> y,
                         bool* clamped) const;
  /// D_Phi*(z, z').
  double conjugate_bregman(std::span<const double> z, std::span<const double> z2) const;

  /// out = Hess Phi*(z) v.
  void hessian_conj_apply(std::span<const double> z, std::span<const double> v,
                          std::span<double> out) const;
  Eigen::MatrixXd hessian_conj(std::span<const double> z) const;

 private:
  MirrorMap(MapKind kind, int d);
  void check(std::span<const double> v, const char* what) const;

  MapKind kind_;
  int dim_;
  Eigen::MatrixXd p_;
  Eigen::LLT<Eigen::MatrixXd> p_llt_;
  double mu_ = 1.0;
  double smooth_ = 1.0;
};

/// Applies forward/backward to every d-block of a stacked vector.
void forward_stacked(const MirrorMap& map, std::span<const double> x, std::span<double> z);
void backward_stacked(const MirrorMap& map, std::span<const double> z, std::span<double> x);

inline std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}
inline std::span<double> as_span(Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace dmd::mirror
