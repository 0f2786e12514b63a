#pragma once

// Quantities the convergence analysis is phrased in: the primal-dual
// Lyapunov function, KKT residuals, consensus spread, spectral constants and
// an empirical exponential-rate fit.

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "dmd/dual_preconditioner.hpp"
#include "dmd/graph.hpp"
#include "dmd/mirror_map.hpp"
#include "dmd/objectives.hpp"

namespace dmd::diagnostics {

struct MetricsRecord {
  long step = 0;
  double t = 0.0;
  double loss_mean = 0.0;   // f at the particle mean
  double loss_best = 0.0;   // min_i f(x^i)
  double loss_worst = 0.0;  // max_i f(x^i)
  double consensus_spread = 0.0;
  double kkt_primal = 0.0;     // |grad f(x) + L lambda|
  double kkt_consensus = 0.0;  // |L x|
  double V = 0.0;
  double V1 = 0.0;
  double V2 = 0.0;
  double V3 = 0.0;
  double bregman_to_opt = 0.0;  // sum_i D_Phi(x*, x^i)
  bool clamped = false;         // a boundary optimum needed the clamped-log convention
};

struct ConvexityConstants {
  double mu_phi = 1.0;
  double l_phi = 1.0;
  double mu_psi = 1.0;
  double l_psi = 1.0;
  double mu_f = 0.0;  // min_i lambda_min(Q_i^T Q_i)
  double l_f = 0.0;   // max_i lambda_max(Q_i^T Q_i)
  double alpha = 0.0; // L_f L_Phi / mu_Phi
  double mu_hat = 1.0;
  double kappa_n = 0.0;
  double kappa_beta_n = 0.0;
  /// False for the entropy map: relative constants are not available, so
  /// predicted rates are skipped.
  bool rate_applicable = true;
};

/// `dual` may be null (identity). mu_hat = min(mu_Phi, 2) for the identity
/// dual map and min(mu_Phi, mu_Psi) otherwise.
ConvexityConstants convexity_constants(const objectives::DistributedProblem& problem,
                                       const mirror::MirrorMap& map,
                                       const graph::LaplacianSpectra& spectra,
                                       const mirror::DualPreconditioner* dual);

/// 1.01 * max(kappa_N / mu_Phi, kappa_N / mu_Psi, 2 kappa_{beta,N} / mu_Psi).
double default_c(const ConvexityConstants& constants);

struct LyapunovValue {
  double V = 0.0;
  double V1 = 0.0;
  double V2 = 0.0;
  double V3 = 0.0;
  bool clamped = false;
};

/// V = c (V1 + V2) + V3 with
///   V1 = sum_i D_Phi(x*, x^i),
///   V2 = 1/2 |lambda - lambda*|^2, or D_Psi(lambda*, lambda) for a non-identity dual,
///   V3 = D_f(x, x*) + <x - x*, L (lambda - lambda*)> + 1/2 <x, L x>.
/// `x_star` is a single d-vector; `lambda_star` is stacked.
LyapunovValue lyapunov(std::span<const double> x, std::span<const double> lambda,
                       const objectives::DistributedProblem& problem,
                       const graph::WeightedGraph& graph, const Eigen::VectorXd& x_star,
                       const Eigen::VectorXd& lambda_star, const mirror::MirrorMap& map,
                       const mirror::DualPreconditioner* dual, double c);

/// |x^b - x^w|^2 where b / w minimize / maximize f(x^i) (first index on ties).
double consensus_spread(const objectives::DistributedProblem& problem, std::span<const double> x);

/// |grad f(x) + L lambda|; simplex problems drop the normal-cone component
/// (each block is projected onto the simplex tangent space first).
double kkt_primal(const objectives::DistributedProblem& problem, const graph::WeightedGraph& graph,
                  std::span<const double> x, std::span<const double> lambda);

struct KappaG {
  /// min over points of lambda_min(A^T W A) over the full (d_x, d_lambda)
  /// space. A = [Hess f + L, L] has more columns than rows, so this is 0 up
  /// to rounding.
  double infimum = 0.0;
  /// min over points of the smallest nonzero generalized singular value
  /// squared, lambda_min(W^{1/2} A A^T W^{1/2}).
  double row_space = 0.0;
};

/// `points` are stacked primal states; W = Hess Phi*(grad Phi(x)) blockwise.
/// Throws NumericalError when W is singular (entropy map).
KappaG kappa_g_estimate(const objectives::DistributedProblem& problem,
                        const graph::WeightedGraph& graph, const mirror::MirrorMap& map,
                        const std::vector<Eigen::VectorXd>& points);

/// 2 kappa_g / (c mu_hat + 2 alpha + 3 kappa_N).
double predicted_rate(const ConvexityConstants& constants, double kappa_g, double c);

struct RateFit {
  double r = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
  bool window_shrunk = false;
};

/// Least-squares slope of log V against t over the leading `window` fraction
/// of the series; r = -slope. Nonpositive V inside the window shrinks it to
/// the positive prefix. Needs >= 10 points.
RateFit rate_fit(std::span<const double> t, std::span<const double> v, double window);

/// Turns particle states into MetricsRecords against a fixed optimum.
class MetricsEvaluator {
 public:
  MetricsEvaluator(const objectives::DistributedProblem& problem, const mirror::MirrorMap& map,
                   const graph::WeightedGraph& graph, Eigen::VectorXd x_star,
                   Eigen::VectorXd lambda_star, const mirror::DualPreconditioner* dual, double c);

  MetricsRecord operator()(long step, double t, std::span<const double> x,
                           std::span<const double> lambda) const;

  double c() const noexcept { return c_; }

 private:
  const objectives::DistributedProblem* problem_;
  const mirror::MirrorMap* map_;
  const graph::WeightedGraph* graph_;
  Eigen::VectorXd x_star_;
  Eigen::VectorXd lambda_star_;
  const mirror::DualPreconditioner* dual_;
  double c_;
};

}  // namespace dmd::diagnostics
