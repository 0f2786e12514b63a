#include "dmd/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dmd/error.hpp"
#include "dmd/simd/kernels.hpp"

namespace dmd::diagnostics {
namespace {

using mirror::as_span;

std::span<const double> block(std::span<const double> v, int i, int d) {
  return v.subspan(static_cast<std::size_t>(i) * static_cast<std::size_t>(d),
                   static_cast<std::size_t>(d));
}

Eigen::MatrixXd kron_identity(const Eigen::MatrixXd& m, int d) {
  const auto n = m.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n * d, n * d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      out.block(i * d, j * d, d, d).diagonal().setConstant(m(i, j));
    }
  }
  return out;
}

}  // namespace

ConvexityConstants convexity_constants(const objectives::DistributedProblem& problem,
                                       const mirror::MirrorMap& map,
                                       const graph::LaplacianSpectra& spectra,
                                       const mirror::DualPreconditioner* dual) {
  ConvexityConstants k;
  k.mu_phi = map.strong_convexity();
  k.l_phi = map.smoothness();
  const bool identity_dual = dual == nullptr || dual->kind() == mirror::DualKind::Identity;
  if (!identity_dual) {
    k.mu_psi = dual->strong_convexity();
    k.l_psi = dual->smoothness();
  }
  k.mu_f = std::numeric_limits<double>::infinity();
  k.l_f = 0.0;
  for (const Eigen::MatrixXd& h : problem.hessian_blocks()) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw NumericalError("convexity constants: eigensolver failed");
    k.mu_f = std::min(k.mu_f, std::max(eig.eigenvalues().minCoeff(), 0.0));
    k.l_f = std::max(k.l_f, eig.eigenvalues().maxCoeff());
  }
  k.alpha = k.l_f * k.l_phi / k.mu_phi;
  k.mu_hat = identity_dual ? std::min(k.mu_phi, 2.0) : std::min(k.mu_phi, k.mu_psi);
  k.kappa_n = spectra.kappa_n;
  k.kappa_beta_n = spectra.kappa_beta_n;
  k.rate_applicable = map.kind() != mirror::MapKind::NegativeEntropy;
  return k;
}

double default_c(const ConvexityConstants& k) {
  const double threshold = std::max({k.kappa_n / k.mu_phi, k.kappa_n / k.mu_psi,
                                     2.0 * k.kappa_beta_n / k.mu_psi});
  return 1.01 * threshold;
}

LyapunovValue lyapunov(std::span<const double> x, std::span<const double> lambda,
                       const objectives::DistributedProblem& problem,
                       const graph::WeightedGraph& graph, const Eigen::VectorXd& x_star,
                       const Eigen::VectorXd& lambda_star, const mirror::MirrorMap& map,
                       const mirror::DualPreconditioner* dual, double c) {
  const int n = problem.particles();
  const int d = problem.dim();
  const auto nd = static_cast<std::size_t>(n) * static_cast<std::size_t>(d);
  if (x.size() != nd || lambda.size() != nd || lambda_star.size() != static_cast<Eigen::Index>(nd) ||
      x_star.size() != d) {
    throw ValidationError("lyapunov: shape mismatch");
  }
  if (!(c > 0.0)) throw ValidationError("lyapunov: c must be > 0");

  LyapunovValue out;
  for (int i = 0; i < n; ++i) {
    out.V1 += map.bregman_clamped(as_span(x_star), block(x, i, d), &out.clamped);
  }

  Eigen::VectorXd dlam(static_cast<Eigen::Index>(nd));
  simd::sub(lambda, as_span(lambda_star), as_span(dlam));
  if (dual == nullptr || dual->kind() == mirror::DualKind::Identity) {
    out.V2 = 0.5 * dlam.squaredNorm();
  } else {
    out.V2 = dual->bregman(as_span(lambda_star), lambda);
  }

  // D_f(x, x*) for quadratics: 1/2 sum_i |Q_i (x^i - x*)|^2.
  Eigen::VectorXd dx(static_cast<Eigen::Index>(nd));
  double df = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      dx(i * d + j) = x[static_cast<std::size_t>(i * d + j)] - x_star(j);
    }
    df += 0.5 * (problem.block(i).q() * dx.segment(i * d, d)).squaredNorm();
  }
  const Eigen::VectorXd l_dlam = graph.apply_laplacian(dlam, d);
  Eigen::VectorXd lx(static_cast<Eigen::Index>(nd));
  graph.apply_laplacian(x, d, as_span(lx));
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(nd));
  out.V3 = df + dx.dot(l_dlam) + 0.5 * xv.dot(lx);
  out.V = c * (out.V1 + out.V2) + out.V3;
  return out;
}

double consensus_spread(const objectives::DistributedProblem& problem, std::span<const double> x) {
  const int n = problem.particles();
  const int d = problem.dim();
  if (x.size() != static_cast<std::size_t>(n * d)) throw ValidationError("consensus_spread: shape mismatch");
  if (n == 1) return 0.0;
  int best = 0;
  int worst = 0;
  double fb = problem.aggregate_value(block(x, 0, d));
  double fw = fb;
  for (int i = 1; i < n; ++i) {
    const double f = problem.aggregate_value(block(x, i, d));
    if (f < fb) {
      fb = f;
      best = i;
    }
    if (f > fw) {
      fw = f;
      worst = i;
    }
  }
  double s = 0.0;
  const auto xb = block(x, best, d);
  const auto xw = block(x, worst, d);
  for (int j = 0; j < d; ++j) {
    const double diff = xb[static_cast<std::size_t>(j)] - xw[static_cast<std::size_t>(j)];
    s += diff * diff;
  }
  return s;
}

double kkt_primal(const objectives::DistributedProblem& problem, const graph::WeightedGraph& graph,
                  std::span<const double> x, std::span<const double> lambda) {
  const int d = problem.dim();
  Eigen::VectorXd r(static_cast<Eigen::Index>(x.size()));
  problem.stacked_grad(x, as_span(r));
  Eigen::VectorXd ll(static_cast<Eigen::Index>(x.size()));
  graph.apply_laplacian(lambda, d, as_span(ll));
  r += ll;
  if (problem.domain() == objectives::Domain::Simplex) {
    for (int i = 0; i < problem.particles(); ++i) {
      auto seg = r.segment(i * d, d);
      seg.array() -= seg.mean();
    }
  }
  return r.norm();
}

KappaG kappa_g_estimate(const objectives::DistributedProblem& problem,
                        const graph::WeightedGraph& graph, const mirror::MirrorMap& map,
                        const std::vector<Eigen::VectorXd>& points) {
  const int n = problem.particles();
  const int d = problem.dim();
  const int nd = n * d;
  if (points.empty()) throw ValidationError("kappa_g: need at least one point");

  const Eigen::MatrixXd lk = kron_identity(graph.laplacian(), d);
  Eigen::MatrixXd a(nd, 2 * nd);
  a.leftCols(nd) = lk;
  for (int i = 0; i < n; ++i) a.block(i * d, i * d, d, d) += problem.block(i).hessian();
  a.rightCols(nd) = lk;

  KappaG out{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  for (const Eigen::VectorXd& x : points) {
    if (x.size() != nd) throw ValidationError("kappa_g: point must be a stacked N*d vector");
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(nd, nd);
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd zi = map.forward(Eigen::VectorXd(x.segment(i * d, d)));
      w.block(i * d, i * d, d, d) = map.hessian_conj(as_span(zi));
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> weig(w, Eigen::EigenvaluesOnly);
    if (weig.info() != Eigen::Success ||
        !(weig.eigenvalues().minCoeff() > 1e-12 * weig.eigenvalues().maxCoeff())) {
      throw NumericalError("kappa_g: weight Hess Phi*(z) is singular");
    }
    Eigen::MatrixXd gram = a.transpose() * w * a;
    gram = 0.5 * (gram + gram.transpose()).eval();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> full(gram, Eigen::EigenvaluesOnly);
    const Eigen::LLT<Eigen::MatrixXd> wl(w);
    const Eigen::MatrixXd cta = wl.matrixU() * a;  // C^T A with W = C C^T
    Eigen::MatrixXd row = cta * cta.transpose();
    row = 0.5 * (row + row.transpose()).eval();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> rows(row, Eigen::EigenvaluesOnly);
    if (full.info() != Eigen::Success || rows.info() != Eigen::Success) {
      throw NumericalError("kappa_g: eigensolver failed");
    }
    out.infimum = std::min(out.infimum, std::max(full.eigenvalues().minCoeff(), 0.0));
    out.row_space = std::min(out.row_space, std::max(rows.eigenvalues().minCoeff(), 0.0));
  }
  // Rounding noise from the rank-deficient Gram matrix.
  if (out.infimum < 1e-10 * std::max(1.0, out.row_space)) out.infimum = 0.0;
  return out;
}

double predicted_rate(const ConvexityConstants& k, double kappa_g, double c) {
  return 2.0 * kappa_g / (c * k.mu_hat + 2.0 * k.alpha + 3.0 * k.kappa_n);
}

RateFit rate_fit(std::span<const double> t, std::span<const double> v, double window) {
  if (t.size() != v.size()) throw ValidationError("rate_fit: t and V lengths differ");
  if (!(window > 0.0 && window <= 1.0)) throw ValidationError("rate_fit: window must lie in (0, 1]");
  if (t.size() < 10) throw ValidationError("rate_fit: need at least 10 points");

  RateFit fit;
  std::size_t count = std::max<std::size_t>(
      10, static_cast<std::size_t>(std::ceil(window * static_cast<double>(t.size()))));
  count = std::min(count, t.size());
  for (std::size_t k = 0; k < count; ++k) {
    if (!(v[k] > 0.0)) {
      count = k;
      fit.window_shrunk = true;
      break;
    }
  }
  if (count < 10) throw ValidationError("rate_fit: fewer than 10 positive points in the window");

  const double nn = static_cast<double>(count);
  double mt = 0.0;
  double my = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    mt += t[k];
    my += std::log(v[k]);
  }
  mt /= nn;
  my /= nn;
  double stt = 0.0;
  double sty = 0.0;
  double syy = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const double dt = t[k] - mt;
    const double dy = std::log(v[k]) - my;
    stt += dt * dt;
    sty += dt * dy;
    syy += dy * dy;
  }
  if (!(stt > 0.0)) throw ValidationError("rate_fit: times must not all coincide");
  const double slope = sty / stt;
  double ss_res = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const double e = std::log(v[k]) - (my + slope * (t[k] - mt));
    ss_res += e * e;
  }
  fit.r = -slope;
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  fit.points = count;
  return fit;
}

MetricsEvaluator::MetricsEvaluator(const objectives::DistributedProblem& problem,
                                   const mirror::MirrorMap& map, const graph::WeightedGraph& graph,
                                   Eigen::VectorXd x_star, Eigen::VectorXd lambda_star,
                                   const mirror::DualPreconditioner* dual, double c)
    : problem_(&problem),
      map_(&map),
      graph_(&graph),
      x_star_(std::move(x_star)),
      lambda_star_(std::move(lambda_star)),
      dual_(dual),
      c_(c) {}

MetricsRecord MetricsEvaluator::operator()(long step, double t, std::span<const double> x,
                                           std::span<const double> lambda) const {
  const int n = problem_->particles();
  const int d = problem_->dim();
  MetricsRecord rec;
  rec.step = step;
  rec.t = t;

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  rec.loss_best = std::numeric_limits<double>::infinity();
  rec.loss_worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const auto xi = block(x, i, d);
    simd::axpy(1.0 / n, xi, as_span(mean));
    const double f = problem_->aggregate_value(xi);
    rec.loss_best = std::min(rec.loss_best, f);
    rec.loss_worst = std::max(rec.loss_worst, f);
  }
  rec.loss_mean = problem_->aggregate_value(mean);
  rec.consensus_spread = consensus_spread(*problem_, x);
  rec.kkt_primal = kkt_primal(*problem_, *graph_, x, lambda);
  Eigen::VectorXd lx(static_cast<Eigen::Index>(x.size()));
  graph_->apply_laplacian(x, d, as_span(lx));
  rec.kkt_consensus = lx.norm();

  const LyapunovValue lv =
      lyapunov(x, lambda, *problem_, *graph_, x_star_, lambda_star_, *map_, dual_, c_);
  rec.V = lv.V;
  rec.V1 = lv.V1;
  rec.V2 = lv.V2;
  rec.V3 = lv.V3;
  rec.bregman_to_opt = lv.V1;
  rec.clamped = lv.clamped;
  return rec;
}

}  // namespace dmd::diagnostics
