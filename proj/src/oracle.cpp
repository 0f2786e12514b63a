#include "dmd/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dmd/error.hpp"

namespace dmd::oracle {
namespace {

using mirror::as_span;

void softmax(const Eigen::VectorXd& z, Eigen::VectorXd& x) {
  const double m = z.maxCoeff();
  x = (z.array() - m).exp();
  x /= x.sum();
}

double simplex_kkt(const Eigen::VectorXd& x, const Eigen::VectorXd& g) {
  const double nu = x.dot(g);
  double res = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double r = g(j) - nu;
    res = std::max({res, x(j) * std::abs(r), -r});
  }
  return res;
}

}  // namespace

Eigen::VectorXd minimal_multiplier(const objectives::DistributedProblem& problem,
                                   const graph::LaplacianSpectra& spectra,
                                   const Eigen::VectorXd& x_star) {
  const int n = problem.particles();
  const Eigen::VectorXd stacked = x_star.replicate(n, 1);
  const Eigen::VectorXd g = problem.stacked_grad(stacked);
  return -graph::apply_block(spectra.pseudo_inverse, g, problem.dim());
}

OptimalPair solve_unconstrained(const objectives::DistributedProblem& problem,
                                const graph::WeightedGraph& graph) {
  if (graph.size() != problem.particles()) throw ValidationError("oracle: graph size differs from particle count");
  const Eigen::MatrixXd h = problem.aggregate_hessian();
  const Eigen::VectorXd rhs = problem.aggregate_rhs();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h, Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues().minCoeff();
  const double lmax = eig.eigenvalues().maxCoeff();
  if (!(lmin > 1e-12 * std::max(lmax, 1.0))) {
    throw NumericalError("oracle: aggregate Hessian sum Q_i^T Q_i is singular (lambda_min = " +
                         std::to_string(lmin) + "); the problem is not strongly convex");
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(h);
  if (llt.info() != Eigen::Success) throw NumericalError("oracle: Cholesky of the aggregate Hessian failed");
  OptimalPair opt;
  opt.x_star = llt.solve(rhs);
  opt.x_star += llt.solve(rhs - h * opt.x_star);

  const graph::LaplacianSpectra sp = graph::spectra(graph, 1.0);
  opt.lambda_star = minimal_multiplier(problem, sp, opt.x_star);
  opt.f_star = problem.aggregate_value(opt.x_star);
  const Eigen::VectorXd stacked = opt.x_star.replicate(problem.particles(), 1);
  const Eigen::VectorXd r =
      problem.stacked_grad(stacked) + graph.apply_laplacian(opt.lambda_star, problem.dim());
  opt.kkt_residual = r.norm();
  opt.interior = true;
  return opt;
}

OptimalPair solve_simplex(const objectives::DistributedProblem& problem,
                          const graph::WeightedGraph& graph, const SimplexOptions& options) {
  if (problem.domain() != objectives::Domain::Simplex) throw ValidationError("oracle: solve_simplex needs a simplex problem");
  if (graph.size() != problem.particles()) throw ValidationError("oracle: graph size differs from particle count");
  if (!(options.tol > 0.0) || options.max_iterations < 1) throw ValidationError("oracle: bad simplex options");
  const int d = problem.dim();
  const Eigen::MatrixXd h = problem.aggregate_hessian();
  const Eigen::VectorXd rhs = problem.aggregate_rhs();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h, Eigen::EigenvaluesOnly);
  const double lmax = eig.eigenvalues().maxCoeff();
  if (!(lmax > 0.0)) throw NumericalError("oracle: aggregate Hessian is zero");
  const double dt = 1.0 / lmax;

  Eigen::VectorXd z = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd x = Eigen::VectorXd::Constant(d, 1.0 / d);
  Eigen::VectorXd x_next(d);
  bool converged = false;
  for (long k = 0; k < options.max_iterations; ++k) {
    z -= dt * (h * x - rhs);
    z.array() -= z.maxCoeff();
    softmax(z, x_next);
    const double step = (x_next - x).norm();
    x.swap(x_next);
    if (step <= options.tol * dt) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw NumericalError("oracle: centralized mirror descent did not converge within " +
                         std::to_string(options.max_iterations) + " iterations");
  }

  OptimalPair opt;
  opt.x_star = x;
  const Eigen::VectorXd g = h * x - rhs;
  opt.kkt_residual = simplex_kkt(x, g);
  if (!(opt.kkt_residual <= 1e-6)) {
    throw NumericalError("oracle: simplex KKT check failed (residual " + std::to_string(opt.kkt_residual) + ")");
  }
  opt.interior = x.minCoeff() > 1e-8;
  opt.f_star = problem.aggregate_value(opt.x_star);
  const graph::LaplacianSpectra sp = graph::spectra(graph, 1.0);
  opt.lambda_star = minimal_multiplier(problem, sp, opt.x_star);
  return opt;
}

OptimalPair solve(const objectives::DistributedProblem& problem, const graph::WeightedGraph& graph) {
  return problem.domain() == objectives::Domain::Simplex ? solve_simplex(problem, graph)
                                                         : solve_unconstrained(problem, graph);
}

dynamics::RunResult centralized_md_baseline(const objectives::DistributedProblem& problem,
                                            const mirror::MirrorMap& map,
                                            const dynamics::Hyperparams& hp, std::uint64_t seed,
                                            const OptimalPair& opt, const Eigen::VectorXd& x0) {
  const objectives::DistributedProblem central = problem.centralized();
  const graph::WeightedGraph single = graph::WeightedGraph::metropolis(graph::EdgeSet{1, {}});
  const int d = problem.dim();
  const Eigen::VectorXd start = x0.size() == d ? x0 : Eigen::VectorXd(x0.head(d));
  dynamics::Integrator integ(dynamics::Algorithm::Ismd, central, map, single, nullptr, hp, seed);
  const diagnostics::MetricsEvaluator eval(central, map, single, opt.x_star,
                                           Eigen::VectorXd::Zero(d), nullptr, 1.0);
  return dynamics::run(integ, dynamics::initialize(map, 1, start),
                       [&](const dynamics::ParticleSystem& s) {
                         return eval(s.step, s.t, as_span(s.x), as_span(s.lambda));
                       });
}

}  // namespace dmd::oracle
