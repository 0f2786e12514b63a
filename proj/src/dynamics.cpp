#include "dmd/dynamics.hpp"

#include <cmath>
#include <string>

#include "dmd/simd/kernels.hpp"

namespace dmd::dynamics {
namespace {

using mirror::as_span;

constexpr std::uint32_t kInitStream = 0x494E4954;

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

}  // namespace

std::string_view algorithm_name(Algorithm a) noexcept {
  switch (a) {
    case Algorithm::Ismd:
      return "ismd";
    case Algorithm::Eismd:
      return "eismd";
    case Algorithm::Epismd:
      return "epismd";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "ismd" || name == "ISMD") return Algorithm::Ismd;
  if (name == "eismd" || name == "EISMD") return Algorithm::Eismd;
  if (name == "epismd" || name == "EPISMD") return Algorithm::Epismd;
  throw ValidationError("unknown algorithm '" + std::string(name) + "' (expected ismd|eismd|epismd)");
}

std::string_view operand_name(InteractionOperand op) noexcept {
  return op == InteractionOperand::X ? "x" : "z";
}

InteractionOperand parse_operand(std::string_view name) {
  if (name == "x") return InteractionOperand::X;
  if (name == "z") return InteractionOperand::Z;
  throw ValidationError("unknown interaction operand '" + std::string(name) + "' (expected x|z)");
}

void Hyperparams::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ValidationError("hyper.eta must be > 0");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ValidationError("hyper.epsilon must be > 0");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ValidationError("hyper.sigma must be >= 0");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("hyper.dt must be > 0");
  if (epochs < 0) throw ValidationError("hyper.epochs must be >= 0");
  if (metrics_every < 1) throw ValidationError("hyper.metrics_every must be >= 1");
}

ParticleSystem initialize(const mirror::MirrorMap& map, int n, const Eigen::VectorXd& x0) {
  const int d = map.dim();
  if (n < 1) throw ValidationError("initialize: need at least one particle");
  ParticleSystem s;
  s.n = n;
  s.d = d;
  const Eigen::Index nd = static_cast<Eigen::Index>(n) * d;
  if (x0.size() == d) {
    s.x = x0.replicate(n, 1);
  } else if (x0.size() == nd) {
    s.x = x0;
  } else {
    throw ValidationError("initialize: x0 must have d or N*d entries");
  }
  s.z.resize(nd);
  mirror::forward_stacked(map, as_span(s.x), as_span(s.z));
  // Round trip so that x = grad Phi*(z) holds exactly from the first step on.
  mirror::backward_stacked(map, as_span(s.z), as_span(s.x));
  s.lambda = Eigen::VectorXd::Zero(nd);
  s.mu = Eigen::VectorXd::Zero(nd);
  return s;
}

Eigen::VectorXd default_x0(const mirror::MirrorMap& map, int n, std::uint64_t seed) {
  const int d = map.dim();
  if (map.kind() == mirror::MapKind::NegativeEntropy) {
    return Eigen::VectorXd::Constant(d, 1.0 / d);
  }
  const rng::CounterRng gen(seed, kInitStream);
  Eigen::VectorXd x(static_cast<Eigen::Index>(n) * d);
  for (Eigen::Index k = 0; k < x.size(); ++k) x(k) = gen.normal(static_cast<std::uint64_t>(k));
  return x;
}

IntegrationDiverged::IntegrationDiverged(long step, std::vector<diagnostics::MetricsRecord> records)
    : NumericalError("integration diverged: non-finite state at step " + std::to_string(step)),
      step_(step),
      records_(std::move(records)) {}

Integrator::Integrator(Algorithm algorithm, const objectives::DistributedProblem& problem,
                       const mirror::MirrorMap& map, const graph::WeightedGraph& graph,
                       const mirror::DualPreconditioner* dual, const Hyperparams& hp,
                       std::uint64_t seed, InteractionOperand operand)
    : algorithm_(algorithm),
      problem_(&problem),
      map_(&map),
      graph_(&graph),
      dual_(dual),
      hp_(hp),
      noise_(seed),
      operand_(operand),
      n_(problem.particles()),
      d_(problem.dim()) {
  hp_.validate();
  if (map.dim() != d_) throw ValidationError("integrator: mirror map dimension differs from problem");
  if (graph.size() != n_) throw ValidationError("integrator: graph size differs from particle count");
  if (dual_ != nullptr && (dual_->particles() != n_ || dual_->dim() != d_)) {
    throw ValidationError("integrator: dual preconditioner shape differs from problem");
  }
  const Eigen::Index nd = static_cast<Eigen::Index>(n_) * d_;
  for (Eigen::VectorXd* v : {&grad_, &coupling_, &lap_lambda_, &lap_x_, &drift_, &z_next_, &x_next_,
                             &aux_next_, &lambda_next_}) {
    v->setZero(nd);
  }
}

void Integrator::step(ParticleSystem& s) {
  const Eigen::Index nd = static_cast<Eigen::Index>(n_) * d_;
  if (s.n != n_ || s.d != d_ || s.z.size() != nd || s.x.size() != nd || s.lambda.size() != nd ||
      s.mu.size() != nd) {
    throw ValidationError("step: state shape does not match the integrator");
  }
  const double dt = hp_.dt;

  problem_->stacked_grad(as_span(s.x), as_span(grad_));
  const bool exact = algorithm_ != Algorithm::Ismd;
  const Eigen::VectorXd& operand =
      (!exact || operand_ == InteractionOperand::Z) ? s.z : s.x;
  graph_->apply_laplacian(as_span(operand), d_, as_span(coupling_));

  drift_ = grad_;
  simd::scale(hp_.eta, as_span(drift_));
  simd::axpy(hp_.epsilon, as_span(coupling_), as_span(drift_));
  if (exact) {
    graph_->apply_laplacian(as_span(s.lambda), d_, as_span(lap_lambda_));
    simd::axpy(1.0, as_span(lap_lambda_), as_span(drift_));
  }

  z_next_ = s.z;
  simd::axpy(-dt, as_span(drift_), as_span(z_next_));
  if (hp_.sigma > 0.0) {
    const double scale = hp_.sigma * std::sqrt(dt);
    for (int i = 0; i < n_; ++i) {
      auto out = as_span(coupling_).subspan(static_cast<std::size_t>(i) * d_, static_cast<std::size_t>(d_));
      noise_.fill(static_cast<std::uint64_t>(s.step), static_cast<std::uint32_t>(i), scale, out);
    }
    simd::axpy(1.0, as_span(coupling_), as_span(z_next_));
  }
  mirror::backward_stacked(*map_, as_span(z_next_), as_span(x_next_));

  if (exact) {
    graph_->apply_laplacian(as_span(s.x), d_, as_span(lap_x_));
    if (algorithm_ == Algorithm::Eismd) {
      lambda_next_ = s.lambda;
      simd::axpy(dt, as_span(lap_x_), as_span(lambda_next_));
    } else {
      aux_next_ = s.mu;
      simd::axpy(dt, as_span(lap_x_), as_span(aux_next_));
      if (dual_ == nullptr || dual_->kind() == mirror::DualKind::Identity) {
        lambda_next_ = aux_next_;
      } else {
        dual_->backward(as_span(aux_next_), as_span(lambda_next_));
      }
    }
  }

  if (!all_finite(z_next_) || !all_finite(x_next_) || (exact && !all_finite(lambda_next_)) ||
      (algorithm_ == Algorithm::Epismd && !all_finite(aux_next_))) {
    throw IntegrationDiverged(s.step + 1, {});
  }
  s.z.swap(z_next_);
  s.x.swap(x_next_);
  if (exact) s.lambda.swap(lambda_next_);
  if (algorithm_ == Algorithm::Epismd) s.mu.swap(aux_next_);
  ++s.step;
  s.t = static_cast<double>(s.step) * dt;
}

ParticleSystem ismd_step(const ParticleSystem& s, const objectives::DistributedProblem& problem,
                         const mirror::MirrorMap& map, const graph::WeightedGraph& graph,
                         const Hyperparams& hp, std::uint64_t seed) {
  Integrator integ(Algorithm::Ismd, problem, map, graph, nullptr, hp, seed);
  ParticleSystem next = s;
  integ.step(next);
  return next;
}

ParticleSystem eismd_step(const ParticleSystem& s, const objectives::DistributedProblem& problem,
                          const mirror::MirrorMap& map, const graph::WeightedGraph& graph,
                          const Hyperparams& hp, std::uint64_t seed, InteractionOperand operand) {
  Integrator integ(Algorithm::Eismd, problem, map, graph, nullptr, hp, seed, operand);
  ParticleSystem next = s;
  integ.step(next);
  return next;
}

ParticleSystem epismd_step(const ParticleSystem& s, const objectives::DistributedProblem& problem,
                           const mirror::MirrorMap& map, const mirror::DualPreconditioner& dual,
                           const graph::WeightedGraph& graph, const Hyperparams& hp,
                           std::uint64_t seed, InteractionOperand operand) {
  Integrator integ(Algorithm::Epismd, problem, map, graph, &dual, hp, seed, operand);
  ParticleSystem next = s;
  integ.step(next);
  return next;
}

RunResult run(Integrator& integrator, ParticleSystem initial, const Probe& probe,
              const Observer& observer) {
  const Hyperparams& hp = integrator.hyperparams();
  RunResult result;
  result.final_state = std::move(initial);
  ParticleSystem& s = result.final_state;
  const long start = s.step;
  const long end = start + hp.epochs;
  if (observer) observer(s);
  if (probe) result.records.push_back(probe(s));
  while (s.step < end) {
    try {
      integrator.step(s);
    } catch (const IntegrationDiverged& e) {
      throw IntegrationDiverged(e.step(), std::move(result.records));
    }
    if (observer) observer(s);
    const long done = s.step - start;
    if (probe && (done % hp.metrics_every == 0 || s.step == end)) {
      result.records.push_back(probe(s));
    }
  }
  return result;
}

}  // namespace dmd::dynamics
