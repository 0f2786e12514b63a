#include "dmd/harness/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <ostream>
#include <set>

#include "dmd/error.hpp"
#include "dmd/harness/csv.hpp"
#include "dmd/harness/problem_io.hpp"
#include "dmd/simd/kernels.hpp"
#include "json.hpp"

namespace dmd::harness {
namespace {

using json = nlohmann::ordered_json;
using mirror::as_span;

// Beyond this stacked size the dense kappa_g eigenproblems are skipped.
constexpr int kKappaGMaxStacked = 1200;

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const dynamics::IntegrationDiverged& e) {
    err << "error: " << e.what() << "\n";
    if (!e.records().empty()) err << "last finite metrics: " << metrics_row(e.records().back()) << "\n";
    return kDiverged;
  } catch (const ValidationError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const DomainError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "i/o error: " << e.what() << "\n";
    return kIoError;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kDiverged;
  }
}

RunConfig load_with_overrides(const std::filesystem::path& path, const CommonOptions& opts) {
  RunConfig cfg = load_config(path);
  if (opts.seed) cfg.run.seed = *opts.seed;
  if (opts.out) cfg.run.output = *opts.out;
  validate(cfg);
  return cfg;
}

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

json num_or_null(std::optional<double> v) { return v ? json(*v) : json(nullptr); }

void remove_quietly(const std::filesystem::path& p) {
  std::error_code ec;
  std::filesystem::remove(p, ec);
}

/// Writes metrics.csv and manifest.json into `dir`; neither survives a failure.
void write_run_dir(const std::filesystem::path& dir, const std::string& csv, const std::string& manifest) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string());
  const auto metrics = dir / "metrics.csv";
  const auto man = dir / "manifest.json";
  try {
    write_file_atomic(metrics, csv);
    write_file_atomic(man, manifest);
  } catch (...) {
    remove_quietly(metrics);
    remove_quietly(man);
    throw;
  }
}

double tail_mean_v(const std::vector<diagnostics::MetricsRecord>& records, long epochs) {
  const double cutoff = 0.8 * static_cast<double>(epochs);
  double s = 0.0;
  int count = 0;
  for (const auto& r : records) {
    if (static_cast<double>(r.step) >= cutoff) {
      s += r.V;
      ++count;
    }
  }
  return count > 0 ? s / count : records.back().V;
}

}  // namespace

objectives::DistributedProblem build_problem(const RunConfig& cfg) {
  if (!cfg.problem.bundle.empty()) {
    objectives::DistributedProblem p = read_bundle(cfg.problem.bundle);
    if (p.particles() != cfg.graph.particles) {
      throw ValidationError("graph.particles (" + std::to_string(cfg.graph.particles) +
                            ") differs from the bundle's particle count (" +
                            std::to_string(p.particles()) + ")");
    }
    if (p.domain() != cfg.problem.domain) throw ValidationError("problem.domain differs from the bundle's domain");
    return p;
  }
  objectives::GeneratorConfig g;
  g.seed = cfg.run.seed;
  g.d = cfg.problem.d;
  g.m = cfg.problem.m;
  g.n = cfg.graph.particles;
  g.condition_number = cfg.problem.condition_number;
  g.shared_minimizer = cfg.problem.shared_minimizer;
  g.domain = cfg.problem.domain;
  g.placement = cfg.problem.placement;
  return objectives::generate_problem(g).problem;
}

graph::WeightedGraph build_graph(const RunConfig& cfg) {
  if (!cfg.graph.weights.empty()) {
    const Eigen::MatrixXd a = parse_matrix_csv(read_file(cfg.graph.weights), "graph.weights");
    if (a.rows() != cfg.graph.particles || a.cols() != cfg.graph.particles) {
      throw ValidationError("graph.weights: matrix must be graph.particles x graph.particles");
    }
    return graph::WeightedGraph::from_weights(a);
  }
  graph::Topology t;
  t.kind = cfg.graph.topology;
  t.n = cfg.graph.particles;
  t.edge_prob = cfg.graph.edge_prob;
  t.cluster_size = cfg.graph.cluster_size;
  t.seed = cfg.run.seed;
  return graph::WeightedGraph::metropolis(graph::build_topology(t));
}

Experiment build_experiment(const RunConfig& cfg) {
  validate(cfg);
  objectives::DistributedProblem problem = build_problem(cfg);
  const int n = problem.particles();
  const int d = problem.dim();
  graph::WeightedGraph g = build_graph(cfg);
  graph::LaplacianSpectra sp = graph::spectra(g, cfg.graph.beta);

  mirror::MirrorMap map = mirror::MirrorMap::euclidean(d);
  if (cfg.algorithm.mirror_map == mirror::MapKind::NegativeEntropy) {
    map = mirror::MirrorMap::entropy(d);
  } else if (cfg.algorithm.mirror_map == mirror::MapKind::Quadratic) {
    const Eigen::MatrixXd p = parse_matrix_csv(read_file(cfg.algorithm.mirror_matrix), "algorithm.mirror_matrix");
    if (p.rows() != d || p.cols() != d) throw ValidationError("algorithm.mirror_matrix must be d x d");
    map = mirror::MirrorMap::quadratic(p);
  }

  std::optional<mirror::DualPreconditioner> dual;
  if (cfg.algorithm.dual == DualChoice::DualHessian) {
    dual = mirror::DualPreconditioner::regularized_dual_hessian(sp, problem.hessian_blocks());
  }

  oracle::OptimalPair opt = oracle::solve(problem, g);
  const mirror::DualPreconditioner* dp = dual ? &*dual : nullptr;
  diagnostics::ConvexityConstants k = diagnostics::convexity_constants(problem, map, sp, dp);
  const double c = cfg.run.lyapunov_c ? *cfg.run.lyapunov_c : diagnostics::default_c(k);

  Eigen::VectorXd x0;
  if (cfg.run.x0.empty()) {
    x0 = dynamics::default_x0(map, n, cfg.run.seed);
  } else {
    x0 = Eigen::Map<const Eigen::VectorXd>(cfg.run.x0.data(), static_cast<Eigen::Index>(cfg.run.x0.size()));
    if (x0.size() != d && x0.size() != static_cast<Eigen::Index>(n) * d) {
      throw ValidationError("run.x0 must have d or graph.particles * d entries");
    }
  }
  if (x0.size() == d) x0 = x0.replicate(n, 1).eval();

  std::optional<diagnostics::KappaG> kg;
  std::optional<double> rate;
  if (k.rate_applicable && n * d <= kKappaGMaxStacked) {
    kg = diagnostics::kappa_g_estimate(problem, g, map, {x0, opt.x_star.replicate(n, 1)});
    rate = diagnostics::predicted_rate(k, kg->row_space, c);
  }

  return Experiment{cfg,  std::move(problem), std::move(g), std::move(sp), std::move(map),
                    std::move(dual), std::move(opt), k, c, kg, rate, std::move(x0)};
}

RunOutput execute(const Experiment& ex) {
  const auto& cfg = ex.config;
  const mirror::DualPreconditioner* dp = ex.dual_ptr();
  dynamics::Integrator integ(cfg.algorithm.name, ex.problem, ex.map, ex.graph, dp, cfg.hyper,
                             cfg.run.seed, cfg.algorithm.interaction_on);
  const diagnostics::MetricsEvaluator eval(ex.problem, ex.map, ex.graph, ex.opt.x_star,
                                           ex.opt.lambda_star, dp, ex.c);
  const auto start = std::chrono::steady_clock::now();
  RunOutput out;
  out.result = dynamics::run(integ, dynamics::initialize(ex.map, ex.problem.particles(), ex.x0),
                             [&](const dynamics::ParticleSystem& s) {
                               return eval(s.step, s.t, as_span(s.x), as_span(s.lambda));
                             });
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

std::string manifest_json(const Experiment& ex, const std::vector<diagnostics::MetricsRecord>& records,
                          double wall_seconds, long diverged_at) {
  json j;
  j["version"] = kVersion;
  j["csv_schema"] = kCsvSchemaVersion;
  json cfg = json::object();
  for (const std::string& key : config_keys()) {
    const auto dot = key.find('.');
    cfg[key.substr(0, dot)][key.substr(dot + 1)] = get_value(ex.config, key);
  }
  j["config"] = cfg;
  j["config_text"] = render_config(ex.config);
  j["problem_hash"] = problem_hash(ex.problem);

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> agg(ex.problem.aggregate_hessian(), Eigen::EigenvaluesOnly);
  j["oracle"] = {{"x_star", vec_json(ex.opt.x_star)},
                 {"f_star", ex.opt.f_star},
                 {"kkt_residual", ex.opt.kkt_residual},
                 {"interior", ex.opt.interior},
                 {"lambda_star_norm", ex.opt.lambda_star.norm()}};
  const auto& k = ex.constants;
  j["constants"] = {{"kappa_n", k.kappa_n},
                    {"kappa_beta_n", k.kappa_beta_n},
                    {"algebraic_connectivity", ex.spectra.algebraic_connectivity},
                    {"mu_phi", k.mu_phi},
                    {"l_phi", std::isfinite(k.l_phi) ? json(k.l_phi) : json(nullptr)},
                    {"mu_psi", k.mu_psi},
                    {"l_psi", k.l_psi},
                    {"mu_f", k.mu_f},
                    {"l_f", k.l_f},
                    {"aggregate_hessian_min", agg.eigenvalues().minCoeff()},
                    {"aggregate_hessian_max", agg.eigenvalues().maxCoeff()},
                    {"alpha", std::isfinite(k.alpha) ? json(k.alpha) : json(nullptr)},
                    {"mu_hat", k.mu_hat}};
  j["c"] = ex.c;
  if (ex.kappa_g) {
    j["kappa_g"] = {{"infimum", ex.kappa_g->infimum}, {"row_space", ex.kappa_g->row_space}};
  } else {
    j["kappa_g"] = nullptr;
  }
  j["predicted_rate"] = num_or_null(ex.predicted_rate);
  j["records"] = records.size();
  // The CSV schema is fixed, so records that needed the clamped-log convention are listed here.
  json clamped = json::array();
  for (const auto& r : records) {
    if (r.clamped) clamped.push_back(r.step);
  }
  j["clamped_steps"] = clamped;
  j["diverged_at"] = diverged_at >= 0 ? json(diverged_at) : json(nullptr);
  j["simd_backend"] = std::string(simd::backend_name(simd::active_backend()));
  j["wall_clock_seconds"] = wall_seconds;
  return j.dump(2) + "\n";
}

int cmd_run(const std::filesystem::path& config, const CommonOptions& opts, std::ostream& out,
            std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = load_with_overrides(config, opts);
    const Experiment ex = build_experiment(cfg);
    const std::filesystem::path dir = cfg.run.output;
    RunOutput ro;
    try {
      ro = execute(ex);
    } catch (const dynamics::IntegrationDiverged&) {
      remove_quietly(dir / "metrics.csv");
      remove_quietly(dir / "manifest.json");
      throw;
    }
    write_run_dir(dir, metrics_csv(ro.result.records), manifest_json(ex, ro.result.records, ro.wall_seconds));
    if (!opts.quiet) {
      const auto& last = ro.result.records.back();
      out << "run complete: " << ro.result.records.size() << " records in " << dir.string() << "\n"
          << "final step " << last.step << ": kkt_primal " << format_double(last.kkt_primal)
          << ", kkt_consensus " << format_double(last.kkt_consensus) << ", V " << format_double(last.V)
          << "\n";
    }
    return static_cast<int>(kOk);
  });
}

int cmd_compare(const std::vector<std::filesystem::path>& configs, const CommonOptions& opts,
                std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (configs.size() < 2) throw ValidationError("compare needs at least two configs");
    std::vector<RunConfig> cfgs;
    for (const auto& p : configs) {
      CommonOptions o = opts;
      o.out.reset();
      cfgs.push_back(load_with_overrides(p, o));
    }
    for (std::size_t k = 1; k < cfgs.size(); ++k) {
      if (cfgs[k].hyper.dt != cfgs[0].hyper.dt) throw ValidationError("compare: hyper.dt differs between configs");
      if (cfgs[k].hyper.epochs != cfgs[0].hyper.epochs) throw ValidationError("compare: hyper.epochs differs between configs");
    }
    std::vector<std::string> labels;
    std::set<std::string> used;
    for (const auto& p : configs) {
      std::string label = p.stem().string();
      for (int k = 2; used.count(label) > 0; ++k) label = p.stem().string() + "#" + std::to_string(k);
      used.insert(label);
      labels.push_back(label);
    }
    std::string csv = metrics_header(true) + "\n";
    for (std::size_t k = 0; k < cfgs.size(); ++k) {
      const Experiment ex = build_experiment(cfgs[k]);
      const RunOutput ro = execute(ex);
      for (const auto& r : ro.result.records) csv += metrics_row(r, labels[k]) + "\n";
    }
    const std::filesystem::path dir = opts.out ? *opts.out : cfgs[0].run.output;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string());
    write_file_atomic(dir / "compare.csv", csv);
    if (!opts.quiet) out << "wrote " << (dir / "compare.csv").string() << "\n";
    return static_cast<int>(kOk);
  });
}

int cmd_sweep(const std::filesystem::path& config, const std::string& param,
              const std::vector<std::string>& values, int jobs, const CommonOptions& opts,
              std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig base = load_with_overrides(config, opts);
    if (values.empty()) throw ValidationError("sweep: empty value list");
    if (std::find(config_keys().begin(), config_keys().end(), param) == config_keys().end()) {
      throw ValidationError("sweep: unknown parameter path '" + param + "'");
    }
    if (param == "run.output") throw ValidationError("sweep: run.output cannot be swept");
    if (jobs < 1) throw ValidationError("sweep: --jobs must be >= 1");
    const std::filesystem::path root = base.run.output;

    std::vector<RunConfig> cfgs;
    for (const std::string& v : values) {
      RunConfig c = base;
      set_value(c, param, v, config.parent_path());
      c.run.output = (root / (param + "=" + v)).string();
      validate(c);
      cfgs.push_back(c);
    }

    struct Outcome {
      std::vector<diagnostics::MetricsRecord> records;
      long diverged_at = -1;
      std::string error;
    };
    auto one = [](const RunConfig& c) {
      Outcome o;
      const Experiment ex = build_experiment(c);
      try {
        RunOutput ro = execute(ex);
        write_run_dir(c.run.output, metrics_csv(ro.result.records),
                      manifest_json(ex, ro.result.records, ro.wall_seconds));
        o.records = std::move(ro.result.records);
      } catch (const dynamics::IntegrationDiverged& e) {
        o.diverged_at = e.step();
        o.records = e.records();
        o.error = e.what();
      }
      return o;
    };

    std::vector<Outcome> outcomes(cfgs.size());
    for (std::size_t startk = 0; startk < cfgs.size(); startk += static_cast<std::size_t>(jobs)) {
      const std::size_t stop = std::min(cfgs.size(), startk + static_cast<std::size_t>(jobs));
      std::vector<std::future<Outcome>> futs;
      for (std::size_t k = startk; k < stop; ++k) {
        futs.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred, one, std::cref(cfgs[k])));
      }
      for (std::size_t k = startk; k < stop; ++k) outcomes[k] = futs[k - startk].get();
    }

    std::string summary =
        "value,status,final_step,loss_mean,consensus_spread,kkt_primal,kkt_consensus,V,tail_V,rate,rate_r2\n";
    bool any_diverged = false;
    for (std::size_t k = 0; k < cfgs.size(); ++k) {
      const Outcome& o = outcomes[k];
      summary += values[k];
      if (o.diverged_at >= 0 || o.records.empty()) {
        any_diverged = true;
        summary += ",diverged," + std::to_string(o.diverged_at) + ",,,,,,,,\n";
        if (!opts.quiet) err << param << "=" << values[k] << ": " << o.error << "\n";
        continue;
      }
      const auto& last = o.records.back();
      std::string rate = ",";
      std::vector<double> t;
      std::vector<double> v;
      for (const auto& r : o.records) {
        t.push_back(r.t);
        v.push_back(r.V);
      }
      try {
        const auto fit = diagnostics::rate_fit(t, v, 0.3);
        rate = format_double(fit.r) + "," + format_double(fit.r_squared);
      } catch (const ValidationError&) {
      }
      summary += ",ok," + std::to_string(last.step) + "," + format_double(last.loss_mean) + "," +
                 format_double(last.consensus_spread) + "," + format_double(last.kkt_primal) + "," +
                 format_double(last.kkt_consensus) + "," + format_double(last.V) + "," +
                 format_double(tail_mean_v(o.records, cfgs[k].hyper.epochs)) + "," + rate + "\n";
    }
    std::error_code ec;
    std::filesystem::create_directories(root, ec);
    if (ec) throw IoError("cannot create output directory " + root.string());
    write_file_atomic(root / "summary.csv", summary);
    if (!opts.quiet) out << "wrote " << (root / "summary.csv").string() << "\n";
    return static_cast<int>(any_diverged ? kDiverged : kOk);
  });
}

int cmd_graph_info(const std::filesystem::path& config, const CommonOptions& opts, std::ostream& out,
                   std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = load_with_overrides(config, opts);
    const graph::WeightedGraph g = build_graph(cfg);
    const graph::LaplacianSpectra sp = graph::spectra(g, cfg.graph.beta);
    if (g.size() == 1) err << "warning: single particle, the Laplacian is zero and consensus is trivial\n";
    out << "particles " << g.size() << "\n"
        << "edges " << g.edge_count() << "\n"
        << "eigenvalue_min " << format_double(sp.eigenvalues.minCoeff()) << "\n"
        << "eigenvalue_max " << format_double(sp.eigenvalues.maxCoeff()) << "\n"
        << "kappa_N " << format_double(sp.kappa_n) << "\n"
        << "beta " << format_double(sp.beta) << "\n"
        << "kappa_beta_N " << format_double(sp.kappa_beta_n) << "\n"
        << "algebraic_connectivity " << format_double(sp.algebraic_connectivity) << "\n";
    return static_cast<int>(kOk);
  });
}

int cmd_problem_gen(const std::filesystem::path& config, const CommonOptions& opts,
                    std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = load_with_overrides(config, opts);
    const objectives::DistributedProblem p = build_problem(cfg);
    write_bundle(cfg.run.output, p);
    if (!opts.quiet) out << "wrote bundle " << cfg.run.output << " (hash " << problem_hash(p) << ")\n";
    return static_cast<int>(kOk);
  });
}

int cmd_oracle(const std::filesystem::path& config, const CommonOptions& opts, std::ostream& out,
               std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = load_with_overrides(config, opts);
    const objectives::DistributedProblem p = build_problem(cfg);
    const graph::WeightedGraph g = build_graph(cfg);
    const oracle::OptimalPair opt = oracle::solve(p, g);
    out << "x_star";
    for (Eigen::Index k = 0; k < opt.x_star.size(); ++k) out << " " << format_double(opt.x_star(k));
    out << "\n"
        << "f_star " << format_double(opt.f_star) << "\n"
        << "kkt_residual " << format_double(opt.kkt_residual) << "\n"
        << "interior " << (opt.interior ? "true" : "false") << "\n"
        << "lambda_star_norm " << format_double(opt.lambda_star.norm()) << "\n";
    return static_cast<int>(kOk);
  });
}

}  // namespace dmd::harness
