#include "dmd/harness/config.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

#include "dmd/error.hpp"
#include "dmd/harness/csv.hpp"
#include "json.hpp"

namespace dmd::harness {
namespace {

using Setter = std::function<void(RunConfig&, std::string_view, const std::filesystem::path&)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct Field {
  std::string key;
  Setter set;
  Getter get;
};

int to_int(std::string_view v, std::string_view key) {
  const long x = parse_long(v, key);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    throw ValidationError(std::string(key) + ": value out of range");
  }
  return static_cast<int>(x);
}

bool to_bool(std::string_view v, std::string_view key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ValidationError(std::string(key) + ": expected true|false, got '" + std::string(v) + "'");
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

std::string resolve(std::string_view v, const std::filesystem::path& base) {
  if (v.empty()) return {};
  std::filesystem::path p{std::string(v)};
  if (p.is_relative() && !base.empty()) p = base / p;
  return p.lexically_normal().string();
}

[[noreturn]] void bad_choice(std::string_view key, std::string_view v, std::string_view allowed) {
  throw ValidationError(std::string(key) + ": unknown value '" + std::string(v) + "' (expected " +
                        std::string(allowed) + ")");
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    auto add = [&](std::string key, Setter s, Getter g) {
      f.push_back({std::move(key), std::move(s), std::move(g)});
    };
    add("problem.d", [](RunConfig& c, std::string_view v, auto&) { c.problem.d = to_int(v, "problem.d"); },
        [](const RunConfig& c) { return std::to_string(c.problem.d); });
    add("problem.m", [](RunConfig& c, std::string_view v, auto&) { c.problem.m = to_int(v, "problem.m"); },
        [](const RunConfig& c) { return std::to_string(c.problem.m); });
    add("problem.condition_number",
        [](RunConfig& c, std::string_view v, auto&) {
          c.problem.condition_number = parse_double(v, "problem.condition_number");
        },
        [](const RunConfig& c) { return format_double(c.problem.condition_number); });
    add("problem.shared_minimizer",
        [](RunConfig& c, std::string_view v, auto&) {
          c.problem.shared_minimizer = to_bool(v, "problem.shared_minimizer");
        },
        [](const RunConfig& c) { return bool_text(c.problem.shared_minimizer); });
    add("problem.domain",
        [](RunConfig& c, std::string_view v, auto&) {
          if (v == "unconstrained") c.problem.domain = objectives::Domain::Unconstrained;
          else if (v == "simplex") c.problem.domain = objectives::Domain::Simplex;
          else bad_choice("problem.domain", v, "unconstrained|simplex");
        },
        [](const RunConfig& c) { return std::string(domain_name(c.problem.domain)); });
    add("problem.placement",
        [](RunConfig& c, std::string_view v, auto&) {
          if (v == "interior") c.problem.placement = objectives::OptimumPlacement::Interior;
          else if (v == "boundary") c.problem.placement = objectives::OptimumPlacement::Boundary;
          else bad_choice("problem.placement", v, "interior|boundary");
        },
        [](const RunConfig& c) {
          return std::string(c.problem.placement == objectives::OptimumPlacement::Interior ? "interior" : "boundary");
        });
    add("problem.bundle",
        [](RunConfig& c, std::string_view v, const std::filesystem::path& b) { c.problem.bundle = resolve(v, b); },
        [](const RunConfig& c) { return c.problem.bundle; });

    add("graph.topology",
        [](RunConfig& c, std::string_view v, auto&) {
          if (v == "cyclic") c.graph.topology = graph::TopologyKind::Cyclic;
          else if (v == "erdos_renyi") c.graph.topology = graph::TopologyKind::ErdosRenyi;
          else if (v == "barbell") c.graph.topology = graph::TopologyKind::Barbell;
          else bad_choice("graph.topology", v, "cyclic|erdos_renyi|barbell");
        },
        [](const RunConfig& c) { return std::string(topology_name(c.graph.topology)); });
    add("graph.particles",
        [](RunConfig& c, std::string_view v, auto&) { c.graph.particles = to_int(v, "graph.particles"); },
        [](const RunConfig& c) { return std::to_string(c.graph.particles); });
    add("graph.edge_prob",
        [](RunConfig& c, std::string_view v, auto&) { c.graph.edge_prob = parse_double(v, "graph.edge_prob"); },
        [](const RunConfig& c) { return format_double(c.graph.edge_prob); });
    add("graph.cluster_size",
        [](RunConfig& c, std::string_view v, auto&) { c.graph.cluster_size = to_int(v, "graph.cluster_size"); },
        [](const RunConfig& c) { return std::to_string(c.graph.cluster_size); });
    add("graph.beta",
        [](RunConfig& c, std::string_view v, auto&) { c.graph.beta = parse_double(v, "graph.beta"); },
        [](const RunConfig& c) { return format_double(c.graph.beta); });
    add("graph.weights",
        [](RunConfig& c, std::string_view v, const std::filesystem::path& b) { c.graph.weights = resolve(v, b); },
        [](const RunConfig& c) { return c.graph.weights; });

    add("algorithm.name",
        [](RunConfig& c, std::string_view v, auto&) {
          try {
            c.algorithm.name = dynamics::parse_algorithm(v);
          } catch (const ValidationError&) {
            bad_choice("algorithm.name", v, "ismd|eismd|epismd");
          }
        },
        [](const RunConfig& c) { return std::string(dynamics::algorithm_name(c.algorithm.name)); });
    add("algorithm.interaction_on",
        [](RunConfig& c, std::string_view v, auto&) {
          try {
            c.algorithm.interaction_on = dynamics::parse_operand(v);
          } catch (const ValidationError&) {
            bad_choice("algorithm.interaction_on", v, "x|z");
          }
        },
        [](const RunConfig& c) { return std::string(dynamics::operand_name(c.algorithm.interaction_on)); });
    add("algorithm.mirror_map",
        [](RunConfig& c, std::string_view v, auto&) {
          if (v == "euclidean") c.algorithm.mirror_map = mirror::MapKind::Euclidean;
          else if (v == "entropy") c.algorithm.mirror_map = mirror::MapKind::NegativeEntropy;
          else if (v == "quadratic") c.algorithm.mirror_map = mirror::MapKind::Quadratic;
          else bad_choice("algorithm.mirror_map", v, "euclidean|entropy|quadratic");
        },
        [](const RunConfig& c) {
          switch (c.algorithm.mirror_map) {
            case mirror::MapKind::Euclidean: return std::string("euclidean");
            case mirror::MapKind::NegativeEntropy: return std::string("entropy");
            case mirror::MapKind::Quadratic: return std::string("quadratic");
          }
          return std::string();
        });
    add("algorithm.mirror_matrix",
        [](RunConfig& c, std::string_view v, const std::filesystem::path& b) {
          c.algorithm.mirror_matrix = resolve(v, b);
        },
        [](const RunConfig& c) { return c.algorithm.mirror_matrix; });
    add("algorithm.dual",
        [](RunConfig& c, std::string_view v, auto&) {
          if (v == "identity") c.algorithm.dual = DualChoice::Identity;
          else if (v == "dual_hessian") c.algorithm.dual = DualChoice::DualHessian;
          else bad_choice("algorithm.dual", v, "identity|dual_hessian");
        },
        [](const RunConfig& c) { return std::string(dual_name(c.algorithm.dual)); });

    add("hyper.eta", [](RunConfig& c, std::string_view v, auto&) { c.hyper.eta = parse_double(v, "hyper.eta"); },
        [](const RunConfig& c) { return format_double(c.hyper.eta); });
    add("hyper.epsilon",
        [](RunConfig& c, std::string_view v, auto&) { c.hyper.epsilon = parse_double(v, "hyper.epsilon"); },
        [](const RunConfig& c) { return format_double(c.hyper.epsilon); });
    add("hyper.sigma",
        [](RunConfig& c, std::string_view v, auto&) { c.hyper.sigma = parse_double(v, "hyper.sigma"); },
        [](const RunConfig& c) { return format_double(c.hyper.sigma); });
    add("hyper.dt", [](RunConfig& c, std::string_view v, auto&) { c.hyper.dt = parse_double(v, "hyper.dt"); },
        [](const RunConfig& c) { return format_double(c.hyper.dt); });
    add("hyper.epochs",
        [](RunConfig& c, std::string_view v, auto&) { c.hyper.epochs = parse_long(v, "hyper.epochs"); },
        [](const RunConfig& c) { return std::to_string(c.hyper.epochs); });
    add("hyper.metrics_every",
        [](RunConfig& c, std::string_view v, auto&) { c.hyper.metrics_every = parse_long(v, "hyper.metrics_every"); },
        [](const RunConfig& c) { return std::to_string(c.hyper.metrics_every); });

    add("run.seed",
        [](RunConfig& c, std::string_view v, auto&) {
          const long s = parse_long(v, "run.seed");
          if (s < 0) throw ValidationError("run.seed must be >= 0");
          c.run.seed = static_cast<std::uint64_t>(s);
        },
        [](const RunConfig& c) { return std::to_string(c.run.seed); });
    add("run.output",
        [](RunConfig& c, std::string_view v, const std::filesystem::path& b) { c.run.output = resolve(v, b); },
        [](const RunConfig& c) { return c.run.output; });
    add("run.x0",
        [](RunConfig& c, std::string_view v, auto&) {
          c.run.x0.clear();
          if (v.empty() || v == "default") return;
          std::size_t start = 0;
          while (start <= v.size()) {
            auto pos = v.find(',', start);
            if (pos == std::string_view::npos) pos = v.size();
            c.run.x0.push_back(parse_double(v.substr(start, pos - start), "run.x0"));
            start = pos + 1;
          }
        },
        [](const RunConfig& c) {
          if (c.run.x0.empty()) return std::string("default");
          std::string s;
          for (std::size_t k = 0; k < c.run.x0.size(); ++k) {
            if (k > 0) s += ',';
            s += format_double(c.run.x0[k]);
          }
          return s;
        });
    add("run.lyapunov_c",
        [](RunConfig& c, std::string_view v, auto&) {
          if (v.empty() || v == "default") c.run.lyapunov_c.reset();
          else c.run.lyapunov_c = parse_double(v, "run.lyapunov_c");
        },
        [](const RunConfig& c) {
          return c.run.lyapunov_c ? format_double(*c.run.lyapunov_c) : std::string("default");
        });
    return f;
  }();
  return table;
}

const Field& find_field(std::string_view key) {
  for (const Field& f : fields()) {
    if (f.key == key) return f;
  }
  throw ValidationError("unknown config key '" + std::string(key) + "'");
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const Field& f : fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

void set_value(RunConfig& cfg, std::string_view key, std::string_view value,
               const std::filesystem::path& base) {
  find_field(key).set(cfg, value, base);
}

std::string get_value(const RunConfig& cfg, std::string_view key) { return find_field(key).get(cfg); }

void validate(const RunConfig& c) {
  const auto& p = c.problem;
  if (p.bundle.empty()) {
    if (p.d < 1) throw ValidationError("problem.d must be >= 1");
    if (p.m < 1) throw ValidationError("problem.m must be >= 1");
    if (!(p.condition_number >= 1.0)) throw ValidationError("problem.condition_number must be >= 1");
  }
  const auto& g = c.graph;
  if (g.particles < 1) throw ValidationError("graph.particles must be >= 1");
  if (!(g.beta > 0.0)) throw ValidationError("graph.beta must be > 0");
  if (g.weights.empty()) {
    if (g.topology == graph::TopologyKind::ErdosRenyi && !(g.edge_prob > 0.0 && g.edge_prob <= 1.0)) {
      throw ValidationError("graph.edge_prob must lie in (0, 1]");
    }
    if (g.topology == graph::TopologyKind::Barbell && g.particles != 2 * g.cluster_size) {
      throw ValidationError("graph.cluster_size: barbell needs graph.particles == 2 * graph.cluster_size");
    }
  }
  const auto& a = c.algorithm;
  const bool simplex = p.domain == objectives::Domain::Simplex;
  const bool entropy = a.mirror_map == mirror::MapKind::NegativeEntropy;
  if (simplex != entropy) {
    throw ValidationError("algorithm.mirror_map: the entropy map is required for, and only valid on, problem.domain = simplex");
  }
  if (a.mirror_map == mirror::MapKind::Quadratic && a.mirror_matrix.empty()) {
    throw ValidationError("algorithm.mirror_matrix is required for the quadratic map");
  }
  if (a.dual == DualChoice::DualHessian && a.name != dynamics::Algorithm::Epismd) {
    throw ValidationError("algorithm.dual: dual_hessian is only used by epismd");
  }
  if (c.run.lyapunov_c && !(*c.run.lyapunov_c > 0.0)) throw ValidationError("run.lyapunov_c must be > 0");
  if (c.run.output.empty()) throw ValidationError("run.output must not be empty");
  c.hyper.validate();
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ValidationError(std::string("config syntax error: ") + e.message() + " (line " +
                          std::to_string(e.line()) + ")");
  }
  RunConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ValidationError("config key '" + section + "' must live inside a [section]");
    }
    for (const auto& [key, value] : body) {
      set_value(cfg, section + "." + key, value.get_value<std::string>(), base);
    }
  }
  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("manifest " + path.string() + ": " + e.what());
    }
    if (!j.contains("config_text") || !j["config_text"].is_string()) {
      throw ValidationError("manifest " + path.string() + " has no config_text");
    }
    return parse_config(j["config_text"].get<std::string>(), path.parent_path());
  }
  return parse_config(text, path.parent_path());
}

std::string render_config(const RunConfig& cfg) {
  std::string out;
  std::string current;
  for (const Field& f : fields()) {
    const auto dot = f.key.find('.');
    const std::string section = f.key.substr(0, dot);
    if (section != current) {
      if (!current.empty()) out += '\n';
      out += "[" + section + "]\n";
      current = section;
    }
    out += f.key.substr(dot + 1) + " = " + f.get(cfg) + "\n";
  }
  return out;
}

std::string_view topology_name(graph::TopologyKind k) noexcept {
  switch (k) {
    case graph::TopologyKind::Cyclic:
      return "cyclic";
    case graph::TopologyKind::ErdosRenyi:
      return "erdos_renyi";
    case graph::TopologyKind::Barbell:
      return "barbell";
  }
  return "?";
}

std::string_view domain_name(objectives::Domain d) noexcept {
  return d == objectives::Domain::Simplex ? "simplex" : "unconstrained";
}

std::string_view dual_name(DualChoice d) noexcept {
  return d == DualChoice::Identity ? "identity" : "dual_hessian";
}

}  // namespace dmd::harness
