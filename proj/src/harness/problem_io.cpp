#include "dmd/harness/problem_io.hpp"

#include <cstdint>
#include <cstring>
#include <cstdio>

#include "dmd/error.hpp"
#include "dmd/harness/csv.hpp"
#include "json.hpp"

namespace dmd::harness {
namespace {

constexpr int kBundleVersion = 1;

std::string block_name(const char* prefix, int i) {
  return std::string(prefix) + "_" + std::to_string(i) + ".csv";
}

struct Fnv1a {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t k = 0; k < n; ++k) {
      h ^= b[k];
      h *= 0x100000001b3ULL;
    }
  }
  void value(std::int64_t v) { bytes(&v, sizeof v); }
  void value(double v) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    bytes(&bits, sizeof bits);
  }
};

}  // namespace

void write_bundle(const std::filesystem::path& dir, const objectives::DistributedProblem& problem) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string());
  for (int i = 0; i < problem.particles(); ++i) {
    const auto& b = problem.block(i);
    write_file_atomic(dir / block_name("Q", i), matrix_csv(b.q()));
    write_file_atomic(dir / block_name("b", i), matrix_csv(b.b()));
  }
  nlohmann::json j;
  j["version"] = kBundleVersion;
  j["particles"] = problem.particles();
  j["dim"] = problem.dim();
  j["rows"] = problem.rows();
  j["domain"] = problem.domain() == objectives::Domain::Simplex ? "simplex" : "unconstrained";
  j["hash"] = problem_hash(problem);
  write_file_atomic(dir / "problem.manifest", j.dump(2) + "\n");
}

objectives::DistributedProblem read_bundle(const std::filesystem::path& dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(dir / "problem.manifest"));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("problem bundle " + dir.string() + ": bad problem.manifest: " + e.what());
  }
  int n = 0;
  int d = 0;
  int m = 0;
  std::string domain;
  try {
    n = j.at("particles").get<int>();
    d = j.at("dim").get<int>();
    m = j.at("rows").get<int>();
    domain = j.at("domain").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("problem bundle " + dir.string() + ": " + e.what());
  }
  if (n < 1 || d < 1 || m < 1) throw ValidationError("problem bundle: nonpositive dimensions");
  if (domain != "simplex" && domain != "unconstrained") throw ValidationError("problem bundle: unknown domain '" + domain + "'");
  std::vector<objectives::QuadraticBlock> blocks;
  for (int i = 0; i < n; ++i) {
    const Eigen::MatrixXd q = parse_matrix_csv(read_file(dir / block_name("Q", i)), block_name("Q", i));
    const Eigen::MatrixXd b = parse_matrix_csv(read_file(dir / block_name("b", i)), block_name("b", i));
    if (q.rows() != m || q.cols() != d || b.rows() != m || b.cols() != 1) {
      throw ValidationError("problem bundle: block " + std::to_string(i) + " has the wrong shape");
    }
    blocks.emplace_back(q, Eigen::VectorXd(b.col(0)));
  }
  return objectives::DistributedProblem(std::move(blocks), domain == "simplex"
                                                               ? objectives::Domain::Simplex
                                                               : objectives::Domain::Unconstrained);
}

std::string problem_hash(const objectives::DistributedProblem& problem) {
  Fnv1a h;
  h.value(static_cast<std::int64_t>(problem.particles()));
  h.value(static_cast<std::int64_t>(problem.dim()));
  h.value(static_cast<std::int64_t>(problem.rows()));
  h.value(static_cast<std::int64_t>(problem.domain() == objectives::Domain::Simplex));
  for (const auto& b : problem.blocks()) {
    for (Eigen::Index j = 0; j < b.q().cols(); ++j) {
      for (Eigen::Index i = 0; i < b.q().rows(); ++i) h.value(b.q()(i, j));
    }
    for (Eigen::Index i = 0; i < b.b().size(); ++i) h.value(b.b()(i));
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h.h));
  return buf;
}

}  // namespace dmd::harness
