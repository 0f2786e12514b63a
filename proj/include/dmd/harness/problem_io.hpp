#pragma once

// Problem bundles on disk: problem.manifest (JSON) plus Q_i.csv / b_i.csv per particle.

#include <filesystem>
#include <string>

#include "dmd/objectives.hpp"

namespace dmd::harness {

void write_bundle(const std::filesystem::path& dir, const objectives::DistributedProblem& problem);
objectives::DistributedProblem read_bundle(const std::filesystem::path& dir);

/// FNV-1a over the dimensions, domain and every Q_i, b_i entry (hex string).
std::string problem_hash(const objectives::DistributedProblem& problem);

}  // namespace dmd::harness
