#include <doctest.h>

#include <bit>
#include <cstdint>
#include <vector>

#include "dmd/dynamics.hpp"
#include "dmd/error.hpp"
#include "dmd/simd/kernels.hpp"
#include "support.hpp"

using namespace dmd;

namespace {

std::vector<double> random_values(test::TestRng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal() * std::exp(3.0 * rng.normal());
  return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (std::bit_cast<std::uint64_t>(a[k]) != std::bit_cast<std::uint64_t>(b[k])) return false;
  }
  return true;
}

struct BackendGuard {
  simd::Backend saved = simd::active_backend();
  ~BackendGuard() { simd::set_backend(saved); }
};

}  // namespace

TEST_CASE("scalar backend is always available and parses by name") {
  CHECK(simd::backend_available(simd::Backend::Scalar));
  CHECK(simd::parse_backend("scalar") == simd::Backend::Scalar);
  CHECK(simd::parse_backend("avx2") == simd::Backend::Avx2);
  CHECK_THROWS_AS(simd::parse_backend("neon"), ValidationError);
  CHECK(simd::backend_name(simd::Backend::Avx2) == "avx2");
}

TEST_CASE("elementwise kernels are bit-identical across backends") {
  if (!simd::backend_available(simd::Backend::Avx2)) {
    MESSAGE("AVX2 not available; skipping equivalence");
    return;
  }
  const simd::KernelTable& s = simd::scalar_kernels();
  const simd::KernelTable& v = simd::avx2_kernels();
  test::TestRng rng(7);
  for (std::size_t n = 0; n < 70; ++n) {
    const auto x = random_values(rng, n);
    const auto xj = random_values(rng, n);
    const auto y0 = random_values(rng, n);
    const double a = rng.normal();

    auto ys = y0, yv = y0;
    s.axpy(a, x.data(), ys.data(), n);
    v.axpy(a, x.data(), yv.data(), n);
    CHECK(same_bits(ys, yv));

    ys = y0, yv = y0;
    s.add_scaled_diff(a, x.data(), xj.data(), ys.data(), n);
    v.add_scaled_diff(a, x.data(), xj.data(), yv.data(), n);
    CHECK(same_bits(ys, yv));

    std::vector<double> os(n), ov(n);
    s.sub(x.data(), xj.data(), os.data(), n);
    v.sub(x.data(), xj.data(), ov.data(), n);
    CHECK(same_bits(os, ov));

    ys = y0, yv = y0;
    s.scale(a, ys.data(), n);
    v.scale(a, yv.data(), n);
    CHECK(same_bits(ys, yv));

    double mag = 0.0;
    for (std::size_t k = 0; k < n; ++k) mag += std::abs(x[k] * xj[k]);
    CHECK(std::abs(s.dot(x.data(), xj.data(), n) - v.dot(x.data(), xj.data(), n)) <= 1e-14 * mag);
  }
}

TEST_CASE("scalar kernels match plain loops") {
  const std::vector<double> x = {1.0, 2.0, 3.0};
  std::vector<double> y = {1.0, 1.0, 1.0};
  simd::scalar_kernels().axpy(2.0, x.data(), y.data(), 3);
  CHECK(y == std::vector<double>{3.0, 5.0, 7.0});
  simd::scalar_kernels().add_scaled_diff(0.5, x.data(), y.data(), y.data(), 3);
  CHECK(y == std::vector<double>{2.0, 3.5, 5.0});
  CHECK(simd::scalar_kernels().dot(x.data(), x.data(), 3) == 14.0);
}

TEST_CASE("dispatched trajectories are bit-identical across backends") {
  if (!simd::backend_available(simd::Backend::Avx2)) return;
  BackendGuard guard;
  const test::Instance inst = test::desk_instance(3);
  dynamics::Hyperparams hp;
  hp.sigma = 0.1;
  const auto x0 = dynamics::default_x0(inst.map, 10, 3);
  std::vector<Eigen::VectorXd> finals;
  for (simd::Backend b : {simd::Backend::Scalar, simd::Backend::Avx2}) {
    simd::set_backend(b);
    dynamics::Integrator integ(dynamics::Algorithm::Eismd, inst.problem, inst.map, inst.graph, nullptr, hp, 3);
    finals.push_back(test::integrate(integ, dynamics::initialize(inst.map, 10, x0), 300).z);
  }
  CHECK(same_bits(std::vector<double>(finals[0].begin(), finals[0].end()),
                  std::vector<double>(finals[1].begin(), finals[1].end())));
}
