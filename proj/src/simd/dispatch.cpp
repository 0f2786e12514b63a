#include <atomic>
#include <cstdlib>
#include <string>

#include "dmd/error.hpp"
#include "dmd/simd/kernels.hpp"

namespace dmd::simd {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Backend initial_backend() noexcept {
  if (const char* env = std::getenv("DMD_SIMD")) {
    const std::string_view v{env};
    if (v == "scalar") return Backend::Scalar;
    if (v == "avx2" && cpu_has_avx2()) return Backend::Avx2;
  }
  return cpu_has_avx2() ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<const KernelTable*>& table_slot() noexcept {
  static std::atomic<const KernelTable*> slot{
      initial_backend() == Backend::Avx2 ? &avx2_kernels() : &scalar_kernels()};
  return slot;
}

const KernelTable& active() noexcept { return *table_slot().load(std::memory_order_relaxed); }

}  // namespace

bool backend_available(Backend b) noexcept {
  return b == Backend::Scalar || (b == Backend::Avx2 && cpu_has_avx2());
}

Backend active_backend() noexcept {
  return &active() == &scalar_kernels() ? Backend::Scalar : Backend::Avx2;
}

void set_backend(Backend b) {
  if (!backend_available(b)) {
    throw ValidationError("SIMD backend '" + std::string(backend_name(b)) +
                          "' not supported on this CPU");
  }
  table_slot().store(b == Backend::Avx2 ? &avx2_kernels() : &scalar_kernels());
}

std::string_view backend_name(Backend b) noexcept {
  return b == Backend::Avx2 ? "avx2" : "scalar";
}

Backend parse_backend(std::string_view name) {
  if (name == "scalar") return Backend::Scalar;
  if (name == "avx2") return Backend::Avx2;
  throw ValidationError("unknown SIMD backend '" + std::string(name) + "'");
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw ValidationError("axpy: size mismatch");
  active().axpy(a, x.data(), y.data(), x.size());
}

void add_scaled_diff(double w, std::span<const double> xi, std::span<const double> xj,
                     std::span<double> out) {
  if (xi.size() != out.size() || xj.size() != out.size()) {
    throw ValidationError("add_scaled_diff: size mismatch");
  }
  active().add_scaled_diff(w, xi.data(), xj.data(), out.data(), out.size());
}

void sub(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  if (a.size() != out.size() || b.size() != out.size()) throw ValidationError("sub: size mismatch");
  active().sub(a.data(), b.data(), out.data(), out.size());
}

void scale(double a, std::span<double> x) { active().scale(a, x.data(), x.size()); }

double dot(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ValidationError("dot: size mismatch");
  return active().dot(x.data(), y.data(), x.size());
}

}  // namespace dmd::simd
