#pragma once

// Data-parallel inner loops of the integrator and diagnostics.
//
// Every kernel has a scalar reference implementation and an AVX2 variant.
// The active variant is chosen once at startup from CPUID (override with
// DMD_SIMD=scalar|avx2 or set_backend()). Elementwise kernels never fuse
// multiply and add, so both variants produce identical bits; `dot` is a
// reduction and may differ in the last ulps between variants.

#include <cstddef>
#include <span>
#include <string_view>

namespace dmd::simd {

enum class Backend { Scalar, Avx2 };

bool backend_available(Backend b) noexcept;
Backend active_backend() noexcept;
/// Throws dmd::ValidationError if the CPU does not support `b`.
void set_backend(Backend b);
std::string_view backend_name(Backend b) noexcept;
/// Parses "scalar" / "avx2"; throws dmd::ValidationError otherwise.
Backend parse_backend(std::string_view name);

// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);
// out += w * (xi - xj)
void add_scaled_diff(double w, std::span<const double> xi, std::span<const double> xj,
                     std::span<double> out);
// out = a - b
void sub(std::span<const double> a, std::span<const double> b, std::span<double> out);
// x *= a
void scale(double a, std::span<double> x);
double dot(std::span<const double> x, std::span<const double> y);

/// Raw per-backend entry points, exposed for equivalence testing.
struct KernelTable {
  void (*axpy)(double, const double*, double*, std::size_t);
  void (*add_scaled_diff)(double, const double*, const double*, double*, std::size_t);
  void (*sub)(const double*, const double*, double*, std::size_t);
  void (*scale)(double, double*, std::size_t);
  double (*dot)(const double*, const double*, std::size_t);
};

const KernelTable& scalar_kernels() noexcept;
/// Only callable when backend_available(Backend::Avx2).
const KernelTable& avx2_kernels() noexcept;

}  // namespace dmd::simd
