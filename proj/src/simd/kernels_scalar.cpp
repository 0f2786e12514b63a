#include "dmd/simd/kernels.hpp"

namespace dmd::simd {
namespace {

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) y[k] += a * x[k];
}

void add_scaled_diff_scalar(double w, const double* xi, const double* xj, double* out,
                            std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) out[k] += w * (xi[k] - xj[k]);
}

void sub_scalar(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) out[k] = a[k] - b[k];
}

void scale_scalar(double a, double* x, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) x[k] *= a;
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += x[k] * y[k];
  return s;
}

}  // namespace

const KernelTable& scalar_kernels() noexcept {
  static const KernelTable table{axpy_scalar, add_scaled_diff_scalar, sub_scalar, scale_scalar,
                                 dot_scalar};
  return table;
}

}  // namespace dmd::simd
