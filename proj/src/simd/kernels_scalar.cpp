#include <cmath>

#include "opttree/simd/kernels.hpp"

namespace opttree::simd {
namespace {

double sum_scalar(const double* x, std::size_t n) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) lane[i % 4] += x[i];
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

std::size_t argmax_scalar(const double* x, std::size_t n) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (x[i] > x[best]) best = i;
  }
  return best;
}

double min_scalar(const double* x, std::size_t n) {
  if (n == 0) return 0.0;
  double m = x[0];
  for (std::size_t i = 1; i < n; ++i) m = x[i] < m ? x[i] : m;
  return m;
}

void scale_scalar(const double* x, std::size_t n, double factor, double* out) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * factor;
}

void divide_scalar(double* x, std::size_t n, double divisor) {
  for (std::size_t i = 0; i < n; ++i) x[i] = x[i] / divisor;
}

void mix_scalar(double a, const double* x, double b, const double* y,
                std::size_t n, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double ax = a * x[i];
    const double by = b * y[i];
    out[i] = ax + by;
  }
}

double l1_scalar(const double* x, const double* y, std::size_t n) {
  double lane[4] = {0.0, 0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) lane[i % 4] += std::fabs(x[i] - y[i]);
  return (lane[0] + lane[1]) + (lane[2] + lane[3]);
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{
      Isa::kScalar, sum_scalar,   argmax_scalar, min_scalar,
      scale_scalar, divide_scalar, mix_scalar,    l1_scalar,
  };
  return table;
}

}  // namespace opttree::simd
