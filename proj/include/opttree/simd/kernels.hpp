#pragma once

// Data-parallel kernels over probability vectors.
//
// Every kernel has a portable scalar reference and, where the target supports
// it, a vectorized variant chosen once at runtime. Variants are required to be
// bit-identical: reductions accumulate into four interleaved partial sums
// (element i goes to lane i % 4) and finish as (s0 + s1) + (s2 + s3), which is
// exactly the lane layout of a 256-bit double register. Decoding output thus
// never depends on which variant the host CPU selected.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace opttree::simd {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);

struct KernelTable {
  Isa isa;
  double (*sum)(const double* x, std::size_t n);
  // Index of the first maximal element; 0 for empty input.
  std::size_t (*argmax)(const double* x, std::size_t n);
  double (*min_value)(const double* x, std::size_t n);
  // out[i] = x[i] * factor
  void (*scale)(const double* x, std::size_t n, double factor, double* out);
  // x[i] = x[i] / divisor
  void (*divide)(double* x, std::size_t n, double divisor);
  // out[i] = a * x[i] + b * y[i], evaluated as two products and one add.
  void (*mix)(double a, const double* x, double b, const double* y,
              std::size_t n, double* out);
  // sum |x[i] - y[i]|
  double (*l1_distance)(const double* x, const double* y, std::size_t n);
};

const KernelTable& scalar_kernels();

// nullptr when the variant is not compiled in or the CPU lacks the feature.
const KernelTable* kernels_for(Isa isa);

// Variants usable on this host, scalar first.
std::vector<Isa> available_isas();

// The table used by the library. Chosen on first call: OPTTREE_SIMD=scalar or
// OPTTREE_SIMD=avx2 in the environment forces a variant, otherwise the widest
// supported one wins.
const KernelTable& active_kernels();

inline double sum(std::span<const double> x) {
  return active_kernels().sum(x.data(), x.size());
}

inline std::size_t argmax(std::span<const double> x) {
  return active_kernels().argmax(x.data(), x.size());
}

inline double min_value(std::span<const double> x) {
  return active_kernels().min_value(x.data(), x.size());
}

inline void scale(std::span<const double> x, double factor,
                  std::span<double> out) {
  active_kernels().scale(x.data(), x.size(), factor, out.data());
}

inline void divide(std::span<double> x, double divisor) {
  active_kernels().divide(x.data(), x.size(), divisor);
}

inline void mix(double a, std::span<const double> x, double b,
                std::span<const double> y, std::span<double> out) {
  active_kernels().mix(a, x.data(), b, y.data(), x.size(), out.data());
}

inline double l1_distance(std::span<const double> x,
                          std::span<const double> y) {
  return active_kernels().l1_distance(x.data(), y.data(), x.size());
}

}  // namespace opttree::simd
