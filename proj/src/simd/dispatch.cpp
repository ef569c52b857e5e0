#include <cstdlib>
#include <string>

#include "kernels_internal.hpp"

namespace opttree::simd {

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

const KernelTable* kernels_for(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return &scalar_kernels();
    case Isa::kAvx2:
#if defined(OPTTREE_HAVE_AVX2)
      if (__builtin_cpu_supports("avx2")) return &avx2_kernels();
#endif
      return nullptr;
  }
  return nullptr;
}

std::vector<Isa> available_isas() {
  std::vector<Isa> out;
  for (Isa isa : {Isa::kScalar, Isa::kAvx2}) {
    if (kernels_for(isa) != nullptr) out.push_back(isa);
  }
  return out;
}

namespace {

const KernelTable& select_kernels() {
  if (const char* forced = std::getenv("OPTTREE_SIMD")) {
    const std::string want(forced);
    for (Isa isa : available_isas()) {
      if (isa_name(isa) == want) return *kernels_for(isa);
    }
  }
  const auto isas = available_isas();
  return *kernels_for(isas.back());
}

}  // namespace

const KernelTable& active_kernels() {
  static const KernelTable& table = select_kernels();
  return table;
}

}  // namespace opttree::simd
