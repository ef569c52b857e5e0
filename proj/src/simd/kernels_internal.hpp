#pragma once

#include "opttree/simd/kernels.hpp"

namespace opttree::simd {

#if defined(OPTTREE_HAVE_AVX2)
const KernelTable& avx2_kernels();
#endif

}  // namespace opttree::simd
