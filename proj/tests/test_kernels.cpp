#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "opttree/oracle.hpp"
#include "opttree/simd/kernels.hpp"

using namespace opttree;
using opttree::simd::Isa;
using opttree::simd::KernelTable;

namespace {

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

std::vector<double> random_vector(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform() * std::pow(10.0, static_cast<double>(rng.next() % 7) - 3.0);
  return v;
}

}  // namespace

TEST_CASE("scalar reference values") {
  const KernelTable& k = simd::scalar_kernels();
  const double x[] = {0.1, 0.7, 0.2, 0.7, 0.05};
  CHECK(k.argmax(x, 5) == 1);
  CHECK(k.min_value(x, 5) == 0.05);
  CHECK(k.sum(x, 0) == 0.0);
  CHECK(k.argmax(x, 0) == 0);
  // (0.1 + 0.05) + 0.7 + (0.2 + 0.7) in lane order
  CHECK(k.sum(x, 5) == ((0.1 + 0.05) + 0.7) + (0.2 + 0.7));
  const double y[] = {0.0, 1.0, 0.0, 0.0, 0.0};
  CHECK(k.l1_distance(x, y, 5) == doctest::Approx(0.1 + 0.3 + 0.2 + 0.7 + 0.05));
}

TEST_CASE("scalar variant is always available and listed first") {
  const auto isas = simd::available_isas();
  REQUIRE_FALSE(isas.empty());
  CHECK(isas.front() == Isa::kScalar);
  CHECK(simd::kernels_for(Isa::kScalar) == &simd::scalar_kernels());
}

TEST_CASE("every available variant matches the scalar reference bit for bit") {
  const KernelTable& ref = simd::scalar_kernels();
  Rng rng(42);
  for (Isa isa : simd::available_isas()) {
    CAPTURE(simd::isa_name(isa));
    const KernelTable& k = *simd::kernels_for(isa);
    for (std::size_t n = 0; n < 70; ++n) {
      CAPTURE(n);
      for (int trial = 0; trial < 20; ++trial) {
        auto x = random_vector(rng, n);
        auto y = random_vector(rng, n);
        if (n > 3 && trial % 3 == 0) x[n / 2] = x[n - 1] = 5e3;  // repeated max

        CHECK(same_bits(k.sum(x.data(), n), ref.sum(x.data(), n)));
        CHECK(k.argmax(x.data(), n) == ref.argmax(x.data(), n));
        CHECK(same_bits(k.min_value(x.data(), n), ref.min_value(x.data(), n)));
        CHECK(same_bits(k.l1_distance(x.data(), y.data(), n),
                        ref.l1_distance(x.data(), y.data(), n)));

        const double f = rng.uniform();
        std::vector<double> a(n), b(n);
        k.scale(x.data(), n, f, a.data());
        ref.scale(x.data(), n, f, b.data());
        for (std::size_t i = 0; i < n; ++i) CHECK(same_bits(a[i], b[i]));

        k.mix(f, x.data(), 1.0 - f, y.data(), n, a.data());
        ref.mix(f, x.data(), 1.0 - f, y.data(), n, b.data());
        for (std::size_t i = 0; i < n; ++i) CHECK(same_bits(a[i], b[i]));

        a = x;
        b = x;
        k.divide(a.data(), n, 3.0 + f);
        ref.divide(b.data(), n, 3.0 + f);
        for (std::size_t i = 0; i < n; ++i) CHECK(same_bits(a[i], b[i]));
      }
    }
  }
}

TEST_CASE("mix endpoints reproduce an input exactly") {
  Rng rng(3);
  for (Isa isa : simd::available_isas()) {
    const KernelTable& k = *simd::kernels_for(isa);
    const auto x = random_vector(rng, 37);
    const auto y = random_vector(rng, 37);
    std::vector<double> out(37);
    k.mix(1.0, x.data(), 0.0, y.data(), 37, out.data());
    CHECK(out == x);
    k.mix(0.0, x.data(), 1.0, y.data(), 37, out.data());
    CHECK(out == y);
  }
}

TEST_CASE("argmax breaks ties toward the lowest index") {
  for (Isa isa : simd::available_isas()) {
    const KernelTable& k = *simd::kernels_for(isa);
    std::vector<double> v(23, 0.25);
    CHECK(k.argmax(v.data(), v.size()) == 0);
    v[9] = 0.5;
    v[17] = 0.5;
    CHECK(k.argmax(v.data(), v.size()) == 9);
  }
}
