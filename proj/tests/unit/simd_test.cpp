#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "fedplat/simd/kernels.hpp"

using namespace fedplat::simd;

namespace {

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> dist(0.0, 3.0);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("scalar table is always available") {
  CHECK(isa_available(Isa::scalar));
  CHECK(kernels_for(Isa::scalar).isa == Isa::scalar);
  CHECK(isa_name(kernels().isa).size() > 0);
}

TEST_CASE("scalar kernels on hand-checked inputs") {
  const auto& k = kernels_for(Isa::scalar);
  const std::vector<double> a{1, 2, 3};
  const std::vector<double> b{4, 5, 6};
  CHECK(k.dot(a.data(), b.data(), 3) == 32.0);

  std::vector<double> y{1, 1, 1};
  k.axpy(2.0, a.data(), y.data(), 3);
  CHECK(y == std::vector<double>{3, 5, 7});

  k.axpby(1.0, a.data(), -1.0, y.data(), 3);
  CHECK(y == std::vector<double>{-2, -3, -4});

  std::vector<double> z{0, 0, 0};
  k.axpy_diff(0.5, b.data(), a.data(), z.data(), 3);
  CHECK(z == std::vector<double>{1.5, 1.5, 1.5});
}

TEST_CASE("adam kernel first step matches the closed form") {
  // Constant gradient 1, lr 1e-3: m_hat = 1, v_hat = 1, step = lr / (1 + eps).
  const auto& k = kernels_for(Isa::scalar);
  double w = 0.0, g = 1.0, m = 0.0, v = 0.0;
  const AdamCoefficients c{1e-3, 0.9, 0.999, 1e-7, 1.0 - 0.9, 1.0 - 0.999};
  k.adam_update(&w, &g, &m, &v, 1, c);
  CHECK(w == doctest::Approx(-1e-3 / (1.0 + 1e-7)).epsilon(1e-12));
}

TEST_CASE("avx2 kernels match the scalar reference") {
  if (!isa_available(Isa::avx2)) {
    MESSAGE("AVX2 not available on this machine; equivalence test skipped");
    return;
  }
  const auto& ref = kernels_for(Isa::scalar);
  const auto& vec = kernels_for(Isa::avx2);
  std::mt19937_64 rng(1234);

  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 9u, 31u, 64u, 513u}) {
    CAPTURE(n);
    const auto x = random_vector(rng, n);
    const auto z = random_vector(rng, n);
    const auto y0 = random_vector(rng, n);

    // Reductions may reassociate: bound by the sum of |terms|.
    double magnitude = 0.0;
    for (std::size_t i = 0; i < n; ++i) magnitude += std::abs(x[i] * z[i]);
    CHECK(std::abs(ref.dot(x.data(), z.data(), n) - vec.dot(x.data(), z.data(), n)) <=
          1e-14 * (magnitude + 1.0));

    // Element-wise kernels are bit-identical.
    auto ya = y0, yb = y0;
    ref.axpy(0.37, x.data(), ya.data(), n);
    vec.axpy(0.37, x.data(), yb.data(), n);
    CHECK(same_bits(ya, yb));

    ya = y0, yb = y0;
    ref.axpby(-1.5, x.data(), 0.25, ya.data(), n);
    vec.axpby(-1.5, x.data(), 0.25, yb.data(), n);
    CHECK(same_bits(ya, yb));

    ya = y0, yb = y0;
    ref.axpy_diff(0.01, x.data(), z.data(), ya.data(), n);
    vec.axpy_diff(0.01, x.data(), z.data(), yb.data(), n);
    CHECK(same_bits(ya, yb));

    auto wa = y0, wb = y0;
    std::vector<double> ma(n, 0.0), mb(n, 0.0), va(n, 0.0), vb(n, 0.0);
    for (int t = 1; t <= 3; ++t) {
      const AdamCoefficients c{1e-3, 0.9, 0.999, 1e-7, 1.0 - std::pow(0.9, t),
                               1.0 - std::pow(0.999, t)};
      ref.adam_update(wa.data(), x.data(), ma.data(), va.data(), n, c);
      vec.adam_update(wb.data(), x.data(), mb.data(), vb.data(), n, c);
    }
    CHECK(same_bits(wa, wb));
    CHECK(same_bits(ma, mb));
    CHECK(same_bits(va, vb));
  }
}
