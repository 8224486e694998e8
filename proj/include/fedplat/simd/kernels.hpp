#pragma once

// Data-parallel f64 kernels behind the MLP and the aggregators.
//
// Every kernel has a scalar reference implementation. When the build enables
// it and the CPU reports support, an AVX2 variant is selected at first use.
// Element-wise kernels use no fused multiply-add, so both variants produce
// bit-identical results; only the reduction in dot() may differ in rounding.

#include <cstddef>
#include <span>
#include <string_view>

namespace fedplat::simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

struct AdamCoefficients {
  double learning_rate;
  double beta1;
  double beta2;
  double epsilon;
  double bias_correction1;  // 1 - beta1^t
  double bias_correction2;  // 1 - beta2^t
};

struct KernelTable {
  Isa isa;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y = alpha * x + beta * y
  void (*axpby)(double alpha, const double* x, double beta, double* y,
                std::size_t n);
  // y += alpha * (x - z)
  void (*axpy_diff)(double alpha, const double* x, const double* z, double* y,
                    std::size_t n);
  void (*adam_update)(double* w, const double* g, double* m, double* v,
                      std::size_t n, const AdamCoefficients& c);
};

bool isa_available(Isa isa);

// Table for a specific ISA; throws std::invalid_argument if unavailable.
const KernelTable& kernels_for(Isa isa);

// Active table. Honors FEDPLAT_SIMD=scalar|avx2 from the environment,
// otherwise picks the widest available ISA.
const KernelTable& kernels();

namespace detail {
const KernelTable& scalar_table();
const KernelTable* avx2_table();  // nullptr when not compiled in
}  // namespace detail

inline double dot(std::span<const double> a, std::span<const double> b) {
  return kernels().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  kernels().axpy(alpha, x.data(), y.data(), y.size());
}

inline void axpby(double alpha, std::span<const double> x, double beta,
                  std::span<double> y) {
  kernels().axpby(alpha, x.data(), beta, y.data(), y.size());
}

inline void axpy_diff(double alpha, std::span<const double> x,
                      std::span<const double> z, std::span<double> y) {
  kernels().axpy_diff(alpha, x.data(), z.data(), y.data(), y.size());
}

}  // namespace fedplat::simd
