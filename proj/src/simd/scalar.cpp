#include <cmath>

#include "fedplat/simd/kernels.hpp"

namespace fedplat::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void axpby_scalar(double alpha, const double* x, double beta, double* y,
                  std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = alpha * x[i] + beta * y[i];
}

void axpy_diff_scalar(double alpha, const double* x, const double* z, double* y,
                      std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + alpha * (x[i] - z[i]);
}

void adam_update_scalar(double* w, const double* g, double* m, double* v,
                        std::size_t n, const AdamCoefficients& c) {
  const double one_minus_b1 = 1.0 - c.beta1;
  const double one_minus_b2 = 1.0 - c.beta2;
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = c.beta1 * m[i] + one_minus_b1 * g[i];
    v[i] = c.beta2 * v[i] + one_minus_b2 * (g[i] * g[i]);
    const double m_hat = m[i] / c.bias_correction1;
    const double v_hat = v[i] / c.bias_correction2;
    w[i] = w[i] - c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
}

}  // namespace

namespace detail {

const KernelTable& scalar_table() {
  static const KernelTable table{Isa::scalar,       dot_scalar,
                                 axpy_scalar,       axpby_scalar,
                                 axpy_diff_scalar,  adam_update_scalar};
  return table;
}

}  // namespace detail
}  // namespace fedplat::simd
