#include <arm_neon.h>

#include "sparse_lpv/kernels.hpp"

namespace sparse_lpv::kernels {
namespace {

double dot_neon(const double* x, const double* y, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(x + k), vld1q_f64(y + k));
    acc1 = vfmaq_f64(acc1, vld1q_f64(x + k + 2), vld1q_f64(y + k + 2));
  }
  double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; k < n; ++k) acc += x[k] * y[k];
  return acc;
}

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(a);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) vst1q_f64(y + k, vfmaq_f64(vld1q_f64(y + k), va, vld1q_f64(x + k)));
  for (; k < n; ++k) y[k] += a * x[k];
}

// No hardware gather on NEON; two lanes are loaded by hand.
double gather_dot_neon(const double* values, const std::int32_t* index, const double* base,
                       std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    float64x2_t g = vdupq_n_f64(base[index[k]]);
    g = vsetq_lane_f64(base[index[k + 1]], g, 1);
    acc = vfmaq_f64(acc, vld1q_f64(values + k), g);
  }
  double out = vaddvq_f64(acc);
  for (; k < n; ++k) out += values[k] * base[index[k]];
  return out;
}

}  // namespace

const KernelTable& neon_table_impl() {
  static const KernelTable table{Isa::kNeon, &dot_neon, &axpy_neon, &gather_dot_neon};
  return table;
}

}  // namespace sparse_lpv::kernels
