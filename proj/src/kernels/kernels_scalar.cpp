#include "sparse_lpv/kernels.hpp"

namespace sparse_lpv::kernels {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) acc += x[k] * y[k];
  return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) y[k] += a * x[k];
}

double gather_dot_scalar(const double* values, const std::int32_t* index, const double* base,
                         std::size_t n) {
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) acc += values[k] * base[index[k]];
  return acc;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{Isa::kScalar, &dot_scalar, &axpy_scalar, &gather_dot_scalar};
  return table;
}

}  // namespace sparse_lpv::kernels
