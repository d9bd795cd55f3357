#pragma once

// Data-parallel inner loops used by the interior-point solver.
//
// Every kernel has a portable scalar reference implementation. Vector
// variants (AVX2+FMA on x86-64, NEON on AArch64) are compiled into separate
// translation units and chosen once at startup from the CPU feature set.
// Setting SPARSE_LPV_SIMD=scalar|avx2|neon forces a particular table.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace sparse_lpv::kernels {

enum class Isa { kScalar, kAvx2, kNeon };

std::string_view isa_name(Isa isa);

struct KernelTable {
  Isa isa;
  // sum_k x[k] * y[k]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y[k] += a * x[k]
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // sum_k values[k] * base[index[k]]
  double (*gather_dot)(const double* values, const std::int32_t* index, const double* base,
                       std::size_t n);
};

const KernelTable& scalar_table();

/// nullptr when the variant was not compiled in or the CPU lacks the feature.
const KernelTable* avx2_table();
const KernelTable* neon_table();

/// Table selected for this process (CPU detection + SPARSE_LPV_SIMD override).
const KernelTable& active();

/// Overrides the process-wide selection; returns false if `isa` is unavailable.
bool select(Isa isa);

inline double dot(std::span<const double> x, std::span<const double> y) {
  return active().dot(x.data(), y.data(), x.size());
}

inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  active().axpy(a, x.data(), y.data(), x.size());
}

inline double gather_dot(std::span<const double> values, std::span<const std::int32_t> index,
                         const double* base) {
  return active().gather_dot(values.data(), index.data(), base, values.size());
}

}  // namespace sparse_lpv::kernels
