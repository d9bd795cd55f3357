#pragma once

// Brute-force reference computations used only by the tests.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "sparse_lpv/analysis.hpp"
#include "sparse_lpv/lpv_model.hpp"

namespace oracle {

using sparse_lpv::LTIStateSpace;
using sparse_lpv::Matrix;

inline Matrix random_matrix(std::mt19937_64& g, int r, int c) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix M(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) M(i, j) = n(g);
  return M;
}

/// Random stable system, spectral abscissa shifted into [-1, -0.05].
inline LTIStateSpace random_stable(std::mt19937_64& g, int n, int m, int p, bool feedthrough) {
  Matrix A = random_matrix(g, n, n);
  std::uniform_real_distribution<double> shift(0.05, 1.0);
  const double a = sparse_lpv::spectral_abscissa(A);
  A -= (a + shift(g)) * Matrix::Identity(n, n);
  Matrix D = feedthrough ? Matrix(0.3 * random_matrix(g, p, m)) : Matrix(Matrix::Zero(p, m));
  return LTIStateSpace(A, random_matrix(g, n, m), random_matrix(g, p, n), D);
}

inline double sigma_max(const LTIStateSpace& sys, double w) {
  const Eigen::MatrixXcd G = sparse_lpv::frequency_response(sys, w);
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(G);
  return svd.singularValues()(0);
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm,
                               double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

/// (1/2pi) int ||G(jw)||_F^2 dw over the real line, via w = tan(t) on [0, pi/2].
inline double h2_quadrature(const LTIStateSpace& sys) {
  auto f = [&](double t) {
    const double w = std::tan(t);
    const double sec2 = 1.0 + w * w;
    return sparse_lpv::frequency_response(sys, w).squaredNorm() * sec2;
  };
  const double a = 0.0, b = 0.5 * M_PI;
  // split to keep narrow resonances from hiding between the first samples
  const int pieces = 64;
  double total = 0.0;
  for (int k = 0; k < pieces; ++k) {
    const double lo = a + (b - a) * k / pieces, hi = a + (b - a) * (k + 1) / pieces;
    const double flo = f(lo), fhi = f(hi), fm = f(0.5 * (lo + hi));
    const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fm + fhi);
    total += adaptive_simpson(f, lo, hi, flo, fm, fhi, whole, 1e-12, 40);
  }
  return std::sqrt(total / M_PI);
}

/// Dense logarithmic grid, then golden-section refinement around the best local maxima.
inline double hinf_grid(const LTIStateSpace& sys) {
  Eigen::EigenSolver<Matrix> es(sys.A, false);
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  std::vector<double> w = {0.0};
  const int pts = 4000;
  for (int k = 0; k <= pts; ++k) w.push_back(scale * std::pow(10.0, -4.0 + 7.0 * k / pts));
  std::vector<double> s(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) s[k] = sigma_max(sys, w[k]);
  double best = *std::max_element(s.begin(), s.end());
  std::vector<std::size_t> peaks;
  for (std::size_t k = 1; k + 1 < w.size(); ++k) {
    if (s[k] >= s[k - 1] && s[k] >= s[k + 1]) peaks.push_back(k);
  }
  std::sort(peaks.begin(), peaks.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
  if (peaks.size() > 8) peaks.resize(8);
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  for (std::size_t k : peaks) {
    double lo = w[k - 1], hi = w[k + 1];
    double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
    double f1 = sigma_max(sys, x1), f2 = sigma_max(sys, x2);
    for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
      if (f1 > f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - phi * (hi - lo);
        f1 = sigma_max(sys, x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + phi * (hi - lo);
        f2 = sigma_max(sys, x2);
      }
    }
    best = std::max({best, f1, f2});
  }
  return best;
}

}  // namespace oracle
