#pragma once

// Affine LPV models  M(rho) = M0 + sum_k rho_k M_k  over an axis-aligned box.

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace sparse_lpv {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Largest parameter dimension for which vertices are enumerated (2^24 points).
inline constexpr int kMaxVertexDimension = 24;

class ParamBox {
 public:
  ParamBox() = default;
  ParamBox(Vector lower, Vector upper);

  [[nodiscard]] int dimension() const { return static_cast<int>(lower_.size()); }
  [[nodiscard]] const Vector& lower() const { return lower_; }
  [[nodiscard]] const Vector& upper() const { return upper_; }
  [[nodiscard]] bool contains(const Vector& rho, double tol = 0.0) const;

 private:
  Vector lower_;
  Vector upper_;
};

/// All corners of the box, lexicographic (first coordinate slowest, lower before upper).
/// Degenerate coordinates contribute a single value.
std::vector<Vector> box_vertices(const ParamBox& box);

enum class SystemMatrix { kA = 0, kBu, kBw, kCz, kDu, kDw };
inline constexpr std::array<SystemMatrix, 6> kAllSystemMatrices = {
    SystemMatrix::kA, SystemMatrix::kBu, SystemMatrix::kBw,
    SystemMatrix::kCz, SystemMatrix::kDu, SystemMatrix::kDw};

/// Serialized key ("A", "B_u", ...).
std::string_view matrix_key(SystemMatrix which);

struct AffineMatrix {
  Matrix constant;
  std::vector<Matrix> coefficients;

  [[nodiscard]] Matrix evaluate(const Vector& rho) const;
  [[nodiscard]] bool parameter_independent() const;
};

/// The six plant matrices frozen at one parameter value.
struct FrozenSystem {
  Matrix A, Bu, Bw, Cz, Du, Dw;
};

class AffineLPVModel {
 public:
  AffineLPVModel() = default;
  /// Validates shapes. `vertices`, when given, replaces box enumeration
  /// (general polytopes described by their vertex list).
  AffineLPVModel(std::array<AffineMatrix, 6> terms, ParamBox box,
                 std::optional<std::vector<Vector>> vertices = std::nullopt);

  [[nodiscard]] int n_x() const { return static_cast<int>(term(SystemMatrix::kA).constant.rows()); }
  [[nodiscard]] int n_u() const { return static_cast<int>(term(SystemMatrix::kBu).constant.cols()); }
  [[nodiscard]] int n_w() const { return static_cast<int>(term(SystemMatrix::kBw).constant.cols()); }
  [[nodiscard]] int n_z() const { return static_cast<int>(term(SystemMatrix::kCz).constant.rows()); }
  [[nodiscard]] int n_rho() const { return box_.dimension(); }

  [[nodiscard]] const AffineMatrix& term(SystemMatrix which) const {
    return terms_[static_cast<std::size_t>(which)];
  }
  [[nodiscard]] const ParamBox& box() const { return box_; }
  [[nodiscard]] const std::optional<std::vector<Vector>>& explicit_vertices() const {
    return vertices_;
  }

  /// Frozen matrices at rho. Warns (does not throw) when rho is outside the box.
  [[nodiscard]] FrozenSystem evaluate(const Vector& rho) const;

  /// Explicit vertex list if one was supplied, box corners otherwise.
  [[nodiscard]] std::vector<Vector> vertices() const;

  [[nodiscard]] bool parameter_independent() const;

  /// Copy keeping only the listed actuator columns of B_u and D_u.
  [[nodiscard]] AffineLPVModel with_actuators(std::span<const int> keep) const;

 private:
  std::array<AffineMatrix, 6> terms_;
  ParamBox box_;
  std::optional<std::vector<Vector>> vertices_;
};

struct LTIStateSpace {
  Matrix A, B, C, D;

  LTIStateSpace() = default;
  LTIStateSpace(Matrix a, Matrix b, Matrix c, Matrix d);

  [[nodiscard]] int n_states() const { return static_cast<int>(A.rows()); }
  [[nodiscard]] int n_inputs() const { return static_cast<int>(B.cols()); }
  [[nodiscard]] int n_outputs() const { return static_cast<int>(C.rows()); }
};

/// Performance channel w -> z under u = Kx: (A+B_uK, B_w, C_z+D_uK, D_w).
LTIStateSpace closed_loop(const FrozenSystem& sys, const Matrix& K);

/// Actuator channel w -> u_i under u = Kx: (A+B_uK, B_w, row_i(K), 0). `i` is zero-based.
LTIStateSpace actuator_channel(const FrozenSystem& sys, const Matrix& K, int i);

}  // namespace sparse_lpv
