#include "sparse_lpv/lpv_model.hpp"

#include <algorithm>
#include <sstream>
#include <utility>

#include "sparse_lpv/error.hpp"
#include "sparse_lpv/log.hpp"

namespace sparse_lpv {

ParamBox::ParamBox(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size()) {
    throw DimensionError("parameter box: lower and upper bounds differ in length");
  }
  for (Eigen::Index i = 0; i < lower_.size(); ++i) {
    if (!(lower_[i] <= upper_[i])) {
      std::ostringstream os;
      os << "parameter box: lower[" << i << "] = " << lower_[i] << " exceeds upper[" << i
         << "] = " << upper_[i];
      throw ConfigError(os.str());
    }
  }
}

bool ParamBox::contains(const Vector& rho, double tol) const {
  if (rho.size() != lower_.size()) return false;
  for (Eigen::Index i = 0; i < rho.size(); ++i) {
    if (rho[i] < lower_[i] - tol || rho[i] > upper_[i] + tol) return false;
  }
  return true;
}

std::vector<Vector> box_vertices(const ParamBox& box) {
  const int dim = box.dimension();
  if (dim > kMaxVertexDimension) {
    std::ostringstream os;
    os << "box_vertices: " << dim << " parameters exceeds the enumeration limit of "
       << kMaxVertexDimension;
    throw DimensionError(os.str());
  }
  std::vector<std::vector<double>> choices(static_cast<std::size_t>(dim));
  std::size_t count = 1;
  for (int i = 0; i < dim; ++i) {
    auto& c = choices[static_cast<std::size_t>(i)];
    c.push_back(box.lower()[i]);
    if (box.upper()[i] != box.lower()[i]) c.push_back(box.upper()[i]);
    count *= c.size();
  }
  std::vector<Vector> out;
  out.reserve(count);
  for (std::size_t idx = 0; idx < count; ++idx) {
    Vector v(dim);
    std::size_t rem = idx;
    for (int i = dim - 1; i >= 0; --i) {
      const auto& c = choices[static_cast<std::size_t>(i)];
      v[i] = c[rem % c.size()];
      rem /= c.size();
    }
    out.push_back(std::move(v));
  }
  return out;
}

std::string_view matrix_key(SystemMatrix which) {
  switch (which) {
    case SystemMatrix::kA:
      return "A";
    case SystemMatrix::kBu:
      return "B_u";
    case SystemMatrix::kBw:
      return "B_w";
    case SystemMatrix::kCz:
      return "C_z";
    case SystemMatrix::kDu:
      return "D_u";
    case SystemMatrix::kDw:
      return "D_w";
  }
  return "?";
}

Matrix AffineMatrix::evaluate(const Vector& rho) const {
  if (static_cast<std::size_t>(rho.size()) != coefficients.size()) {
    std::ostringstream os;
    os << "affine evaluation: parameter vector has length " << rho.size() << ", model has "
       << coefficients.size() << " parameters";
    throw DimensionError(os.str());
  }
  Matrix out = constant;
  for (std::size_t k = 0; k < coefficients.size(); ++k) {
    out += rho[static_cast<Eigen::Index>(k)] * coefficients[k];
  }
  return out;
}

bool AffineMatrix::parameter_independent() const {
  return std::all_of(coefficients.begin(), coefficients.end(),
                     [](const Matrix& m) { return m.size() == 0 || m.isZero(0.0); });
}

namespace {

void check_term(const AffineMatrix& t, SystemMatrix which, Eigen::Index rows, Eigen::Index cols,
                int n_rho) {
  auto fail = [&](const std::string& what) {
    std::ostringstream os;
    os << "LPV model: " << matrix_key(which) << ' ' << what;
    throw DimensionError(os.str());
  };
  if (t.constant.rows() != rows || t.constant.cols() != cols) {
    std::ostringstream os;
    os << "has shape " << t.constant.rows() << 'x' << t.constant.cols() << ", expected " << rows
       << 'x' << cols;
    fail(os.str());
  }
  if (static_cast<int>(t.coefficients.size()) != n_rho) {
    std::ostringstream os;
    os << "has " << t.coefficients.size() << " coefficient matrices, expected " << n_rho;
    fail(os.str());
  }
  for (const auto& c : t.coefficients) {
    if (c.rows() != rows || c.cols() != cols) fail("has a coefficient matrix of inconsistent shape");
  }
}

}  // namespace

AffineLPVModel::AffineLPVModel(std::array<AffineMatrix, 6> terms, ParamBox box,
                               std::optional<std::vector<Vector>> vertices)
    : terms_(std::move(terms)), box_(std::move(box)), vertices_(std::move(vertices)) {
  const int nr = box_.dimension();
  const Eigen::Index nx = term(SystemMatrix::kA).constant.rows();
  const Eigen::Index nu = term(SystemMatrix::kBu).constant.cols();
  const Eigen::Index nw = term(SystemMatrix::kBw).constant.cols();
  const Eigen::Index nz = term(SystemMatrix::kCz).constant.rows();
  check_term(term(SystemMatrix::kA), SystemMatrix::kA, nx, nx, nr);
  check_term(term(SystemMatrix::kBu), SystemMatrix::kBu, nx, nu, nr);
  check_term(term(SystemMatrix::kBw), SystemMatrix::kBw, nx, nw, nr);
  check_term(term(SystemMatrix::kCz), SystemMatrix::kCz, nz, nx, nr);
  check_term(term(SystemMatrix::kDu), SystemMatrix::kDu, nz, nu, nr);
  check_term(term(SystemMatrix::kDw), SystemMatrix::kDw, nz, nw, nr);
  if (vertices_) {
    if (vertices_->empty()) throw DimensionError("LPV model: explicit vertex list is empty");
    for (const auto& v : *vertices_) {
      if (v.size() != nr) throw DimensionError("LPV model: explicit vertex has wrong dimension");
    }
  }
}

FrozenSystem AffineLPVModel::evaluate(const Vector& rho) const {
  if (rho.size() != n_rho()) {
    std::ostringstream os;
    os << "affine evaluation: parameter vector has length " << rho.size() << ", model has "
       << n_rho() << " parameters";
    throw DimensionError(os.str());
  }
  if (!box_.contains(rho, 1e-12)) warn("affine evaluation outside the parameter box");
  return FrozenSystem{term(SystemMatrix::kA).evaluate(rho),  term(SystemMatrix::kBu).evaluate(rho),
                      term(SystemMatrix::kBw).evaluate(rho), term(SystemMatrix::kCz).evaluate(rho),
                      term(SystemMatrix::kDu).evaluate(rho), term(SystemMatrix::kDw).evaluate(rho)};
}

std::vector<Vector> AffineLPVModel::vertices() const {
  if (vertices_) return *vertices_;
  return box_vertices(box_);
}

bool AffineLPVModel::parameter_independent() const {
  return std::all_of(terms_.begin(), terms_.end(),
                     [](const AffineMatrix& t) { return t.parameter_independent(); });
}

AffineLPVModel AffineLPVModel::with_actuators(std::span<const int> keep) const {
  auto select_cols = [&](const Matrix& m) {
    Matrix out(m.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) {
      if (keep[j] < 0 || keep[j] >= m.cols()) throw DimensionError("actuator index out of range");
      out.col(static_cast<Eigen::Index>(j)) = m.col(keep[j]);
    }
    return out;
  };
  auto terms = terms_;
  for (SystemMatrix which : {SystemMatrix::kBu, SystemMatrix::kDu}) {
    auto& t = terms[static_cast<std::size_t>(which)];
    t.constant = select_cols(t.constant);
    for (auto& c : t.coefficients) c = select_cols(c);
  }
  return AffineLPVModel(std::move(terms), box_, vertices_);
}

LTIStateSpace::LTIStateSpace(Matrix a, Matrix b, Matrix c, Matrix d)
    : A(std::move(a)), B(std::move(b)), C(std::move(c)), D(std::move(d)) {
  if (A.rows() != A.cols() || B.rows() != A.rows() || C.cols() != A.rows() ||
      D.rows() != C.rows() || D.cols() != B.cols()) {
    throw DimensionError("state-space: inconsistent matrix shapes");
  }
}

namespace {

void check_gain(const FrozenSystem& sys, const Matrix& K) {
  if (K.rows() != sys.Bu.cols() || K.cols() != sys.A.rows()) {
    std::ostringstream os;
    os << "gain has shape " << K.rows() << 'x' << K.cols() << ", expected " << sys.Bu.cols() << 'x'
       << sys.A.rows();
    throw DimensionError(os.str());
  }
}

}  // namespace

LTIStateSpace closed_loop(const FrozenSystem& sys, const Matrix& K) {
  check_gain(sys, K);
  return LTIStateSpace(sys.A + sys.Bu * K, sys.Bw, sys.Cz + sys.Du * K, sys.Dw);
}

LTIStateSpace actuator_channel(const FrozenSystem& sys, const Matrix& K, int i) {
  check_gain(sys, K);
  if (i < 0 || i >= K.rows()) throw DimensionError("actuator channel index out of range");
  return LTIStateSpace(sys.A + sys.Bu * K, sys.Bw, K.row(i), Matrix::Zero(1, sys.Bw.cols()));
}

}  // namespace sparse_lpv
