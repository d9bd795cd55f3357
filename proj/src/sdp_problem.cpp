#include <Eigen/Eigenvalues>
#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "sparse_lpv/error.hpp"
#include "sparse_lpv/sdp.hpp"

namespace sparse_lpv::sdp {

Matrix Constraint::evaluate(const Vector& y) const {
  Matrix F = Matrix::Zero(dim, dim);
  auto scatter = [&F](const std::vector<Entry>& entries, double s) {
    for (const auto& e : entries) {
      F(e.row, e.col) += s * e.value;
      if (e.row != e.col) F(e.col, e.row) += s * e.value;
    }
  };
  scatter(constant, 1.0);
  for (const auto& t : terms) scatter(t.entries, y[t.unknown]);
  return F;
}

int Variable::unknown(int r, int c) const {
  if (r < 0 || c < 0 || r >= rows || c >= cols) throw DimensionError("variable index out of range");
  if (!symmetric) return offset + r * cols + c;
  if (r > c) std::swap(r, c);
  // Upper triangle, row-major: rows before r contribute (rows - k) entries each.
  return offset + r * rows - r * (r - 1) / 2 + (c - r);
}

int Problem::add_variable(Variable v) {
  v.offset = num_unknowns_;
  num_unknowns_ += v.size();
  objective_.conservativeResize(num_unknowns_);
  objective_.tail(v.size()).setZero();
  variables_.push_back(std::move(v));
  return static_cast<int>(variables_.size()) - 1;
}

int Problem::add_scalar(std::string name, std::optional<double> lower, std::optional<double> upper,
                        bool bound_constraints) {
  Variable v;
  v.name = std::move(name);
  v.lower = lower;
  v.upper = upper;
  const int id = add_variable(std::move(v));
  const int k = variables_.back().offset;
  if (!bound_constraints) return id;
  if (lower) {
    // lower - s <= 0
    add_constraint(Constraint{"lower_bound", -1, id, 1, 0.0, {{0, 0, *lower}}, {{k, {{0, 0, -1.0}}}}});
  }
  if (upper) {
    add_constraint(Constraint{"upper_bound", -1, id, 1, 0.0, {{0, 0, -*upper}}, {{k, {{0, 0, 1.0}}}}});
  }
  return id;
}

int Problem::add_symmetric(std::string name, int dim) {
  if (dim <= 0) throw DimensionError("symmetric variable must have positive dimension");
  return add_variable(Variable{std::move(name), dim, dim, true, 0, std::nullopt, std::nullopt});
}

int Problem::add_matrix(std::string name, int rows, int cols) {
  if (rows < 0 || cols < 0) throw DimensionError("matrix variable has negative dimension");
  return add_variable(Variable{std::move(name), rows, cols, false, 0, std::nullopt, std::nullopt});
}

void Problem::set_objective(int unknown, double coefficient) {
  if (unknown < 0 || unknown >= num_unknowns_) throw DimensionError("objective: unknown out of range");
  objective_[unknown] = coefficient;
}

void Problem::add_constraint(Constraint c) {
  if (c.dim <= 0) throw DimensionError("constraint must have positive dimension");
  std::sort(c.terms.begin(), c.terms.end(),
            [](const Term& a, const Term& b) { return a.unknown < b.unknown; });
  for (std::size_t i = 0; i < c.terms.size(); ++i) {
    const int k = c.terms[i].unknown;
    if (k < 0 || k >= num_unknowns_) throw DimensionError("constraint references an undeclared unknown");
    if (i > 0 && c.terms[i - 1].unknown == k) throw DimensionError("constraint repeats an unknown");
  }
  auto check_entries = [&c](const std::vector<Entry>& entries) {
    for (const auto& e : entries) {
      if (e.row < 0 || e.col >= c.dim || e.row > e.col) {
        throw DimensionError("constraint entry outside the upper triangle");
      }
    }
  };
  check_entries(c.constant);
  for (const auto& t : c.terms) check_entries(t.entries);
  constraints_.push_back(std::move(c));
}

int Problem::find_variable(const std::string& name) const {
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    if (variables_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

Matrix Problem::value(int id, const Vector& y) const {
  const Variable& v = variable(id);
  Matrix out(v.rows, v.cols);
  for (int r = 0; r < v.rows; ++r) {
    for (int c = 0; c < v.cols; ++c) out(r, c) = y[v.unknown(r, c)];
  }
  return out;
}

bool operator==(const Problem& a, const Problem& b) {
  return a.num_unknowns_ == b.num_unknowns_ && a.variables_ == b.variables_ &&
         a.constraints_ == b.constraints_ && a.objective_ == b.objective_;
}

// ---------------------------------------------------------------------------

LmiBuilder::LmiBuilder(const Problem& problem, int dim)
    : problem_(&problem), dim_(dim), constant_(Matrix::Zero(dim, dim)) {}

Matrix& LmiBuilder::slot(int unknown) {
  for (auto& [k, m] : terms_) {
    if (k == unknown) return m;
  }
  terms_.emplace_back(unknown, Matrix::Zero(dim_, dim_));
  return terms_.back().second;
}

void LmiBuilder::place(Matrix& target, int r0, int c0, const Matrix& M) {
  if (r0 < 0 || c0 < 0 || r0 + M.rows() > dim_ || c0 + M.cols() > dim_) {
    throw DimensionError("LMI block placement outside the constraint");
  }
  if (r0 == c0) {
    if (M.rows() != M.cols()) throw DimensionError("diagonal LMI block must be square");
    target.block(r0, c0, M.rows(), M.cols()) += 0.5 * (M + M.transpose());
  } else {
    target.block(r0, c0, M.rows(), M.cols()) += M;
    target.block(c0, r0, M.cols(), M.rows()) += M.transpose();
  }
}

void LmiBuilder::add_constant(int r0, int c0, const Matrix& M) { place(constant_, r0, c0, M); }

void LmiBuilder::add_product(int r0, int c0, const Matrix& Lm, int var, const Matrix& Rm,
                             double scale) {
  const Variable& v = problem_->variable(var);
  if (Lm.cols() != v.rows || Rm.rows() != v.cols) throw DimensionError("LMI product shape mismatch");
  for (int r = 0; r < v.rows; ++r) {
    for (int c = v.symmetric ? r : 0; c < v.cols; ++c) {
      Matrix coeff = Lm.col(r) * Rm.row(c);
      if (v.symmetric && r != c) coeff += Lm.col(c) * Rm.row(r);
      if (coeff.isZero(0.0)) continue;
      place(slot(v.unknown(r, c)), r0, c0, scale * coeff);
    }
  }
}

void LmiBuilder::add_sym_product(int r0, const Matrix& Lm, int var, const Matrix& Rm, double scale) {
  // place() halves (T + T') on diagonal blocks, so doubling gives T + T'.
  add_product(r0, r0, Lm, var, Rm, 2.0 * scale);
}

void LmiBuilder::add_scalar(int r0, int c0, int var, const Matrix& M) {
  const Variable& v = problem_->variable(var);
  if (!v.is_scalar()) throw DimensionError("add_scalar requires a scalar variable");
  place(slot(v.offset), r0, c0, M);
}

void LmiBuilder::add_rows(int r0, int c0, int var, int first_row, int num_rows, double scale) {
  const Variable& v = problem_->variable(var);
  Matrix sel = Matrix::Zero(num_rows, v.rows);
  for (int i = 0; i < num_rows; ++i) sel(i, first_row + i) = 1.0;
  add_product(r0, c0, sel, var, Matrix::Identity(v.cols, v.cols), scale);
}

namespace {

std::vector<Entry> upper_entries(const Matrix& M) {
  std::vector<Entry> out;
  for (int r = 0; r < M.rows(); ++r) {
    for (int c = r; c < M.cols(); ++c) {
      if (M(r, c) != 0.0) out.push_back(Entry{r, c, M(r, c)});
    }
  }
  return out;
}

}  // namespace

Constraint LmiBuilder::finish(std::string family, int vertex, int index, double margin) const {
  Constraint c;
  c.family = std::move(family);
  c.vertex = vertex;
  c.index = index;
  c.dim = dim_;
  c.margin = margin;
  c.constant = upper_entries(constant_);
  for (const auto& [k, m] : terms_) {
    auto entries = upper_entries(m);
    if (!entries.empty()) c.terms.push_back(Term{k, std::move(entries)});
  }
  std::sort(c.terms.begin(), c.terms.end(),
            [](const Term& a, const Term& b) { return a.unknown < b.unknown; });
  return c;
}

// ---------------------------------------------------------------------------

const char* to_string(Status s) {
  switch (s) {
    case Status::kOptimal:
      return "optimal";
    case Status::kInfeasible:
      return "infeasible";
    case Status::kNumericalFailure:
      return "numerical-failure";
    case Status::kIterationLimit:
      return "iteration-limit";
  }
  return "unknown";
}

std::vector<double> check_feasibility(const Problem& problem, const Vector& y) {
  if (y.size() != problem.num_unknowns()) {
    std::ostringstream os;
    os << "check_feasibility: assignment has " << y.size() << " values, problem has "
       << problem.num_unknowns() << " unknowns";
    throw DimensionError(os.str());
  }
  std::vector<double> out;
  out.reserve(problem.constraints().size());
  for (const auto& c : problem.constraints()) {
    Matrix F = c.evaluate(y);
    F.diagonal().array() += c.margin;
    if (c.dim == 1) {
      out.push_back(F(0, 0));
    } else {
      Eigen::SelfAdjointEigenSolver<Matrix> es(F, Eigen::EigenvaluesOnly);
      out.push_back(es.eigenvalues().maxCoeff());
    }
  }
  return out;
}

double max_violation(const Problem& problem, const Vector& y) {
  const auto eig = check_feasibility(problem, y);
  if (eig.empty()) return -std::numeric_limits<double>::infinity();
  return *std::max_element(eig.begin(), eig.end());
}

// ---------------------------------------------------------------------------
// Text format
//
//   sdp 1
//   unknowns <n>
//   variable <name> <rows> <cols> <symmetric> <offset> <lower|-> <upper|->
//   objective <unknown> <value>
//   constraint <id> <dim> <margin> <vertex> <index> <family>
//   <id> <unknown|-1> <row> <col> <value>
//
// Doubles are printed with 17 significant digits so parsing is exact.

namespace {

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError("sdp text: bad number '" + s + "'");
  }
  return v;
}

std::string opt_str(const std::optional<double>& v) { return v ? fmt_double(*v) : "-"; }

std::optional<double> parse_opt(const std::string& s) {
  if (s == "-") return std::nullopt;
  return parse_double(s);
}

}  // namespace

void write_text(std::ostream& os, const Problem& problem) {
  os << "sdp 1\n";
  os << "unknowns " << problem.num_unknowns() << '\n';
  for (const auto& v : problem.variables()) {
    os << "variable " << v.name << ' ' << v.rows << ' ' << v.cols << ' ' << (v.symmetric ? 1 : 0)
       << ' ' << v.offset << ' ' << opt_str(v.lower) << ' ' << opt_str(v.upper) << '\n';
  }
  for (int k = 0; k < problem.num_unknowns(); ++k) {
    if (problem.objective()[k] != 0.0) os << "objective " << k << ' ' << fmt_double(problem.objective()[k]) << '\n';
  }
  int id = 0;
  for (const auto& c : problem.constraints()) {
    os << "constraint " << id << ' ' << c.dim << ' ' << fmt_double(c.margin) << ' ' << c.vertex << ' '
       << c.index << ' ' << c.family << '\n';
    for (const auto& e : c.constant) {
      os << id << " -1 " << e.row << ' ' << e.col << ' ' << fmt_double(e.value) << '\n';
    }
    for (const auto& t : c.terms) {
      for (const auto& e : t.entries) {
        os << id << ' ' << t.unknown << ' ' << e.row << ' ' << e.col << ' ' << fmt_double(e.value) << '\n';
      }
    }
    ++id;
  }
}

Problem read_text(std::istream& is) {
  Problem p;
  std::string line;
  std::vector<Constraint> pending;
  int expected_unknowns = -1;
  bool header = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string head;
    ls >> head;
    if (head == "sdp") {
      int version = 0;
      ls >> version;
      if (version != 1) throw ConfigError("sdp text: unsupported version");
      header = true;
    } else if (head == "unknowns") {
      ls >> expected_unknowns;
    } else if (head == "variable") {
      std::string name, lo, hi;
      int rows = 0, cols = 0, sym = 0, offset = 0;
      ls >> name >> rows >> cols >> sym >> offset >> lo >> hi;
      if (!ls) throw ConfigError("sdp text: malformed variable record");
      int id = 0;
      if (sym != 0) {
        id = p.add_symmetric(name, rows);
      } else if (rows == 1 && cols == 1) {
        id = p.add_scalar(name, parse_opt(lo), parse_opt(hi), false);
      } else {
        id = p.add_matrix(name, rows, cols);
      }
      if (p.variable(id).offset != offset) throw ConfigError("sdp text: variable offsets out of order");
    } else if (head == "objective") {
      int k = 0;
      std::string v;
      ls >> k >> v;
      p.set_objective(k, parse_double(v));
    } else if (head == "constraint") {
      Constraint c;
      int id = 0;
      std::string margin;
      ls >> id >> c.dim >> margin >> c.vertex >> c.index >> c.family;
      if (!ls) throw ConfigError("sdp text: malformed constraint record");
      c.margin = parse_double(margin);
      if (id != static_cast<int>(pending.size())) throw ConfigError("sdp text: constraint ids out of order");
      pending.push_back(std::move(c));
    } else {
      if (!header) throw ConfigError("sdp text: missing header");
      int id = std::stoi(head);
      int k = 0;
      Entry e;
      std::string v;
      ls >> k >> e.row >> e.col >> v;
      if (!ls || id < 0 || id >= static_cast<int>(pending.size())) {
        throw ConfigError("sdp text: malformed coefficient record");
      }
      e.value = parse_double(v);
      auto& c = pending[static_cast<std::size_t>(id)];
      if (k < 0) {
        c.constant.push_back(e);
      } else {
        if (c.terms.empty() || c.terms.back().unknown != k) c.terms.push_back(Term{k, {}});
        c.terms.back().entries.push_back(e);
      }
    }
  }
  if (expected_unknowns != p.num_unknowns()) throw ConfigError("sdp text: unknown count mismatch");
  for (auto& c : pending) p.add_constraint(std::move(c));
  return p;
}

}  // namespace sparse_lpv::sdp
