#include "sparse_lpv/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <system_error>

#include "sparse_lpv/error.hpp"

namespace sparse_lpv::io {
namespace {

Matrix shaped(const Json& j, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + ": expected nested array");
  if (rows == 0 || cols == 0) return Matrix::Zero(rows, cols);
  Matrix M = matrix_from_json(j);
  if (M.rows() != rows || M.cols() != cols) {
    std::ostringstream os;
    os << what << ": expected " << rows << "x" << cols << ", got " << M.rows() << "x" << M.cols();
    throw DimensionError(os.str());
  }
  return M;
}

template <typename T>
void maybe(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

void csv_value(std::string& out, double v) {
  out += format_double(v);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Json matrix_to_json(const Matrix& M) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j) {
  if (!j.is_array()) throw ConfigError("matrix: expected array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return Matrix(0, 0);
  const auto cols = static_cast<Eigen::Index>(j.at(0).size());
  Matrix M(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Json& row = j.at(static_cast<std::size_t>(r));
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw DimensionError("matrix: ragged rows");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      const Json& e = row.at(static_cast<std::size_t>(c));
      if (!e.is_number()) throw ConfigError("matrix: non-numeric entry");
      M(r, c) = e.get<double>();
    }
  }
  return M;
}

Json vector_to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number_or_null(v[i]));
  return a;
}

Vector vector_from_json(const Json& j) {
  if (!j.is_array()) throw ConfigError("vector: expected array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] =
        j[i].is_null() ? std::numeric_limits<double>::infinity() : j[i].get<double>();
  }
  return v;
}

Json model_to_json(const AffineLPVModel& model) {
  Json j;
  j["n_x"] = model.n_x();
  j["n_u"] = model.n_u();
  j["n_w"] = model.n_w();
  j["n_z"] = model.n_z();
  j["n_rho"] = model.n_rho();
  j["box"] = {{"lower", vector_to_json(model.box().lower())}, {"upper", vector_to_json(model.box().upper())}};
  Json mats;
  for (SystemMatrix which : kAllSystemMatrices) {
    const AffineMatrix& t = model.term(which);
    Json list = Json::array();
    list.push_back(matrix_to_json(t.constant));
    for (const Matrix& c : t.coefficients) list.push_back(matrix_to_json(c));
    mats[std::string(matrix_key(which))] = std::move(list);
  }
  j["matrices"] = std::move(mats);
  if (model.explicit_vertices()) {
    Json v = Json::array();
    for (const Vector& p : *model.explicit_vertices()) v.push_back(vector_to_json(p));
    j["vertices"] = std::move(v);
  }
  return j;
}

AffineLPVModel model_from_json(const Json& j) {
  try {
    const auto nx = j.at("n_x").get<Eigen::Index>();
    const auto nu = j.at("n_u").get<Eigen::Index>();
    const auto nw = j.at("n_w").get<Eigen::Index>();
    const auto nz = j.at("n_z").get<Eigen::Index>();
    const auto nrho = j.at("n_rho").get<std::size_t>();
    const std::array<std::pair<Eigen::Index, Eigen::Index>, 6> shapes = {
        {{nx, nx}, {nx, nu}, {nx, nw}, {nz, nx}, {nz, nu}, {nz, nw}}};
    std::array<AffineMatrix, 6> terms;
    for (SystemMatrix which : kAllSystemMatrices) {
      const auto k = static_cast<std::size_t>(which);
      const std::string key(matrix_key(which));
      const auto [rows, cols] = shapes[k];
      AffineMatrix& t = terms[k];
      if (!j.at("matrices").contains(key)) {
        t.constant = Matrix::Zero(rows, cols);
        t.coefficients.assign(nrho, Matrix::Zero(rows, cols));
        continue;
      }
      const Json& list = j.at("matrices").at(key);
      if (!list.is_array() || list.size() != nrho + 1) {
        throw DimensionError("model: " + key + " needs n_rho + 1 matrices");
      }
      t.constant = shaped(list[0], rows, cols, key);
      for (std::size_t c = 1; c < list.size(); ++c) t.coefficients.push_back(shaped(list[c], rows, cols, key));
    }
    ParamBox box(vector_from_json(j.at("box").at("lower")), vector_from_json(j.at("box").at("upper")));
    if (static_cast<std::size_t>(box.dimension()) != nrho) throw DimensionError("model: box dimension differs from n_rho");
    std::optional<std::vector<Vector>> vertices;
    if (j.contains("vertices")) {
      vertices.emplace();
      for (const Json& v : j.at("vertices")) vertices->push_back(vector_from_json(v));
    }
    return AffineLPVModel(std::move(terms), std::move(box), std::move(vertices));
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("model JSON: ") + e.what());
  }
}

Json wing_params_to_json(const WingParams& p) {
  Json j;
  j["m"] = p.m;
  j["n"] = p.n;
  j["l"] = p.l;
  j["k1"] = p.k1;
  j["k2"] = p.k2;
  j["theta_max"] = p.theta_max;
  // scalar beta (weight on theta_dot) unless explicit weights were given, so n can change independently
  j["z_weights"] = p.z_weights.size() == 0 ? Json(1.0) : vector_to_json(p.z_weights);
  return j;
}

WingParams wing_params_from_json(const Json& j) {
  WingParams p;
  try {
    maybe(j, "m", p.m);
    maybe(j, "n", p.n);
    maybe(j, "l", p.l);
    maybe(j, "k1", p.k1);
    maybe(j, "k2", p.k2);
    maybe(j, "theta_max", p.theta_max);
    if (j.contains("z_weights")) {
      const Json& z = j.at("z_weights");
      if (z.is_number()) {
        if (p.n < 1) throw ConfigError("wing.n must be at least 1");
        p.z_weights = Vector::Ones(2 * p.n);
        p.z_weights.tail(p.n).setConstant(z.get<double>());
      } else {
        p.z_weights = vector_from_json(z);
      }
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("wing config: ") + e.what());
  }
  p.validate();
  return p;
}

Json controller_to_json(const ControllerArtifact& c) {
  Json j;
  j["kind"] = to_string(c.kind);
  j["gamma0"] = c.gamma0;
  j["gamma_ub"] = c.gamma_ub ? Json(*c.gamma_ub) : Json(nullptr);
  j["K"] = matrix_to_json(c.K);
  j["X"] = matrix_to_json(c.X);
  j["W"] = matrix_to_json(c.W);
  if (c.kind == NormKind::kH2) j["Z"] = matrix_to_json(c.Z);
  j["Gamma"] = vector_to_json(c.gamma);
  j["sqrt_Gamma"] = vector_to_json(c.gamma.cwiseMax(0.0).cwiseSqrt());
  j["active_actuators"] = c.active;
  j["certificate"] = {{"vertex_max_eigenvalue", c.vertex_max_eigenvalue},
                      {"max_eigenvalue", c.max_eigenvalue},
                      {"passed", c.certificate_passed}};
  j["message"] = c.message;
  Json h = Json::array();
  for (const IterationRecord& r : c.history) {
    h.push_back({{"iteration", r.iteration},
                 {"status", r.status},
                 {"objective", r.objective},
                 {"alpha", vector_to_json(r.alpha)},
                 {"Gamma", vector_to_json(r.gamma)},
                 {"above_threshold", r.above_threshold}});
  }
  j["iteration_history"] = std::move(h);
  return j;
}

ControllerArtifact controller_from_json(const Json& j) {
  ControllerArtifact c;
  try {
    c.kind = parse_norm_kind(j.at("kind").get<std::string>());
    c.gamma0 = j.at("gamma0").get<double>();
    if (j.contains("gamma_ub") && !j.at("gamma_ub").is_null()) c.gamma_ub = j.at("gamma_ub").get<double>();
    c.K = matrix_from_json(j.at("K"));
    if (j.contains("X")) c.X = matrix_from_json(j.at("X"));
    if (j.contains("W")) c.W = matrix_from_json(j.at("W"));
    if (j.contains("Z")) c.Z = matrix_from_json(j.at("Z"));
    if (j.contains("Gamma")) c.gamma = vector_from_json(j.at("Gamma"));
    if (j.contains("active_actuators")) c.active = j.at("active_actuators").get<std::vector<int>>();
    if (j.contains("certificate")) {
      const Json& cert = j.at("certificate");
      maybe(cert, "vertex_max_eigenvalue", c.vertex_max_eigenvalue);
      maybe(cert, "max_eigenvalue", c.max_eigenvalue);
      maybe(cert, "passed", c.certificate_passed);
    }
    maybe(j, "message", c.message);
    if (j.contains("iteration_history")) {
      for (const Json& r : j.at("iteration_history")) {
        IterationRecord rec;
        rec.iteration = r.at("iteration").get<int>();
        rec.status = r.at("status").get<std::string>();
        rec.objective = r.at("objective").get<double>();
        rec.alpha = vector_from_json(r.at("alpha"));
        rec.gamma = vector_from_json(r.at("Gamma"));
        rec.above_threshold = r.at("above_threshold").get<int>();
        c.history.push_back(std::move(rec));
      }
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("controller JSON: ") + e.what());
  }
  return c;
}

Json norm_report_to_json(const NormReport& r) {
  Json j;
  j["kind"] = to_string(r.kind);
  j["gamma0"] = r.gamma0;
  j["sqrt_gamma"] = vector_to_json(r.sqrt_gamma);
  j["rel_tol"] = r.rel_tol;
  j["passed"] = r.passed();
  j["worst_performance"] = number_or_null(r.worst_performance);
  j["worst_actuator"] = vector_to_json(r.worst_actuator);
  Json samples = Json::array();
  for (const SampleNorms& s : r.samples) {
    samples.push_back({{"rho", vector_to_json(s.rho)},
                       {"origin", s.origin},
                       {"stable", s.stable},
                       {"spectral_abscissa", s.abscissa},
                       {"performance", number_or_null(s.performance)},
                       {"actuator", vector_to_json(s.actuator)}});
  }
  j["samples"] = std::move(samples);
  j["failures"] = r.failures;
  return j;
}

std::string norm_report_csv(const NormReport& r) {
  const Eigen::Index nrho = r.samples.empty() ? 0 : r.samples.front().rho.size();
  std::string out = "sample,origin";
  for (Eigen::Index k = 0; k < nrho; ++k) out += ",rho_" + std::to_string(k + 1);
  out += ",channel,norm,bound,margin\n";
  for (std::size_t i = 0; i < r.samples.size(); ++i) {
    const SampleNorms& s = r.samples[i];
    auto row = [&](const std::string& channel, double norm, double bound) {
      out += std::to_string(i) + "," + s.origin;
      for (Eigen::Index k = 0; k < s.rho.size(); ++k) {
        out += ",";
        csv_value(out, s.rho[k]);
      }
      out += "," + channel + ",";
      csv_value(out, norm);
      out += ",";
      csv_value(out, bound);
      out += ",";
      csv_value(out, bound - norm);
      out += "\n";
    };
    row("z", s.performance, r.gamma0);
    for (Eigen::Index a = 0; a < s.actuator.size(); ++a) {
      const double bound = a < r.sqrt_gamma.size() ? r.sqrt_gamma[a] : std::numeric_limits<double>::infinity();
      row("u_" + std::to_string(a + 1), s.actuator[a], bound);
    }
  }
  return out;
}

std::string trajectory_csv(const Trajectory& traj) {
  const int n = traj.n;
  const bool with_u = !traj.u.empty();
  std::string out = "t";
  for (int i = 1; i <= n; ++i) out += ",theta_" + std::to_string(i);
  for (int i = 1; i <= n; ++i) out += ",thetadot_" + std::to_string(i);
  if (with_u) {
    for (int i = 1; i <= n; ++i) out += ",u_" + std::to_string(i);
  }
  for (int i = 1; i <= n; ++i) out += ",w_" + std::to_string(i);
  out += ",box_violation\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    csv_value(out, traj.t[k]);
    for (Eigen::Index i = 0; i < traj.x[k].size(); ++i) {
      out += ",";
      csv_value(out, traj.x[k][i]);
    }
    if (with_u) {
      for (Eigen::Index i = 0; i < traj.u[k].size(); ++i) {
        out += ",";
        csv_value(out, traj.u[k][i]);
      }
    }
    for (Eigen::Index i = 0; i < traj.w[k].size(); ++i) {
      out += ",";
      csv_value(out, traj.w[k][i]);
    }
    out += traj.box_violation[k] ? ",1\n" : ",0\n";
  }
  return out;
}

Json metrics_to_json(const Metrics& m) {
  Json j;
  j["u_inf"] = vector_to_json(m.u_inf);
  j["settling_time"] = m.settling_time;
  j["settled"] = m.settled;
  j["overshoot"] = m.overshoot;
  j["rms_z"] = m.rms_z;
  j["box_violation_steps"] = m.box_violations;
  // the vertex certificate only covers states inside the scheduling box
  j["out_of_certificate"] = m.box_violations > 0;
  j["diverged"] = m.diverged;
  return j;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << contents;
    if (!out.flush()) throw Error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error("cannot rename " + tmp.string() + ": " + ec.message());
}

void write_json_atomic(const std::filesystem::path& path, const Json& j) {
  write_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace sparse_lpv::io
