#pragma once

// JSON / CSV artifacts. Doubles are written in shortest round-trip form so
// equal inputs give byte-identical files.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "sparse_lpv/analysis.hpp"
#include "sparse_lpv/lpv_model.hpp"
#include "sparse_lpv/sim.hpp"
#include "sparse_lpv/synthesis.hpp"
#include "sparse_lpv/wing_model.hpp"

namespace sparse_lpv::io {

using Json = nlohmann::ordered_json;

std::string format_double(double v);

Json matrix_to_json(const Matrix& M);
Matrix matrix_from_json(const Json& j);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);

Json model_to_json(const AffineLPVModel& model);
AffineLPVModel model_from_json(const Json& j);

Json wing_params_to_json(const WingParams& p);
/// Missing fields keep their defaults. z_weights may be a number (weight
/// on theta_dot) or an array of 2n diagonal entries.
WingParams wing_params_from_json(const Json& j);

struct IterationRecord {
  int iteration = 0;
  std::string status;
  double objective = 0.0;
  Vector alpha;
  Vector gamma;
  int above_threshold = 0;
};

struct ControllerArtifact {
  NormKind kind = NormKind::kHinf;
  double gamma0 = 0.0;
  std::optional<double> gamma_ub;
  Matrix K, X, W, Z;
  Vector gamma;
  std::vector<int> active;  // zero-based
  std::vector<double> vertex_max_eigenvalue;
  double max_eigenvalue = 0.0;
  bool certificate_passed = false;
  std::string message;
  std::vector<IterationRecord> history;
};

Json controller_to_json(const ControllerArtifact& c);
ControllerArtifact controller_from_json(const Json& j);

Json norm_report_to_json(const NormReport& r);
/// One row per sample and channel: sample, origin, rho_1..rho_k, channel, norm, bound, margin.
std::string norm_report_csv(const NormReport& r);

/// Columns t, theta_i, thetadot_i, u_i (closed loop only), w_i, box_violation.
std::string trajectory_csv(const Trajectory& traj);
Json metrics_to_json(const Metrics& m);

Json read_json_file(const std::filesystem::path& path);
/// Writes to a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
void write_json_atomic(const std::filesystem::path& path, const Json& j);

}  // namespace sparse_lpv::io
