#pragma once

// Run configuration and the model -> design -> verify -> simulate pipeline
// shared by the command-line tool and the acceptance checks.

#include <string>
#include <string_view>
#include <vector>

#include "sparse_lpv/analysis.hpp"
#include "sparse_lpv/io.hpp"
#include "sparse_lpv/sim.hpp"
#include "sparse_lpv/synthesis.hpp"
#include "sparse_lpv/wing_model.hpp"

namespace sparse_lpv {

enum class ModelKind { kLti, kLpv };

const char* to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& s);

struct VerifyConfig {
  int density = 1;
  int random_samples = 50;
  std::uint64_t seed = 7;
  double rel_tol = 1e-4;
};

struct SweepConfig {
  std::vector<NormKind> kinds = {NormKind::kHinf, NormKind::kH2};
  std::vector<ModelKind> models = {ModelKind::kLti, ModelKind::kLpv};
  std::vector<double> gamma0 = {0.15};
  std::vector<double> gamma_ub_sqrt = {14.0, 8.0};
  int workers = 4;
};

struct RunConfig {
  WingParams wing;
  ModelKind model = ModelKind::kLpv;
  SynthesisSpec synthesis;
  SimConfig sim;
  VerifyConfig verify;
  SweepConfig sweep;
  std::string model_file;  // AffineLPVModel JSON used instead of the wing when set
  std::string out = "out";
};

/// Complete configuration with every default spelled out.
io::Json default_config_json();
/// Fields absent from `j` keep their defaults.
RunConfig config_from_json(const io::Json& j);
/// Applies "a.b.c=value"; the value is parsed as JSON, falling back to a string.
void apply_override(io::Json& config, std::string_view assignment);
void set_path(io::Json& config, std::string_view path, io::Json value);

/// Design model: the quasi-LPV wing, or its linear-spring (k2 = 0) version.
AffineLPVModel design_model(const WingParams& wing, ModelKind kind);
/// model_file when set, the wing design model otherwise.
AffineLPVModel config_model(const RunConfig& cfg);

struct DesignRun {
  SparseDesign sparse;
  PrunedDesign pruned;
  bool pruned_ok = false;       // pruned re-solve was optimal
  io::ControllerArtifact artifact;
};

/// Reweighted l1, pruning, unit-weight re-solve and certificate audit.
/// Throws InfeasibleError / NumericalError when the first solve fails.
DesignRun run_design(const AffineLPVModel& model, const SynthesisSpec& spec);

/// grid_verify for a controller artifact (bounds from its Gamma).
NormReport verify_controller(const AffineLPVModel& model, const io::ControllerArtifact& c,
                             const VerifyConfig& cfg);

struct SweepRow {
  NormKind kind = NormKind::kHinf;
  ModelKind model = ModelKind::kLpv;
  double gamma0 = 0.0;
  double gamma_ub_sqrt = 0.0;
  std::string status;  // "ok", "certificate_failed", "infeasible", "numerical_failure"
  std::string message;
  std::vector<int> active;
  Vector sqrt_gamma;
  double objective = 0.0;
  bool certificate_passed = false;
  Metrics metrics;
  bool simulated = false;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  Metrics open_loop;
  /// LTI vs LPV overshoot/settling comparisons; entries are warnings, not failures.
  std::vector<std::string> warnings;
  std::vector<std::string> comparisons;
};

SweepResult run_sweep(const RunConfig& cfg);
std::string sweep_csv(const SweepResult& r);
io::Json sweep_report_json(const SweepResult& r);

}  // namespace sparse_lpv
