// sparse-lpv: model | design | simulate | verify | sweep
//
// Exit codes: 0 success, 1 usage/config error, 2 infeasible or failed
// certificate, 3 numerical failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sparse_lpv/error.hpp"
#include "sparse_lpv/io.hpp"
#include "sparse_lpv/pipeline.hpp"

namespace fs = std::filesystem;
using namespace sparse_lpv;
using io::Json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kInfeasible = 2, kNumerical = 3 };

struct Options {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> kind;
  std::optional<std::string> model;
  std::optional<std::string> model_file;
  std::optional<double> gamma0;
  std::optional<double> gamma_ub_sqrt;
  std::vector<std::string> overrides;
  std::string controller;
  bool open_loop = false;
};

RunConfig load(const Options& o) {
  Json j = o.config.empty() ? Json::object() : io::read_json_file(o.config);
  if (const char* tol = std::getenv("SPARSE_LPV_SOLVER_TOL")) {
    char* end = nullptr;
    const double v = std::strtod(tol, &end);
    if (end == tol || !(v > 0.0)) throw ConfigError("SPARSE_LPV_SOLVER_TOL must be a positive number");
    set_path(j, "synthesis.solver.gap_tolerance", v);
    set_path(j, "synthesis.solver.primal_tolerance", v);
  }
  for (const auto& s : o.overrides) apply_override(j, s);
  if (o.out) set_path(j, "out", *o.out);
  if (o.seed) set_path(j, "sim.seed", *o.seed);
  if (o.kind) set_path(j, "synthesis.kind", *o.kind);
  if (o.model) set_path(j, "model", *o.model);
  if (o.model_file) set_path(j, "model_file", *o.model_file);
  if (o.gamma0) set_path(j, "synthesis.gamma0", *o.gamma0);
  if (o.gamma_ub_sqrt) set_path(j, "synthesis.gamma_ub_sqrt", *o.gamma_ub_sqrt);
  return config_from_json(j);
}

std::string history_csv(const io::ControllerArtifact& a) {
  const Eigen::Index n = a.gamma.size();
  std::string out = "iteration,status,objective,above_threshold";
  for (Eigen::Index i = 1; i <= n; ++i) out += ",sqrt_gamma_" + std::to_string(i);
  for (Eigen::Index i = 1; i <= n; ++i) out += ",alpha_" + std::to_string(i);
  out += "\n";
  for (const auto& r : a.history) {
    out += std::to_string(r.iteration) + "," + r.status + "," + io::format_double(r.objective) + "," +
           std::to_string(r.above_threshold);
    for (Eigen::Index i = 0; i < r.gamma.size(); ++i) out += "," + io::format_double(std::sqrt(std::max(r.gamma[i], 0.0)));
    for (Eigen::Index i = 0; i < r.alpha.size(); ++i) out += "," + io::format_double(r.alpha[i]);
    out += "\n";
  }
  return out;
}

bool has_feedthrough(const AffineLPVModel& model) {
  const AffineMatrix& dw = model.term(SystemMatrix::kDw);
  if (dw.constant.size() > 0 && dw.constant.cwiseAbs().maxCoeff() > 0.0) return true;
  for (const Matrix& c : dw.coefficients) {
    if (c.size() > 0 && c.cwiseAbs().maxCoeff() > 0.0) return true;
  }
  return false;
}

int cmd_model(const RunConfig& cfg) {
  const fs::path out(cfg.out);
  io::write_json_atomic(out / "model.json", io::model_to_json(config_model(cfg)));
  std::cout << "wrote " << (out / "model.json").string() << "\n";
  return kOk;
}

int cmd_design(const RunConfig& cfg) {
  const fs::path out(cfg.out);
  const AffineLPVModel model = config_model(cfg);
  if (cfg.synthesis.kind == NormKind::kH2 && has_feedthrough(model)) {
    std::cerr << "infeasible: H2 requires D_w = 0 (the performance channel has disturbance feedthrough)\n";
    return kInfeasible;
  }
  const DesignRun run = run_design(model, cfg.synthesis);
  const io::ControllerArtifact& a = run.artifact;
  io::write_json_atomic(out / "controller.json", io::controller_to_json(a));
  io::write_file_atomic(out / "iteration_history.csv", history_csv(a));
  const SynthesisResult& cert = run.pruned_ok ? run.pruned.reduced : run.sparse.last();
  Json c = {{"passed", a.certificate_passed},
            {"tolerance", cfg.synthesis.certificate_tolerance},
            {"max_eigenvalue", a.max_eigenvalue},
            {"worst_family", cert.worst_family},
            {"worst_vertex", cert.worst_vertex},
            {"vertex_max_eigenvalue", a.vertex_max_eigenvalue},
            {"message", a.message}};
  io::write_json_atomic(out / "certificate.json", c);

  std::cout << to_string(cfg.synthesis.kind) << " design on " << to_string(cfg.model) << " model: "
            << run.sparse.history.size() << " solves, active actuators";
  for (int i : a.active) std::cout << " " << i + 1;
  std::cout << "\nsqrt(Gamma) =";
  for (Eigen::Index i = 0; i < a.gamma.size(); ++i) std::cout << " " << std::sqrt(std::max(a.gamma[i], 0.0));
  std::cout << "\ncertificate " << (a.certificate_passed ? "passed" : "FAILED") << " (max eigenvalue "
            << a.max_eigenvalue << ")\n";
  if (!a.message.empty()) std::cerr << a.message << "\n";
  return a.certificate_passed ? kOk : kInfeasible;
}

int cmd_simulate(const RunConfig& cfg, const Options& o) {
  if (o.open_loop == !o.controller.empty()) {
    throw ConfigError("simulate needs exactly one of --controller PATH or --open-loop");
  }
  const fs::path out(cfg.out);
  const WingPlant plant = build_wing(cfg.wing);
  SimConfig sim = cfg.sim;
  if (!o.controller.empty()) sim.K = io::controller_from_json(io::read_json_file(o.controller)).K;
  const Trajectory traj = simulate(plant, sim);
  const Metrics m = metrics(traj, cfg.wing.output_weights(), sim.settle_band);
  io::write_file_atomic(out / "trajectory.csv", io::trajectory_csv(traj));
  io::write_json_atomic(out / "metrics.json", io::metrics_to_json(m));
  std::cout << "overshoot " << m.overshoot << " rad, settling " << m.settling_time << " s, rms(z) " << m.rms_z
            << ", box violations " << m.box_violations << (m.diverged ? ", DIVERGED" : "") << "\n";
  return m.diverged ? kNumerical : kOk;
}

int cmd_verify(const RunConfig& cfg, const Options& o) {
  if (o.controller.empty()) throw ConfigError("verify needs --controller PATH");
  const fs::path out(cfg.out);
  const io::ControllerArtifact c = io::controller_from_json(io::read_json_file(o.controller));
  const AffineLPVModel model = config_model(cfg);
  const NormReport r = verify_controller(model, c, cfg.verify);
  io::write_json_atomic(out / "norm_report.json", io::norm_report_to_json(r));
  io::write_file_atomic(out / "norm_report.csv", io::norm_report_csv(r));
  std::cout << r.samples.size() << " samples, worst performance norm " << r.worst_performance << " (bound "
            << r.gamma0 << "): " << (r.passed() ? "pass" : "FAIL") << "\n";
  for (const auto& f : r.failures) std::cerr << f << "\n";
  return r.passed() ? kOk : kInfeasible;
}

int cmd_sweep(const RunConfig& cfg) {
  const fs::path out(cfg.out);
  const SweepResult r = run_sweep(cfg);
  io::write_file_atomic(out / "sweep.csv", sweep_csv(r));
  io::write_json_atomic(out / "sweep_report.json", sweep_report_json(r));
  for (const auto& row : r.rows) {
    std::cout << to_string(row.kind) << " " << to_string(row.model) << " gamma0=" << row.gamma0 << " sqrt_gamma_ub=" << row.gamma_ub_sqrt
              << ": " << row.status << ", " << row.active.size() << " active\n";
  }
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse-actuation LPV controller synthesis for the flexible wing"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--out", o.out, "output directory (config: out)");
  app.add_option("--seed", o.seed, "disturbance seed (config: sim.seed)");
  app.add_option("--kind", o.kind, "hinf or h2 (config: synthesis.kind)")
      ->check(CLI::IsMember({"hinf", "h2"}));
  app.add_option("--model", o.model, "lti or lpv design model (config: model)")
      ->check(CLI::IsMember({"lti", "lpv"}));
  app.add_option("--model-file", o.model_file, "AffineLPVModel JSON replacing the wing (config: model_file)")
      ->check(CLI::ExistingFile);
  app.add_option("--gamma0", o.gamma0, "performance level (config: synthesis.gamma0)");
  app.add_option("--gamma-ub-sqrt", o.gamma_ub_sqrt, "bound on sqrt(gamma_i) (config: synthesis.gamma_ub_sqrt)");
  app.add_option("--set", o.overrides, "override a config field, e.g. --set sim.horizon=100");

  auto* model = app.add_subcommand("model", "write the affine LPV model JSON");
  auto* design = app.add_subcommand("design", "reweighted l1 synthesis, pruning and certificate");
  auto* simulate_cmd = app.add_subcommand("simulate", "nonlinear simulation of a controller");
  simulate_cmd->add_option("--controller", o.controller, "controller JSON from design");
  simulate_cmd->add_flag("--open-loop", o.open_loop, "simulate without control");
  auto* verify = app.add_subcommand("verify", "frozen-parameter norm audit of a controller");
  verify->add_option("--controller", o.controller, "controller JSON from design")->required();
  auto* sweep = app.add_subcommand("sweep", "norm kind x model kind x sqrt(gamma_ub) table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    const RunConfig cfg = load(o);
    if (model->parsed()) return cmd_model(cfg);
    if (design->parsed()) return cmd_design(cfg);
    if (simulate_cmd->parsed()) return cmd_simulate(cfg, o);
    if (verify->parsed()) return cmd_verify(cfg, o);
    if (sweep->parsed()) return cmd_sweep(cfg);
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kInfeasible;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const DimensionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
