#include "sparse_lpv/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <future>
#include <sstream>

#include "sparse_lpv/error.hpp"

namespace sparse_lpv {
namespace {

using io::Json;

const char* to_string(SymConvention s) { return s == SymConvention::kFull ? "full" : "half"; }
const char* to_string(GramianForm g) { return g == GramianForm::kSchur ? "schur" : "direct"; }

template <typename T>
T get(const Json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

std::string join_active(const std::vector<int>& active) {
  std::string s;
  for (std::size_t i = 0; i < active.size(); ++i) s += (i ? ";" : "") + std::to_string(active[i] + 1);
  return s;
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += (c == '\n' ? ' ' : c);
  }
  return out + "\"";
}

}  // namespace

const char* to_string(ModelKind kind) { return kind == ModelKind::kLti ? "lti" : "lpv"; }

ModelKind parse_model_kind(const std::string& s) {
  if (s == "lti") return ModelKind::kLti;
  if (s == "lpv") return ModelKind::kLpv;
  throw ConfigError("unknown model kind '" + s + "' (expected lti or lpv)");
}

Json default_config_json() {
  const RunConfig d;
  const SynthesisSpec& s = d.synthesis;
  Json j;
  j["wing"] = io::wing_params_to_json(d.wing);
  j["model"] = to_string(d.model);
  j["synthesis"] = {{"kind", to_string(s.kind)},
                    {"gamma0", s.gamma0},
                    {"gamma_ub_sqrt", 14.0},
                    {"epsilon", s.epsilon},
                    {"max_iterations", s.max_iterations},
                    {"convergence_tolerance", s.convergence_tolerance},
                    {"prune_threshold", s.prune_threshold},
                    {"margin", s.margin},
                    {"gamma_min", s.gamma_min},
                    {"certificate_tolerance", s.certificate_tolerance},
                    {"sym", to_string(s.sym)},
                    {"gramian_form", to_string(s.gramian_form)},
                    {"solver",
                     {{"gap_tolerance", s.solver.gap_tolerance},
                      {"primal_tolerance", s.solver.primal_tolerance},
                      {"dual_tolerance", s.solver.dual_tolerance},
                      {"infeasibility_tolerance", s.solver.infeasibility_tolerance},
                      {"max_iterations", s.solver.max_iterations}}}};
  j["sim"] = {{"dt", d.sim.dt},
              {"horizon", d.sim.horizon},
              {"theta0", d.sim.theta0},
              {"seed", d.sim.seed},
              {"record_every", d.sim.record_every},
              {"settle_band", d.sim.settle_band},
              {"disturbance",
               {{"amplitude", d.sim.disturbance.amplitude},
                {"omega", d.sim.disturbance.omega},
                {"sinusoid", d.sim.disturbance.sinusoid},
                {"per_bar", d.sim.disturbance.per_bar}}}};
  j["verify"] = {{"density", d.verify.density},
                 {"random_samples", d.verify.random_samples},
                 {"seed", d.verify.seed},
                 {"rel_tol", d.verify.rel_tol}};
  Json kinds = Json::array();
  for (NormKind k : d.sweep.kinds) kinds.push_back(to_string(k));
  Json models = Json::array();
  for (ModelKind m : d.sweep.models) models.push_back(to_string(m));
  j["sweep"] = {{"kinds", kinds},
                {"models", models},
                {"gamma0", d.sweep.gamma0},
                {"gamma_ub_sqrt", d.sweep.gamma_ub_sqrt},
                {"workers", d.sweep.workers}};
  j["model_file"] = nullptr;
  j["out"] = d.out;
  return j;
}

RunConfig config_from_json(const Json& user) {
  Json j = default_config_json();
  j.merge_patch(user);
  RunConfig c;
  c.wing = io::wing_params_from_json(j.at("wing"));
  c.model = parse_model_kind(get<std::string>(j, "model"));

  const Json& s = j.at("synthesis");
  SynthesisSpec& spec = c.synthesis;
  spec.kind = parse_norm_kind(get<std::string>(s, "kind"));
  spec.gamma0 = get<double>(s, "gamma0");
  if (s.contains("gamma_ub_sqrt") && !s.at("gamma_ub_sqrt").is_null()) {
    const double r = get<double>(s, "gamma_ub_sqrt");
    spec.gamma_ub = r * r;
  }
  if (s.contains("alpha") && !s.at("alpha").is_null()) spec.alpha = io::vector_from_json(s.at("alpha"));
  spec.epsilon = get<double>(s, "epsilon");
  spec.max_iterations = get<int>(s, "max_iterations");
  spec.convergence_tolerance = get<double>(s, "convergence_tolerance");
  spec.prune_threshold = get<double>(s, "prune_threshold");
  spec.margin = get<double>(s, "margin");
  spec.gamma_min = get<double>(s, "gamma_min");
  spec.certificate_tolerance = get<double>(s, "certificate_tolerance");
  const auto sym = get<std::string>(s, "sym");
  if (sym != "full" && sym != "half") throw ConfigError("synthesis.sym must be full or half");
  spec.sym = sym == "full" ? SymConvention::kFull : SymConvention::kHalf;
  const auto form = get<std::string>(s, "gramian_form");
  if (form != "schur" && form != "direct") throw ConfigError("synthesis.gramian_form must be schur or direct");
  spec.gramian_form = form == "schur" ? GramianForm::kSchur : GramianForm::kDirect;
  const Json& sv = s.at("solver");
  spec.solver.gap_tolerance = get<double>(sv, "gap_tolerance");
  spec.solver.primal_tolerance = get<double>(sv, "primal_tolerance");
  spec.solver.dual_tolerance = get<double>(sv, "dual_tolerance");
  spec.solver.infeasibility_tolerance = get<double>(sv, "infeasibility_tolerance");
  spec.solver.max_iterations = get<int>(sv, "max_iterations");
  spec.validate(c.wing.n);

  const Json& sim = j.at("sim");
  c.sim.dt = get<double>(sim, "dt");
  c.sim.horizon = get<double>(sim, "horizon");
  c.sim.theta0 = get<double>(sim, "theta0");
  if (sim.contains("x0") && !sim.at("x0").is_null()) c.sim.x0 = io::vector_from_json(sim.at("x0"));
  c.sim.seed = get<std::uint64_t>(sim, "seed");
  c.sim.record_every = get<int>(sim, "record_every");
  c.sim.settle_band = get<double>(sim, "settle_band");
  const Json& dist = sim.at("disturbance");
  c.sim.disturbance.amplitude = get<double>(dist, "amplitude");
  c.sim.disturbance.omega = get<double>(dist, "omega");
  c.sim.disturbance.sinusoid = get<bool>(dist, "sinusoid");
  c.sim.disturbance.per_bar = get<bool>(dist, "per_bar");
  c.sim.validate(c.wing.n);

  const Json& v = j.at("verify");
  c.verify.density = get<int>(v, "density");
  c.verify.random_samples = get<int>(v, "random_samples");
  c.verify.seed = get<std::uint64_t>(v, "seed");
  c.verify.rel_tol = get<double>(v, "rel_tol");
  if (c.verify.density < 1 || c.verify.random_samples < 0) throw ConfigError("verify: bad grid settings");

  const Json& sw = j.at("sweep");
  c.sweep.kinds.clear();
  for (const auto& k : get<std::vector<std::string>>(sw, "kinds")) c.sweep.kinds.push_back(parse_norm_kind(k));
  c.sweep.models.clear();
  for (const auto& m : get<std::vector<std::string>>(sw, "models")) c.sweep.models.push_back(parse_model_kind(m));
  c.sweep.gamma0 = get<std::vector<double>>(sw, "gamma0");
  c.sweep.gamma_ub_sqrt = get<std::vector<double>>(sw, "gamma_ub_sqrt");
  for (double g : c.sweep.gamma0) {
    if (!(g > 0.0)) throw ConfigError("sweep.gamma0 entries must be positive");
  }
  c.sweep.workers = std::max(1, get<int>(sw, "workers"));
  if (j.contains("model_file") && !j.at("model_file").is_null()) c.model_file = get<std::string>(j, "model_file");
  c.out = get<std::string>(j, "out");
  return c;
}

void set_path(Json& config, std::string_view path, Json value) {
  Json* node = &config;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key(path.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start));
    if (key.empty()) throw ConfigError("bad override path '" + std::string(path) + "'");
    if (!node->is_object()) *node = Json::object();
    if (dot == std::string_view::npos) {
      (*node)[key] = std::move(value);
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

void apply_override(Json& config, std::string_view assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override must look like path=value, got '" + std::string(assignment) + "'");
  }
  const std::string text(assignment.substr(eq + 1));
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  set_path(config, assignment.substr(0, eq), std::move(value));
}

AffineLPVModel design_model(const WingParams& wing, ModelKind kind) {
  WingParams p = wing;
  if (kind == ModelKind::kLti) p.k2 = 0.0;
  return wing_to_lpv(build_wing(p));
}

AffineLPVModel config_model(const RunConfig& cfg) {
  if (cfg.model_file.empty()) return design_model(cfg.wing, cfg.model);
  return io::model_from_json(io::read_json_file(cfg.model_file));
}

DesignRun run_design(const AffineLPVModel& model, const SynthesisSpec& spec) {
  DesignRun run;
  run.sparse = reweighted_l1(model, spec);
  const SynthesisResult& last = run.sparse.last();
  run.pruned = prune_and_resolve(model, spec, last);
  run.pruned_ok = run.pruned.reduced.optimal();

  io::ControllerArtifact& a = run.artifact;
  a.kind = spec.kind;
  a.gamma0 = spec.gamma0;
  a.gamma_ub = spec.gamma_ub;
  for (std::size_t j = 0; j < run.sparse.history.size(); ++j) {
    const SynthesisResult& r = run.sparse.history[j];
    io::IterationRecord rec;
    rec.iteration = static_cast<int>(j);
    rec.status = sdp::to_string(r.status);
    rec.objective = r.objective;
    rec.alpha = r.alpha;
    rec.gamma = r.gamma;
    rec.above_threshold = static_cast<int>(actuators_to_keep(r, spec.prune_threshold).size());
    a.history.push_back(std::move(rec));
  }

  const SynthesisResult* cert = &last;
  if (run.pruned_ok) {
    const SynthesisResult& red = run.pruned.reduced;
    cert = &red;
    a.K = run.pruned.K;
    a.gamma = run.pruned.gamma;
    a.active = run.pruned.active;
    a.X = red.X;
    a.Z = red.Z;
    a.W = Matrix::Zero(model.n_u(), model.n_x());
    for (std::size_t j = 0; j < a.active.size(); ++j) {
      a.W.row(a.active[j]) = red.W.row(static_cast<Eigen::Index>(j));
    }
  } else {
    a.K = last.K;
    a.gamma = last.gamma;
    a.X = last.X;
    a.Z = last.Z;
    a.W = last.W;
    for (int i = 0; i < model.n_u(); ++i) a.active.push_back(i);
    a.message = "pruned re-solve failed (" + run.pruned.reduced.message + "); keeping the reweighted design";
  }
  a.vertex_max_eigenvalue = cert->vertex_max_eigenvalue;
  a.max_eigenvalue = cert->max_eigenvalue;
  a.certificate_passed = cert->certificate_passed(spec.certificate_tolerance);
  if (!a.certificate_passed && a.message.empty()) {
    std::ostringstream os;
    os << "certificate failed: max eigenvalue " << cert->max_eigenvalue << " in family '" << cert->worst_family
       << "'";
    if (cert->worst_vertex >= 0) os << " at vertex " << cert->worst_vertex;
    a.message = os.str();
  }
  return run;
}

NormReport verify_controller(const AffineLPVModel& model, const io::ControllerArtifact& c,
                             const VerifyConfig& cfg) {
  VerifyTarget target;
  target.kind = c.kind;
  target.gamma0 = c.gamma0;
  target.sqrt_gamma = c.gamma.cwiseMax(0.0).cwiseSqrt();
  target.rel_tol = cfg.rel_tol;
  GridOptions opts;
  opts.density = cfg.density;
  opts.random_samples = cfg.random_samples;
  opts.seed = cfg.seed;
  return grid_verify(model, c.K, target, opts);
}

SweepResult run_sweep(const RunConfig& cfg) {
  struct Cell {
    NormKind kind;
    ModelKind model;
    double gamma0;
    double gub;
  };
  std::vector<Cell> cells;
  for (NormKind k : cfg.sweep.kinds) {
    for (ModelKind m : cfg.sweep.models) {
      for (double g0 : cfg.sweep.gamma0) {
        for (double g : cfg.sweep.gamma_ub_sqrt) cells.push_back({k, m, g0, g});
      }
    }
  }
  const WingPlant truth = build_wing(cfg.wing);
  const Vector zw = cfg.wing.output_weights();

  SweepResult result;
  result.rows.resize(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const Cell& cell = cells[i];
      SweepRow& row = result.rows[i];
      row.kind = cell.kind;
      row.model = cell.model;
      row.gamma0 = cell.gamma0;
      row.gamma_ub_sqrt = cell.gub;
      SynthesisSpec spec = cfg.synthesis;
      spec.kind = cell.kind;
      spec.gamma0 = cell.gamma0;
      spec.gamma_ub = cell.gub * cell.gub;
      try {
        const DesignRun run = run_design(design_model(cfg.wing, cell.model), spec);
        const io::ControllerArtifact& a = run.artifact;
        row.active = a.active;
        row.sqrt_gamma = a.gamma.cwiseMax(0.0).cwiseSqrt();
        row.objective = run.pruned_ok ? run.pruned.reduced.objective : run.sparse.last().objective;
        row.certificate_passed = a.certificate_passed;
        row.status = a.certificate_passed ? "ok" : "certificate_failed";
        row.message = a.message;
        SimConfig sim = cfg.sim;
        sim.K = a.K;
        row.metrics = metrics(simulate(truth, sim), zw, sim.settle_band);
        row.simulated = true;
      } catch (const InfeasibleError& e) {
        row.status = "infeasible";
        row.message = e.what();
      } catch (const NumericalError& e) {
        row.status = "numerical_failure";
        row.message = e.what();
      } catch (const std::exception& e) {
        row.status = "error";
        row.message = e.what();
      }
    }
  };
  const int workers = std::min<int>(cfg.sweep.workers, static_cast<int>(cells.size()));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::future<void>> jobs;
    for (int w = 0; w < workers; ++w) jobs.push_back(std::async(std::launch::async, worker));
    for (auto& j : jobs) j.get();
  }

  SimConfig open = cfg.sim;
  open.K.reset();
  result.open_loop = metrics(simulate(truth, open), zw, open.settle_band);

  auto compare = [&](NormKind k, double g0, double g) {
    const SweepRow* lti = nullptr;
    const SweepRow* lpv = nullptr;
    for (const SweepRow& r : result.rows) {
      if (r.kind != k || r.gamma0 != g0 || r.gamma_ub_sqrt != g || !r.simulated) continue;
      (r.model == ModelKind::kLti ? lti : lpv) = &r;
    }
    std::ostringstream tag;
    tag << to_string(k) << " gamma0=" << g0 << " sqrt_gamma_ub=" << g;
    if (!lti || !lpv) {
      result.warnings.push_back(tag.str() + ": LTI/LPV comparison unavailable (a design failed)");
      return;
    }
    std::ostringstream os;
    os << tag.str() << ": overshoot lti " << lti->metrics.overshoot << " vs lpv " << lpv->metrics.overshoot
       << ", settling lti " << lti->metrics.settling_time << " vs lpv " << lpv->metrics.settling_time;
    result.comparisons.push_back(os.str());
    if (!(lti->metrics.overshoot > lpv->metrics.overshoot)) {
      result.warnings.push_back(tag.str() + ": LTI design does not have higher overshoot than LPV");
    }
    if (!(lti->metrics.settling_time > lpv->metrics.settling_time)) {
      result.warnings.push_back(tag.str() + ": LTI design does not have longer settling time than LPV");
    }
  };
  const bool both = std::count(cfg.sweep.models.begin(), cfg.sweep.models.end(), ModelKind::kLti) > 0 &&
                    std::count(cfg.sweep.models.begin(), cfg.sweep.models.end(), ModelKind::kLpv) > 0;
  if (both) {
    for (NormKind k : cfg.sweep.kinds) {
      for (double g0 : cfg.sweep.gamma0) {
        for (double g : cfg.sweep.gamma_ub_sqrt) compare(k, g0, g);
      }
    }
  }
  return result;
}

std::string sweep_csv(const SweepResult& r) {
  std::string out =
      "kind,model,gamma0,gamma_ub_sqrt,status,active_count,active,sum_sqrt_gamma,max_sqrt_gamma,objective,"
      "certificate_passed,overshoot,settling_time,settled,rms_z,u_inf_max,u_inf,box_violation_steps,"
      "diverged,message\n";
  for (const SweepRow& row : r.rows) {
    std::string u_inf;
    for (Eigen::Index i = 0; i < row.metrics.u_inf.size(); ++i) {
      u_inf += (i ? ";" : "") + io::format_double(row.metrics.u_inf[i]);
    }
    const bool has = row.sqrt_gamma.size() > 0;
    out += std::string(to_string(row.kind)) + "," + to_string(row.model) + "," +
           io::format_double(row.gamma0) + "," + io::format_double(row.gamma_ub_sqrt) + "," + row.status + "," + std::to_string(row.active.size()) +
           "," + join_active(row.active) + "," + (has ? io::format_double(row.sqrt_gamma.sum()) : "") + "," +
           (has ? io::format_double(row.sqrt_gamma.maxCoeff()) : "") + "," + io::format_double(row.objective) +
           "," + (row.certificate_passed ? "1" : "0") + ",";
    if (row.simulated) {
      const Metrics& m = row.metrics;
      out += io::format_double(m.overshoot) + "," + io::format_double(m.settling_time) + "," +
             (m.settled ? "1" : "0") + "," + io::format_double(m.rms_z) + "," +
             io::format_double(m.u_inf.size() ? m.u_inf.maxCoeff() : 0.0) + "," + u_inf + "," +
             std::to_string(m.box_violations) + "," + (m.diverged ? "1" : "0");
    } else {
      out += ",,,,,,,";
    }
    out += "," + quoted(row.message) + "\n";
  }
  return out;
}

Json sweep_report_json(const SweepResult& r) {
  Json j;
  j["open_loop"] = io::metrics_to_json(r.open_loop);
  j["comparisons"] = r.comparisons;
  j["warnings"] = r.warnings;
  Json rows = Json::array();
  for (const SweepRow& row : r.rows) {
    Json e = {{"kind", to_string(row.kind)},
              {"model", to_string(row.model)},
              {"gamma0", row.gamma0},
              {"gamma_ub_sqrt", row.gamma_ub_sqrt},
              {"status", row.status},
              {"active_actuators", row.active},
              {"sqrt_gamma", io::vector_to_json(row.sqrt_gamma)},
              {"objective", row.objective},
              {"certificate_passed", row.certificate_passed},
              {"message", row.message}};
    if (row.simulated) e["metrics"] = io::metrics_to_json(row.metrics);
    rows.push_back(std::move(e));
  }
  j["rows"] = std::move(rows);
  return j;
}

}  // namespace sparse_lpv
