#include "spdalp/experiment.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include <openssl/evp.h>

#include "spdalp/bregman.hpp"
#include "spdalp/errors.hpp"
#include "spdalp/format.hpp"
#include "spdalp/mdp_io.hpp"

namespace spdalp {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

namespace {

Vector vector_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

fs::path resolve(const fs::path& base_dir, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
}

SpdConfig spd_from_json(const json& j) {
  SpdConfig c;
  c.iterations = j.value("T", c.iterations);
  if (j.contains("eta")) {
    const json& eta = j["eta"];
    if (eta.is_string()) {
      if (eta.get<std::string>() != "inv-sqrt") throw DomainError("spd.eta must be \"inv-sqrt\" or a number");
      c.eta = LearningRate::inv_sqrt();
    } else {
      c.eta = LearningRate::constant(eta.get<double>());
    }
  }
  if (j.contains("beta")) {
    const json& beta = j["beta"];
    if (beta.is_string()) {
      if (beta.get<std::string>() != "T-quarter") throw DomainError("spd.beta must be \"T-quarter\" or a number");
      c.beta = DualRadius::quarter_power();
    } else {
      c.beta = DualRadius::fixed(beta.get<double>());
    }
  }
  c.geometry = j.value("geometry", c.geometry);
  c.radius = j.value("R", c.radius);
  if (j.contains("dual_mode")) c.dual_mode = parse_dual_mode(j["dual_mode"].get<std::string>());
  if (j.contains("dual_sign")) c.dual_sign = parse_dual_sign(j["dual_sign"].get<std::string>());
  if (j.contains("theta0")) c.theta0 = vector_from_json(j["theta0"]);
  c.stride = j.value("stride", c.stride);
  c.check_invariants = j.value("check_invariants", false);
  if (c.iterations < 1) throw DomainError("spd.T must be at least 1");
  return c;
}

PenaltyConfig penalty_from_json(const json& j, std::vector<double>& omegas) {
  PenaltyConfig c;
  c.iterations = j.value("T", c.iterations);
  if (j.contains("eta")) c.eta = j["eta"].get<double>();
  if (!j.contains("omega")) throw DomainError("penalty.omega is required (a number or a list)");
  const json& omega = j["omega"];
  omegas = omega.is_array() ? omega.get<std::vector<double>>() : std::vector<double>{omega.get<double>()};
  if (omegas.empty()) throw DomainError("penalty.omega list is empty");
  for (double w : omegas) {
    if (!(w > 0.0)) throw DomainError("penalty factors must be positive");
  }
  c.omega = omegas.front();
  c.radius = j.value("R", c.radius);
  if (j.contains("gradient")) c.gradient = parse_penalty_gradient(j["gradient"].get<std::string>());
  if (j.contains("theta0")) c.theta0 = vector_from_json(j["theta0"]);
  c.stride = j.value("stride", c.stride);
  if (c.iterations < 1) throw DomainError("penalty.T must be at least 1");
  return c;
}

}  // namespace

ExperimentConfig config_from_json(const json& j, const fs::path& base_dir) {
  ExperimentConfig cfg;
  cfg.source = j;
  try {
    const json& env = j.at("env");
    if (env.contains("queue")) {
      const json& q = env["queue"];
      QueueSpec spec;
      spec.buffer = q.value("L", spec.buffer);
      spec.arrival = q.value("rho", spec.arrival);
      if (q.contains("actions")) spec.actions = q["actions"].get<std::vector<double>>();
      spec.gamma = q.value("gamma", spec.gamma);
      if (q.contains("kernel")) spec.kernel = parse_queue_kernel(q["kernel"].get<std::string>());
      spec.validate();
      cfg.queue = spec;
    } else if (env.contains("mdp")) {
      cfg.mdp_file = resolve(base_dir, env["mdp"].get<std::string>());
    } else {
      throw DomainError("env needs a \"queue\" block or an \"mdp\" path");
    }
    if (env.contains("base_policies")) {
      for (const json& p : env["base_policies"]) cfg.base_policies.push_back(policy_from_json(p));
    }

    if (j.contains("features")) {
      const json& f = j["features"];
      if (f.contains("file")) {
        cfg.features.mode = FeatureMode::file;
        cfg.features.file = resolve(base_dir, f["file"].get<std::string>());
      } else {
        const std::string mode = f.value("mode", std::string("exact"));
        if (mode == "exact") {
          cfg.features.mode = FeatureMode::exact;
        } else if (mode == "empirical") {
          cfg.features.mode = FeatureMode::empirical;
        } else {
          throw DomainError("features.mode must be exact or empirical");
        }
        cfg.features.horizon = f.value("horizon", cfg.features.horizon);
        cfg.features.seed = f.value("seed", cfg.features.seed);
      }
    }

    if (j.contains("spd")) cfg.spd = spd_from_json(j["spd"]);
    if (j.contains("penalty")) cfg.penalty = penalty_from_json(j["penalty"], cfg.penalty_omegas);
    cfg.trials = j.value("trials", cfg.trials);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.jobs = j.value("jobs", cfg.jobs);
    if (j.contains("oracle")) cfg.oracle_resolution = j["oracle"].value("resolution", cfg.oracle_resolution);
    if (j.contains("histogram")) cfg.histogram_horizon = j["histogram"].value("horizon", cfg.histogram_horizon);
    if (j.contains("output")) cfg.output = resolve(base_dir, j["output"].get<std::string>());
  } catch (const json::exception& e) {
    throw DomainError(std::string("malformed experiment config: ") + e.what());
  }
  if (cfg.trials < 1) throw DomainError("trials must be at least 1");
  if (cfg.jobs < 1) throw DomainError("jobs must be at least 1");
  return cfg;
}

ExperimentConfig read_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw DomainError(path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

Environment load_environment(const ExperimentConfig& cfg) {
  if (cfg.queue) {
    Mdp mdp = build_queue_mdp(*cfg.queue);
    std::vector<RandomizedPolicy> base = cfg.base_policies;
    if (base.empty()) {
      const auto pair = make_base_policies(*cfg.queue);
      base.assign(pair.begin(), pair.end());
    }
    return {std::move(mdp), std::move(base)};
  }
  Mdp mdp = read_mdp(cfg.mdp_file);
  if (cfg.base_policies.empty()) throw DomainError("an MDP file environment needs env.base_policies");
  return {std::move(mdp), cfg.base_policies};
}

FeatureMatrix load_features(const ExperimentConfig& cfg, const Environment& env) {
  switch (cfg.features.mode) {
    case FeatureMode::exact:
      return build_features_exact(env.mdp, env.base);
    case FeatureMode::empirical:
      return build_features_empirical(MdpTransitionSampler(env.mdp), env.base, cfg.features.horizon,
                                      cfg.features.seed);
    case FeatureMode::file: {
      FeatureMatrix fm = read_features_csv(cfg.features.file, env.mdp.actions());
      if (fm.pairs() != env.mdp.pairs()) throw DimensionError("feature file rows do not match the MDP");
      return fm;
    }
  }
  throw DomainError("unknown feature mode");
}

// ---------------------------------------------------------------------------
// Grid oracle

GridOracleResult oracle_grid_search(const Mdp& mdp, std::span<const RandomizedPolicy> base, int resolution) {
  const auto d = static_cast<Eigen::Index>(base.size());
  if (d < 1) throw DimensionError("need at least one base policy");
  if (d > 3) throw UnsupportedError("grid oracle supports at most three base policies");
  if (resolution < 2) throw DomainError("grid resolution must be at least 2");
  const FeatureMatrix fm = build_features_exact(mdp, base);
  const Vector alp_costs = fm.psi.transpose() * mdp.flat_costs();

  GridOracleResult best;
  best.cost = std::numeric_limits<double>::infinity();
  best.alp_objective = std::numeric_limits<double>::infinity();
  const double k = resolution;
  auto visit = [&](const Vector& omega) {
    ++best.grid_points;
    const double alp = alp_costs.dot(omega);
    if (alp < best.alp_objective) {
      best.alp_objective = alp;
      best.alp_omega = omega;
    }
    const double cost = policy_cost(mdp, occupation_measure(mdp, mixture_policy(base, omega)));
    if (cost < best.cost) {
      best.cost = cost;
      best.omega = omega;
      best.alp_at_omega = alp;
    }
  };

  // Enumerate from the vertex e_1 outwards so ties keep the most weight on
  // the lowest-index policies.
  Vector omega(d);
  if (d == 1) {
    omega(0) = 1.0;
    visit(omega);
  } else if (d == 2) {
    for (int i = resolution; i >= 0; --i) {
      omega << i / k, (resolution - i) / k;
      visit(omega);
    }
  } else {
    for (int i = resolution; i >= 0; --i) {
      for (int jj = resolution - i; jj >= 0; --jj) {
        omega << i / k, jj / k, (resolution - i - jj) / k;
        visit(omega);
      }
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Aggregation

StatSummary summarize(std::span<const double> values) {
  StatSummary s;
  if (values.empty()) return s;
  const auto n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / n;
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(sq / (n - 1.0));
  }
  s.ci95 = 1.96 * s.sd / std::sqrt(n);
  return s;
}

std::vector<SummaryRow> aggregate_traces(std::span<const std::vector<TraceRecord>> trials) {
  std::vector<SummaryRow> rows;
  if (trials.empty()) return rows;
  const std::size_t checkpoints = trials.front().size();
  for (const auto& trial : trials) {
    if (trial.size() != checkpoints) throw DimensionError("trials have different checkpoint counts");
  }
  std::vector<double> obj(trials.size()), vio(trials.size()), aobj(trials.size()), avio(trials.size());
  for (std::size_t c = 0; c < checkpoints; ++c) {
    const std::int64_t t = trials.front()[c].t;
    for (std::size_t k = 0; k < trials.size(); ++k) {
      const TraceRecord& r = trials[k][c];
      if (r.t != t) throw DimensionError("trials have different checkpoint grids");
      obj[k] = r.objective;
      vio[k] = r.violation;
      aobj[k] = r.avg_objective;
      avio[k] = r.avg_violation;
    }
    rows.push_back({t, summarize(obj), summarize(vio), summarize(aobj), summarize(avio)});
  }
  return rows;
}

namespace {

void put_stats(std::ostream& out, const StatSummary& s) {
  out << ',' << format_double(s.mean) << ',' << format_double(s.sd) << ',' << format_double(s.ci95);
}

std::string summary_csv(std::span<const SummaryRow> rows) {
  std::ostringstream out;
  out << "t";
  for (const char* col : {"objective", "violation", "avg_objective", "avg_violation"}) {
    out << ',' << col << "_mean," << col << "_sd," << col << "_ci95";
  }
  out << '\n';
  for (const SummaryRow& r : rows) {
    out << r.t;
    put_stats(out, r.objective);
    put_stats(out, r.violation);
    put_stats(out, r.avg_objective);
    put_stats(out, r.avg_violation);
    out << '\n';
  }
  return out.str();
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json stats_json(const StatSummary& s) { return {{"mean", s.mean}, {"sd", s.sd}, {"ci95", s.ci95}}; }

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json oracle_json(const GridOracleResult& r) {
  return {{"omega", vector_json(r.omega)},
          {"cost", r.cost},
          {"alp_at_omega", r.alp_at_omega},
          {"alp_omega", vector_json(r.alp_omega)},
          {"alp_objective", r.alp_objective},
          {"grid_points", r.grid_points}};
}

}  // namespace

void write_summary_csv(std::span<const SummaryRow> rows, const fs::path& path) { write_text(path, summary_csv(rows)); }

// ---------------------------------------------------------------------------
// Experiments

namespace {

struct SolverPlan {
  std::string name;
  std::function<RunTrace(std::uint64_t seed)> run;
};

std::string omega_label(double omega) {
  std::string s = format_double(omega);
  for (char& ch : s) {
    if (ch == '.') ch = 'p';
  }
  return s;
}

}  // namespace

ExperimentResult run_trials(const ExperimentConfig& cfg, const Environment& env, const FeatureMatrix& fm) {
  if (!cfg.spd && !cfg.penalty) throw DomainError("the experiment needs an spd or a penalty block");

  std::optional<FeatureSamplingOracle> oracle;
  std::vector<SolverPlan> plans;
  if (cfg.spd) {
    oracle.emplace(env.mdp, fm);
    SpdConfig spd = *cfg.spd;
    spd.gamma = env.mdp.gamma();
    plans.push_back({"spd", [spd, &fm, &oracle, &env](std::uint64_t seed) {
                       SpdConfig c = spd;
                       c.seed = seed;
                       return run_spd(c, fm, *oracle, &env.mdp);
                     }});
  }
  if (cfg.penalty) {
    for (double omega : cfg.penalty_omegas) {
      PenaltyConfig pc = *cfg.penalty;
      pc.omega = omega;
      plans.push_back({"penalty_w" + omega_label(omega), [pc, &fm, &env](std::uint64_t seed) {
                         PenaltyConfig c = pc;
                         c.seed = seed;
                         return run_penalty(c, fm, env.mdp);
                       }});
    }
  }

  ExperimentResult result;
  for (const SolverPlan& plan : plans) {
    SolverResult sr;
    sr.name = plan.name;
    sr.trials.resize(static_cast<std::size_t>(cfg.trials));
    result.solvers.push_back(std::move(sr));
  }

  const std::size_t tasks = plans.size() * static_cast<std::size_t>(cfg.trials);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t task = next++; task < tasks; task = next++) {
      const std::size_t solver = task / static_cast<std::size_t>(cfg.trials);
      const std::size_t trial = task % static_cast<std::size_t>(cfg.trials);
      TrialResult& tr = result.solvers[solver].trials[trial];
      tr.seed = cfg.seed + trial;
      try {
        tr.trace = plans[solver].run(tr.seed);
        tr.policy_cost = policy_cost(env.mdp, occupation_measure(env.mdp, *tr.trace.policy));
      } catch (const std::exception& e) {
        if (!tr.trace.error) tr.trace.error = e.what();
        tr.policy_cost = std::nan("");
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.jobs), tasks);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }

  for (SolverResult& sr : result.solvers) {
    std::vector<double> cost, objective, viol;
    for (const TrialResult& tr : sr.trials) {
      if (!tr.trace.ok()) result.ok = false;
      cost.push_back(tr.policy_cost);
      objective.push_back(tr.trace.records.empty() ? std::nan("") : tr.trace.records.back().avg_objective);
      viol.push_back(tr.trace.records.empty() ? std::nan("") : tr.trace.records.back().avg_violation);
    }
    sr.final_policy_cost = summarize(cost);
    sr.final_avg_objective = summarize(objective);
    sr.final_avg_violation = summarize(viol);
  }
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir) {
  const Environment env = load_environment(cfg);
  const FeatureMatrix fm = load_features(cfg, env);
  ExperimentResult result = run_trials(cfg, env, fm);
  if (cfg.source.contains("oracle") && fm.dims() <= 3) {
    result.oracle = oracle_grid_search(env.mdp, env.base, cfg.oracle_resolution);
  }

  fs::create_directories(out_dir);
  std::vector<std::pair<std::string, std::string>> files;  // relative path, hash
  auto emit = [&](const std::string& rel, const std::string& content) {
    const fs::path path = out_dir / rel;
    fs::create_directories(path.parent_path());
    write_text(path, content);
    files.emplace_back(rel, git_blob_hash(content));
  };

  emit("config.json", cfg.source.dump(2) + "\n");

  std::ostringstream finals;
  finals << "solver,trial,seed,avg_objective,avg_violation,policy_cost,error\n";
  json bundle_solvers = json::array();
  for (const SolverResult& sr : result.solvers) {
    std::vector<std::vector<TraceRecord>> traces;
    json trials = json::array();
    for (std::size_t k = 0; k < sr.trials.size(); ++k) {
      const TrialResult& tr = sr.trials[k];
      std::ostringstream name;
      name << sr.name << "/trial_" << std::setw(3) << std::setfill('0') << k << ".csv";
      const fs::path tmp = out_dir / name.str();
      fs::create_directories(tmp.parent_path());
      write_trace_csv(tr.trace, tmp);
      files.emplace_back(name.str(), git_blob_hash_file(tmp));
      traces.push_back(tr.trace.records);

      const TraceRecord last = tr.trace.records.empty() ? TraceRecord{} : tr.trace.records.back();
      finals << sr.name << ',' << k << ',' << tr.seed << ',' << format_double(last.avg_objective) << ','
             << format_double(last.avg_violation) << ',' << format_double(tr.policy_cost) << ','
             << (tr.trace.error ? "\"" + *tr.trace.error + "\"" : "") << '\n';
      json tj = {{"seed", tr.seed},
                 {"theta_hat", vector_json(tr.trace.theta_hat)},
                 {"lambda_hat_norm", tr.trace.lambda_hat.norm()},
                 {"policy_cost", tr.policy_cost},
                 {"boundary_clamps", tr.trace.boundary_clamps}};
      if (tr.trace.policy) tj["policy"] = policy_to_json(*tr.trace.policy);
      if (tr.trace.error) tj["error"] = *tr.trace.error;
      trials.push_back(std::move(tj));
    }
    bool same_grid = true;
    for (const auto& t : traces) same_grid = same_grid && t.size() == traces.front().size();
    if (same_grid) emit(sr.name + "_summary.csv", summary_csv(aggregate_traces(traces)));
    bundle_solvers.push_back({{"name", sr.name},
                              {"final_policy_cost", stats_json(sr.final_policy_cost)},
                              {"final_avg_objective", stats_json(sr.final_avg_objective)},
                              {"final_avg_violation", stats_json(sr.final_avg_violation)},
                              {"trials", std::move(trials)}});
  }
  emit("finals.csv", finals.str());

  json bundle = {{"solvers", std::move(bundle_solvers)}};
  if (result.oracle) bundle["oracle"] = oracle_json(*result.oracle);
  emit("bundle.json", bundle.dump(2) + "\n");

  std::string inputs = cfg.source.dump();
  if (!cfg.mdp_file.empty()) inputs += read_text(cfg.mdp_file);
  if (cfg.features.mode == FeatureMode::file) inputs += read_text(cfg.features.file);
  json seeds = json::array();
  for (int k = 0; k < cfg.trials; ++k) seeds.push_back(cfg.seed + static_cast<std::uint64_t>(k));
  json listing = json::array();
  for (const auto& [rel, hash] : files) listing.push_back({{"path", rel}, {"hash", hash}});
  const json manifest = {{"config", cfg.source},
                         {"input_hash", git_blob_hash(inputs)},
                         {"seeds", std::move(seeds)},
                         {"files", std::move(listing)}};
  write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return result;
}

// ---------------------------------------------------------------------------
// Histograms

std::vector<std::vector<HistogramRow>> features_histogram(const ExperimentConfig& cfg) {
  if (cfg.histogram_horizon < 1) throw DomainError("histogram horizon must be at least 1");
  const Environment env = load_environment(cfg);
  const FeatureMatrix empirical =
      build_features_empirical(MdpTransitionSampler(env.mdp), env.base, cfg.histogram_horizon, cfg.seed);
  const AggregationMatrix q = build_q(env.mdp.states(), env.mdp.actions());
  std::vector<std::vector<HistogramRow>> out;
  for (std::size_t i = 0; i < env.base.size(); ++i) {
    const Vector exact = state_occupancy(env.mdp, env.base[i]).mu;
    const Vector visits = q.q.transpose() * empirical.psi.col(static_cast<Eigen::Index>(i));
    std::vector<HistogramRow> rows;
    for (Eigen::Index s = 0; s < exact.size(); ++s) {
      rows.push_back({static_cast<int>(s + 1), exact(s), visits(s), std::abs(exact(s) - visits(s))});
    }
    out.push_back(std::move(rows));
  }
  return out;
}

void write_histogram_csv(std::span<const HistogramRow> rows, const fs::path& path) {
  std::ostringstream out;
  out << "state,exact,empirical,abs_diff\n";
  for (const HistogramRow& r : rows) {
    out << r.state << ',' << format_double(r.exact) << ',' << format_double(r.empirical) << ','
        << format_double(r.abs_diff) << '\n';
  }
  write_text(path, out.str());
}

// ---------------------------------------------------------------------------
// Validation suite

bool ValidationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const ValidationCheck& c) { return c.passed; });
}

json ValidationReport::to_json() const {
  json list = json::array();
  for (const ValidationCheck& c : checks) {
    list.push_back({{"name", c.name},
                    {"passed", c.passed},
                    {"value", format_double(c.value)},
                    {"tolerance", format_double(c.tolerance)},
                    {"detail", c.detail}});
  }
  return {{"passed", passed()}, {"checks", std::move(list)}};
}

namespace {

ValidationCheck at_most(std::string name, double value, double tolerance, std::string detail = {}) {
  return {std::move(name), value <= tolerance, value, tolerance, std::move(detail)};
}

// Random point strictly inside the geometry's domain.
Vector random_interior(const BregmanGeometry& geom, Eigen::Index d, Rng& rng) {
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = 2.0 * uniform01(rng) - 1.0;
  const double scale = 0.95 * uniform01(rng) * geom.radius() / std::max(geom.norm(v), 1e-300);
  return v * scale;
}

}  // namespace

ValidationReport validate_suite(const ExperimentConfig& cfg) {
  ValidationReport report;
  std::optional<Environment> loaded;
  std::optional<FeatureMatrix> features;
  try {
    loaded.emplace(load_environment(cfg));
    features.emplace(load_features(cfg, *loaded));
  } catch (const std::exception& e) {
    report.checks.push_back({"inputs.load", false, std::nan(""), 0.0, e.what()});
    return report;
  }
  const Environment& env = *loaded;
  const FeatureMatrix& fm = *features;

  const FeatureTolerance tol =
      cfg.features.mode == FeatureMode::empirical ? FeatureTolerance::empirical() : FeatureTolerance::exact();
  const FeatureValidation fv = validate_features(fm, env.mdp, tol);
  report.checks.push_back(at_most("features.normalization", fv.normalization_residual, tol.normalization,
                                  "max |Psi^T 1 - 1| = " + format_double(fv.normalization_residual)));
  report.checks.push_back(at_most("features.stationarity", fv.stationarity_residual, tol.stationarity,
                                  "max |flow residual| = " + format_double(fv.stationarity_residual)));
  report.checks.push_back(
      {"features.nonnegative", (fm.psi.array() >= 0.0).all(), fm.psi.minCoeff(), 0.0, "smallest feature entry"});

  Rng rng(cfg.seed);
  const double radius = cfg.spd ? cfg.spd->radius : 100.0;
  const Eigen::Index d = std::max<Eigen::Index>(fm.dims(), 2);
  for (const char* name : {"ball", "box"}) {
    const auto geom = make_geometry(name, radius);
    double bijection = 0.0, fenchel = 0.0, pythagoras = 0.0, hyperplane = 0.0;
    for (int k = 0; k < 100; ++k) {
      const Vector theta = random_interior(*geom, d, rng);
      const Vector y = geom->grad_phi(theta);
      bijection = std::max(bijection, (geom->grad_phi_star(y) - theta).lpNorm<Eigen::Infinity>());
      const double scale = std::max({1.0, std::abs(theta.dot(y)), std::abs(geom->phi(theta))});
      fenchel = std::max(fenchel, std::abs(geom->phi(theta) + geom->phi_star(y) - theta.dot(y)) / scale);
      if (!geom->hyperplane_feasible(d)) continue;
      const Vector projected = hyperplane_project(*geom, theta).theta;
      hyperplane = std::max(hyperplane, std::abs(projected.sum() - 1.0));
      // Pythagoras against a random point of the hyperplane inside the domain.
      Vector other = random_interior(*geom, d, rng) * 0.5;
      other.array() += (1.0 - other.sum()) / static_cast<double>(d);
      if (!geom->interior(other)) continue;
      const double whole = geom->divergence(other, theta);
      const double gap = geom->divergence(other, projected) + geom->divergence(projected, theta) - whole;
      pythagoras = std::max(pythagoras, gap / std::max(1.0, whole));
    }
    const std::string prefix = std::string("geometry.") + name;
    report.checks.push_back(at_most(prefix + ".bijection", bijection, 1e-10 * std::max(1.0, radius)));
    report.checks.push_back(at_most(prefix + ".fenchel", fenchel, 1e-10));
    report.checks.push_back(at_most(prefix + ".hyperplane", hyperplane, 1e-10));
    report.checks.push_back(at_most(prefix + ".pythagoras", pythagoras, 1e-9));
  }

  {
    const BallModulus ball(radius);
    double worst = 0.0;
    for (int k = 0; k < 100 && ball.hyperplane_feasible(d); ++k) {
      const Vector y = ball.grad_phi(random_interior(ball, d, rng));
      worst = std::max(worst, std::abs(solve_z_ball(radius, y) - minimize_J(ball, y)));
    }
    report.checks.push_back(at_most("geometry.ball.closed_form_z", worst, 1e-8));
  }

  {
    // Exhaustive expectation of the importance-weighted gradient.
    const Vector costs = env.mdp.flat_costs();
    Vector lambda(fm.pairs());
    for (Eigen::Index j = 0; j < lambda.size(); ++j) lambda(j) = uniform01(rng);
    Vector expectation = Vector::Zero(fm.dims());
    for (Eigen::Index j = 0; j < fm.pairs(); ++j) {
      const double mass = fm.psi.row(j).mean();
      if (mass <= 0.0) continue;
      const OracleSample sample{0, j / fm.actions, j % fm.actions, costs(j)};
      expectation += mass * stochastic_primal_gradient(lambda, sample, fm);
    }
    const Vector exact = fm.psi.transpose() * (costs - lambda);
    const double err = (expectation - exact).lpNorm<Eigen::Infinity>() / std::max(1.0, exact.lpNorm<Eigen::Infinity>());
    report.checks.push_back(at_most("spd.gradient_unbiased", err, 1e-12, "relative to max |Psi^T (c - lambda)|"));
  }

  try {
    const KappaDiagnostic kd = ergodicity_kappa(env.mdp, env.base);
    report.checks.push_back({"mdp.kappa", !kd.transient_state, kd.kappa, std::numeric_limits<double>::infinity(),
                             kd.transient_state ? "a base policy leaves a state unvisited" : "ergodicity factor"});
  } catch (const Error& e) {
    report.checks.push_back({"mdp.kappa", false, std::nan(""), 0.0, e.what()});
  }
  return report;
}

// ---------------------------------------------------------------------------
// Manifest

std::string git_blob_hash(std::string_view content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw Error("cannot allocate a digest context");
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &length) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw Error("SHA-1 digest failed");
  std::ostringstream hex;
  for (unsigned int i = 0; i < length; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int{digest[i]};
  return hex.str();
}

std::string git_blob_hash_file(const fs::path& path) { return git_blob_hash(read_text(path)); }

std::vector<std::string> verify_manifest(const fs::path& out_dir) {
  const json manifest = json::parse(read_text(out_dir / "manifest.json"));
  std::vector<std::string> mismatched;
  for (const json& entry : manifest.at("files")) {
    const std::string rel = entry.at("path").get<std::string>();
    const fs::path path = out_dir / rel;
    if (!fs::exists(path) || git_blob_hash_file(path) != entry.at("hash").get<std::string>()) {
      mismatched.push_back(rel);
    }
  }
  return mismatched;
}

}  // namespace spdalp
