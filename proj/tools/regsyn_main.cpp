// Config-driven front end: synthesise a controller variant, re-verify a
// stored result, or produce the benchmark table for an instance.
//
// Exit codes: 0 success, 1 verification failure, 2 infeasible,
// 3 solver failure, 4 config or usage error.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "regsyn/config.hpp"
#include "regsyn/sim.hpp"
#include "regsyn/verify.hpp"

namespace {

using namespace regsyn;

constexpr int kExitVerifyFailed = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitSolverFailure = 3;
constexpr int kExitConfigError = 4;

int exit_for(conic::Status s) {
  switch (s) {
    case conic::Status::optimal:
    case conic::Status::near_optimal:
      return 0;
    case conic::Status::infeasible:
      return kExitInfeasible;
    default:
      return kExitSolverFailure;
  }
}

const std::vector<std::string>& all_variants() {
  static const std::vector<std::string> v = {
      "h2", "hinf", "dr-energy", "cr-energy", "dr-pwb", "cr-pwb",
      "custom-weight"};
  return v;
}

bool use_constraints(const std::string& mode, const InstanceConfig& cfg) {
  if (mode == "off") return false;
  if (mode == "on") {
    if (!cfg.constraints)
      throw ConfigError("--constraints on, but the config defines none");
    return true;
  }
  return cfg.constraints.has_value();
}

SynthOptions make_options(const InstanceConfig& cfg, bool constrained,
                          double solver_tol) {
  SynthOptions opts;
  opts.solver = cfg.solver;
  if (solver_tol > 0.0) {
    opts.solver.feas_tol = solver_tol;
    opts.solver.gap_tol = solver_tol;
  }
  if (constrained) {
    opts.constraints = cfg.constraints;
    opts.constraint_shape = cfg.disturbance_shape;
    opts.constraint_x0 = cfg.x0;
  }
  return opts;
}

RegretWeight weight_for(const std::string& variant, const InstanceConfig& cfg,
                        const BenchmarkOperator& o) {
  if (variant == "dr-energy" || variant == "dr-pwb")
    return RegretWeight::identity(cfg.n, cfg.p, cfg.horizon);
  if (variant == "cr-energy" || variant == "cr-pwb")
    return RegretWeight::benchmark(o);
  if (variant == "custom-weight") {
    if (cfg.weight_kind != RegretWeight::Kind::custom)
      throw ConfigError(
          "variant custom-weight needs weight.kind \"custom\" in the config");
    return cfg.make_weight(o);
  }
  throw ConfigError("variant " + variant + " carries no weight");
}

SynthesisResult run_variant(const std::string& variant,
                            const InstanceConfig& cfg, const LTVSystem& sys,
                            const CostSpec& cost, const BenchmarkOperator& o,
                            const SynthOptions& opts) {
  if (variant == "h2") return synth_h2(sys, cost, opts);
  if (variant == "hinf") return synth_hinf(sys, cost, opts);
  const auto w = weight_for(variant, cfg, o);
  if (variant == "dr-pwb" || variant == "cr-pwb")
    return synth_pointwise(sys, cost, o, w, cfg.x0, cfg.disturbance_shape,
                           opts);
  return synth_energy_ball(sys, cost, o, w, cfg.x0, cfg.omega_or_default(),
                           opts);
}

Controller controller_from_dense(const Mat& gain, int n, int m, int T) {
  if (gain.rows() != m * (T + 1) || gain.cols() != n * (T + 1))
    throw ConfigError("gain matrix has the wrong shape for the config");
  Controller k(n, m, T);
  for (int t = 0; t <= T; ++t)
    for (int j = 0; j <= t; ++j) k.gain(t, j) = gain.block(t * m, j * n, m, n);
  return k;
}

Vec assemble_delta(const Vec& x0, const std::vector<Vec>& w) {
  const int p = w.empty() ? 0 : static_cast<int>(w[0].size());
  Vec delta(x0.size() + p * static_cast<int>(w.size()));
  delta.head(x0.size()) = x0;
  for (size_t k = 0; k < w.size(); ++k)
    delta.segment(x0.size() + p * static_cast<int>(k), p) = w[k];
  return delta;
}

std::vector<Vec> split_stages(const Vec& w, int p, int T) {
  std::vector<Vec> out(T);
  for (int k = 0; k < T; ++k) out[k] = w.segment(p * k, p);
  return out;
}

// uniform draw from the energy ball ||w||^2 <= omega, stacked over stages
std::vector<Vec> sample_energy_ball(std::mt19937_64& rng, int p, int T,
                                    double omega, bool boundary) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vec g(p * T);
  for (int i = 0; i < g.size(); ++i) g(i) = gauss(rng);
  double norm = g.norm();
  if (norm < 1e-14) norm = 1.0;
  const double radius =
      boundary ? 1.0 : std::pow(unif(rng), 1.0 / std::max(1, p * T));
  g *= radius * std::sqrt(omega) / norm;
  return split_stages(g, p, T);
}

struct CheckLine {
  std::string name;
  bool hard = true;
  bool ok = false;
  std::string detail;
};

void print_checks(const std::vector<CheckLine>& checks) {
  for (const auto& c : checks) {
    const char* tag = c.ok ? "[ok]  " : (c.hard ? "[FAIL]" : "[info]");
    std::printf("%s %-22s %s\n", tag, c.name.c_str(), c.detail.c_str());
  }
}

void write_report(const std::vector<CheckLine>& checks, bool passed,
                  const std::string& path) {
  nlohmann::ordered_json j;
  j["passed"] = passed;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& c : checks)
    arr.push_back({{"name", c.name},
                   {"ok", c.ok},
                   {"hard", c.hard},
                   {"detail", c.detail}});
  j["checks"] = std::move(arr);
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.8g", v);
  return buf;
}

int cmd_synthesize(const std::string& config_path, const std::string& variant,
                   const std::string& constraints_mode, double solver_tol,
                   const std::string& out_path) {
  const auto cfg = load_config(config_path);
  const auto sys = cfg.make_system();
  const auto cost = cfg.make_cost();
  const auto o = noncausal_cost_operator(sys, cost);
  const bool constrained = use_constraints(constraints_mode, cfg);
  const auto opts = make_options(cfg, constrained, solver_tol);

  const auto res = run_variant(variant, cfg, sys, cost, o, opts);
  std::printf("variant        %s%s\n", variant.c_str(),
              constrained ? " (constrained)" : "");
  std::printf("status         %s\n", conic::to_string(res.status));
  if (std::isfinite(res.level))
    std::printf("level          %.10g\n", res.level);
  if (!res.multipliers.empty()) {
    std::string ms;
    for (double m : res.multipliers) ms += (ms.empty() ? "" : " ") + fmt(m);
    std::printf("multipliers    %s\n", ms.c_str());
  }
  if (std::isfinite(res.achievability))
    std::printf("achievability  %.3e\n", res.achievability);
  if (!res.note.empty()) std::printf("note           %s\n", res.note.c_str());

  if (!res.ok()) {
    std::fprintf(stderr, "regsyn: synthesis did not converge: %s\n",
                 res.report.message.c_str());
    return exit_for(res.status);
  }

  SynthesisRecord rec;
  rec.variant = variant;
  rec.status = conic::to_string(res.status);
  rec.level = res.level;
  rec.multipliers = res.multipliers;
  rec.n = cfg.n;
  rec.m = cfg.m;
  rec.p = cfg.p;
  rec.horizon = cfg.horizon;
  rec.gain = res.controller ? res.controller->dense() : Mat();
  rec.phi_x = res.response ? res.response->state_map() : Mat();
  rec.phi_u = res.response ? res.response->input_map() : Mat();
  rec.achievability = res.achievability;
  rec.solver_gap = res.report.gap;
  rec.solver_iterations = res.report.iterations;
  rec.constrained = constrained;
  save_result(rec, out_path);
  std::printf("result         %s\n", out_path.c_str());
  return 0;
}

int cmd_verify(const std::string& config_path, const std::string& result_path,
               unsigned seed, const std::string& out_path) {
  const auto cfg = load_config(config_path);
  const auto rec = load_result(result_path);
  if (rec.n != cfg.n || rec.m != cfg.m || rec.p != cfg.p ||
      rec.horizon != cfg.horizon)
    throw ConfigError("result dimensions disagree with the config");
  if (std::find(all_variants().begin(), all_variants().end(), rec.variant) ==
      all_variants().end())
    throw ConfigError("result carries unknown variant " + rec.variant);

  const auto sys = cfg.make_system();
  const auto cost = cfg.make_cost();
  const auto o = noncausal_cost_operator(sys, cost);
  const auto ops = build_stacked(sys);
  const int T = cfg.horizon;

  std::vector<CheckLine> checks;
  auto add = [&](const std::string& name, bool ok, const std::string& detail,
                 bool hard = true) {
    checks.push_back({name, hard, ok, detail});
  };

  std::optional<SystemResponse> stored;
  try {
    stored = SystemResponse::from_dense(rec.phi_x, rec.phi_u, cfg.n, cfg.m,
                                        cfg.p, T, true, 1e-9);
    add("causal structure", true, "stored maps respect causality");
  } catch (const std::exception& e) {
    add("causal structure", false, e.what());
  }

  const auto k = controller_from_dense(rec.gain, cfg.n, cfg.m, T);
  const auto realised = closed_loop_response(sys, k);

  if (stored) {
    const double scale =
        1.0 + rec.phi_x.cwiseAbs().maxCoeff() + rec.phi_u.cwiseAbs().maxCoeff();
    const double dx =
        (realised.state_map() - rec.phi_x).cwiseAbs().maxCoeff();
    const double du =
        (realised.input_map() - rec.phi_u).cwiseAbs().maxCoeff();
    const bool ok = dx <= 1e-6 * scale && du <= 1e-6 * scale;
    add("gain consistency", ok,
        "closed loop of K vs stored maps: " + fmt(std::max(dx, du)));
  }

  const double resid = achievability_residual(realised, ops);
  add("achievability", resid <= 1e-6, "residual " + fmt(resid));

  const Mat excess = excess_cost_operator(realised, cost, o);
  const double excess_scale = 1.0 + excess.cwiseAbs().maxCoeff();
  const double lmin = min_eigenvalue(excess);
  add("excess form psd", lmin >= -1e-6 * excess_scale,
      "min eigenvalue " + fmt(lmin));

  const bool is_pwb = rec.variant == "dr-pwb" || rec.variant == "cr-pwb";
  std::mt19937_64 rng(seed);

  if (rec.variant == "h2") {
    const Mat weighted = cost.stacked_sqrt() * realised.stacked();
    const double frob = weighted.squaredNorm();
    const bool ok = std::abs(frob - rec.level) <= 1e-6 * (1.0 + rec.level);
    add("level recomputation", ok,
        "frobenius " + fmt(frob) + " vs recorded " + fmt(rec.level));
  } else if (rec.variant == "hinf") {
    const Mat phi_w = realised.disturbance_columns();
    const Mat form = symmetrized(phi_w.transpose() * cost.stacked() * phi_w);
    const double top = -min_eigenvalue(-form);
    const bool ok = top <= rec.level + 1e-6 * (1.0 + rec.level);
    add("gain bound", ok,
        "top eigenvalue " + fmt(top) + " vs recorded " + fmt(rec.level));
  } else {
    const auto w = weight_for(rec.variant, cfg, o);
    const double omega = cfg.omega_or_default();
    const int samples = 1000;
    double worst_margin = -std::numeric_limits<double>::infinity();
    double best_ratio = 0.0;
    for (int i = 0; i < samples; ++i) {
      std::vector<Vec> wk;
      if (is_pwb) {
        DisturbanceFamily fam;
        fam.kind = FamilyKind::uniform_ellipsoid;
        wk = generate(fam, cfg.disturbance_shape, T, seed, i);
      } else {
        wk = sample_energy_ball(rng, cfg.p, T, omega, i % 10 == 0);
      }
      const auto run = evaluate_run(sys, cost, o, k, cfg.x0, wk);
      const Vec delta = assemble_delta(cfg.x0, wk);
      const double den = delta.dot(w.matrix() * delta);
      worst_margin = std::max(worst_margin,
                              run.regret - rec.level * den);
      if (den > 1e-12) best_ratio = std::max(best_ratio, run.regret / den);
    }
    add("certificate sampling", worst_margin <= 1e-6,
        std::to_string(samples) + " draws, worst slack " + fmt(worst_margin));
    add("sampled ratio", true,
        "best " + fmt(best_ratio) + " of level " + fmt(rec.level), false);

    if (!is_pwb && cfg.x0.norm() <= 1e-12) {
      const Vec wd = worst_case_disturbance_zero_init(realised, cost, o, w);
      const double ratio =
          regret_ratio(excess, w.matrix(), Vec::Zero(cfg.n), wd);
      add("worst direction", ratio >= 0.999 * rec.level,
          "attains " + fmt(ratio) + " of level " + fmt(rec.level));
    }
    if (is_pwb) {
      const auto ascent = local_level_lower_bound(
          realised, cost, o, w, cfg.x0, cfg.disturbance_shape, 20, seed);
      add("ascent lower bound", ascent.level <= rec.level + 1e-6,
          "estimate " + fmt(ascent.level) + " vs level " + fmt(rec.level));

      SynthOptions opts;
      opts.solver = cfg.solver;
      if (rec.constrained && cfg.constraints) {
        opts.constraints = cfg.constraints;
        opts.constraint_shape = cfg.disturbance_shape;
        opts.constraint_x0 = cfg.x0;
      }
      const auto chain = check_inequality_chain(
          sys, cost, o, w, cfg.x0, cfg.disturbance_shape, opts);
      add("inequality chain", chain.chain_ok,
          "pointwise level " + fmt(chain.level_pointwise) +
              " <= energy level " + fmt(chain.level_energy) +
              ", floor factor " + fmt(chain.floor_factor) + ", eps_soft " +
              fmt(chain.eps_soft));
    }
  }

  if (rec.constrained) {
    if (!cfg.constraints) {
      add("constraints", false, "result constrained, config has none");
    } else {
      double worst = 0.0;
      for (int i = 0; i < 200; ++i) {
        DisturbanceFamily fam;
        fam.kind = FamilyKind::uniform_ellipsoid;
        const auto wk = generate(fam, cfg.disturbance_shape, T, seed + 1, i);
        const auto run = rollout(sys, cost, k, cfg.x0, wk);
        worst = std::max(worst, max_constraint_value(*cfg.constraints, run));
      }
      add("constraint rows", worst <= 1.0 + 1e-6,
          "max sampled row value " + fmt(worst));
    }
  }

  print_checks(checks);
  bool passed = true;
  for (const auto& c : checks) passed = passed && (c.ok || !c.hard);
  std::printf("verification   %s\n", passed ? "passed" : "FAILED");
  if (!out_path.empty()) write_report(checks, passed, out_path);
  return passed ? 0 : kExitVerifyFailed;
}

int cmd_benchmark(const std::string& config_path,
                  const std::string& constraints_mode, double solver_tol,
                  std::optional<unsigned> seed_flag,
                  const std::string& controllers_flag,
                  const std::string& out_path) {
  const auto cfg = load_config(config_path);
  const auto sys = cfg.make_system();
  const auto cost = cfg.make_cost();
  const auto o = noncausal_cost_operator(sys, cost);
  const bool constrained = use_constraints(constraints_mode, cfg);
  const auto opts = make_options(cfg, constrained, solver_tol);
  const unsigned seed = seed_flag.value_or(cfg.benchmark_seed);

  std::vector<std::string> ids;
  if (controllers_flag.empty()) {
    ids.assign(all_variants().begin(), all_variants().end() - 1);
  } else {
    std::stringstream ss(controllers_flag);
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!tok.empty()) ids.push_back(tok);
    for (const auto& id : ids)
      if (std::find(all_variants().begin(), all_variants().end(), id) ==
          all_variants().end())
        throw ConfigError("unknown controller " + id);
  }
  if (ids.empty()) throw ConfigError("empty controller list");

  std::vector<std::pair<std::string, Controller>> controllers;
  std::vector<std::pair<std::string, double>> levels;
  for (const auto& id : ids) {
    const auto res = run_variant(id, cfg, sys, cost, o, opts);
    if (!res.ok() || !res.controller) {
      std::fprintf(stderr, "regsyn: %s synthesis failed (%s), table refused\n",
                   id.c_str(), conic::to_string(res.status));
      return exit_for(res.status);
    }
    levels.emplace_back(id, res.level);
    controllers.emplace_back(id, *res.controller);
    std::printf("synthesised %-13s level %.10g\n", id.c_str(), res.level);
  }

  // constrained controllers are scored against the constrained clairvoyant
  BenchmarkOperator score = o;
  if (constrained) {
    const auto bench = constrained_noncausal_benchmark(
        sys, cost, *cfg.constraints, cfg.disturbance_shape, cfg.x0,
        opts.solver);
    if (bench.status != conic::Status::optimal &&
        bench.status != conic::Status::near_optimal) {
      std::fprintf(stderr, "regsyn: constrained benchmark failed (%s)\n",
                   conic::to_string(bench.status));
      return exit_for(bench.status);
    }
    score = *bench.benchmark;
  }

  std::vector<DisturbanceFamily> families;
  for (auto kind : all_families()) families.push_back({.kind = kind});

  const auto table =
      benchmark_table(sys, cost, score, controllers, families,
                      cfg.disturbance_shape, cfg.x0,
                      cfg.benchmark_realisations, seed);
  const std::string csv = table.to_csv();
  {
    std::ofstream out(out_path);
    if (!out) throw ConfigError("cannot open " + out_path + " for writing");
    out << csv;
  }
  std::printf("%s", csv.c_str());
  std::printf("table          %s (%d realisations, seed %u)\n",
              out_path.c_str(), cfg.benchmark_realisations, seed);

  auto level_of = [&](const std::string& id) -> std::optional<double> {
    for (const auto& [lid, lv] : levels)
      if (lid == id) return lv;
    return std::nullopt;
  };
  nlohmann::ordered_json meta;
  meta["seed"] = seed;
  meta["realisations"] = cfg.benchmark_realisations;
  meta["constrained"] = constrained;
  for (const auto& [id, lv] : levels) meta["levels"][id] = lv;
  for (const auto& [label, energy_id, pwb_id] :
       {std::tuple{"dynamic regret", "dr-energy", "dr-pwb"},
        std::tuple{"competitive ratio", "cr-energy", "cr-pwb"}}) {
    const auto e = level_of(energy_id);
    const auto b = level_of(pwb_id);
    if (!e || !b || *e <= 0.0) continue;
    const double reduction = 100.0 * (*e - *b) / *e;
    std::printf("%s level: energy %.6g, pointwise %.6g, reduction %.1f%%\n",
                label, *e, *b, reduction);
    meta["reduction_percent"][pwb_id] = reduction;
  }
  std::ofstream meta_out(out_path + ".meta.json");
  if (meta_out) meta_out << meta.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite-horizon regret-optimal controller synthesis"};
  app.require_subcommand(1);

  std::string config_path, out_path, variant = "dr-energy";
  std::string constraints_mode = "auto", result_path, controllers_flag;
  double solver_tol = 0.0;
  unsigned seed = 1;
  bool seed_given = false;

  auto* synth = app.add_subcommand("synthesize",
                                   "solve one controller variant and write "
                                   "the result file");
  synth->add_option("--config", config_path, "instance description (json)")
      ->required();
  synth->add_option("--variant", variant, "controller variant")
      ->check(CLI::IsMember(all_variants()));
  synth->add_option("--constraints", constraints_mode,
                    "apply the config's constraint rows")
      ->check(CLI::IsMember({"on", "off", "auto"}));
  synth->add_option("--solver-tol", solver_tol,
                    "override feasibility and gap tolerances");
  synth->add_option("--out", out_path, "result file path");

  auto* verify = app.add_subcommand(
      "verify", "re-validate a stored synthesis result against its config");
  verify->add_option("--config", config_path, "instance description (json)")
      ->required();
  verify->add_option("--result", result_path, "result file to check")
      ->required();
  verify->add_option("--seed", seed, "sampling seed");
  verify->add_option("--out", out_path, "verification report path (json)");

  auto* bench = app.add_subcommand(
      "benchmark", "synthesise controllers and write the normalised table");
  bench->add_option("--config", config_path, "instance description (json)")
      ->required();
  bench->add_option("--constraints", constraints_mode,
                    "apply the config's constraint rows")
      ->check(CLI::IsMember({"on", "off", "auto"}));
  bench->add_option("--solver-tol", solver_tol,
                    "override feasibility and gap tolerances");
  bench->add_option("--seed", seed, "realisation seed (default: config)");
  bench->add_option("--controllers", controllers_flag,
                    "comma separated variant list (default: all six)");
  bench->add_option("--out", out_path, "table path (csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfigError;
  }
  seed_given = bench->count("--seed") > 0;

  try {
    if (synth->parsed()) {
      if (out_path.empty()) out_path = "result.json";
      return cmd_synthesize(config_path, variant, constraints_mode, solver_tol,
                            out_path);
    }
    if (verify->parsed()) {
      if (out_path.empty()) out_path = result_path + ".report.json";
      return cmd_verify(config_path, result_path, seed, out_path);
    }
    if (out_path.empty()) out_path = "benchmark.csv";
    return cmd_benchmark(config_path, constraints_mode, solver_tol,
                         seed_given ? std::optional<unsigned>(seed)
                                    : std::nullopt,
                         controllers_flag, out_path);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "regsyn: %s\n", e.what());
    return kExitConfigError;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "regsyn: %s\n", e.what());
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "regsyn: %s\n", e.what());
    return kExitSolverFailure;
  }
}
