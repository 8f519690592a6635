#include "regsyn/config.hpp"

#include <fstream>

#include "json.hpp"

namespace regsyn {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json mat_to_json(const Mat& m) {
  ordered_json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  auto data = ordered_json::array();
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  j["data"] = std::move(data);
  return j;
}

Mat mat_from_json(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") ||
      !j.contains("data"))
    throw ConfigError(where + ": expected an object with rows, cols, data");
  const int rows = j.at("rows").get<int>();
  const int cols = j.at("cols").get<int>();
  if (rows < 0 || cols < 0) throw ConfigError(where + ": negative shape");
  const auto& data = j.at("data");
  if (!data.is_array() ||
      static_cast<int>(data.size()) != rows * cols)
    throw ConfigError(where + ": data length does not match rows*cols");
  Mat m(rows, cols);
  int i = 0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = data[i++].get<double>();
  return m;
}

// one matrix broadcast over the horizon, or an explicit per-stage array
std::vector<Mat> sequence_from_json(const json& j, int count,
                                    const std::string& where) {
  std::vector<Mat> seq;
  if (j.is_array()) {
    if (static_cast<int>(j.size()) != count)
      throw ConfigError(where + ": expected " + std::to_string(count) +
                        " entries, got " + std::to_string(j.size()));
    seq.reserve(count);
    for (int k = 0; k < count; ++k)
      seq.push_back(
          mat_from_json(j[k], where + "[" + std::to_string(k) + "]"));
  } else {
    seq.assign(count, mat_from_json(j, where));
  }
  return seq;
}

ordered_json sequence_to_json(const std::vector<Mat>& seq) {
  bool uniform = true;
  for (const auto& m : seq)
    if (m.rows() != seq[0].rows() || m.cols() != seq[0].cols() ||
        m != seq[0]) {
      uniform = false;
      break;
    }
  if (uniform) return mat_to_json(seq[0]);
  auto arr = ordered_json::array();
  for (const auto& m : seq) arr.push_back(mat_to_json(m));
  return arr;
}

Vec vec_from_json(const json& j, int size, const std::string& where) {
  if (!j.is_array() || static_cast<int>(j.size()) != size)
    throw ConfigError(where + ": expected an array of length " +
                      std::to_string(size));
  Vec v(size);
  for (int i = 0; i < size; ++i) v(i) = j[i].get<double>();
  return v;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void write_json_file(const ordered_json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw ConfigError("failed writing " + path);
}

bool mats_equal(const Mat& a, const Mat& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

bool sequences_equal(const std::vector<Mat>& a, const std::vector<Mat>& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (!mats_equal(a[i], b[i])) return false;
  return true;
}

}  // namespace

double InstanceConfig::omega_or_default() const {
  if (energy) return *energy;
  return horizon / min_eigenvalue(symmetrized(disturbance_shape));
}

LTVSystem InstanceConfig::make_system() const { return LTVSystem(A, B, E); }

CostSpec InstanceConfig::make_cost() const { return CostSpec(Q, R); }

RegretWeight InstanceConfig::make_weight(const BenchmarkOperator& o) const {
  switch (weight_kind) {
    case RegretWeight::Kind::identity:
      return RegretWeight::identity(n, p, horizon);
    case RegretWeight::Kind::benchmark:
      return RegretWeight::benchmark(o);
    case RegretWeight::Kind::custom:
      if (!custom_weight)
        throw ConfigError("custom weight selected but no matrix given");
      return RegretWeight::custom(*custom_weight, n, p, horizon);
  }
  throw ConfigError("unknown weight kind");
}

InstanceConfig load_config(const std::string& path) {
  const json j = read_json_file(path);
  InstanceConfig cfg;
  try {
    cfg.name = j.value("name", std::string{});
    cfg.horizon = j.at("horizon").get<int>();
    if (cfg.horizon < 1) throw ConfigError("horizon must be at least 1");
    const auto& dims = j.at("dimensions");
    cfg.n = dims.at("state").get<int>();
    cfg.m = dims.at("input").get<int>();
    cfg.p = dims.at("disturbance").get<int>();

    const auto& dyn = j.at("dynamics");
    cfg.A = sequence_from_json(dyn.at("A"), cfg.horizon + 1, "dynamics.A");
    cfg.B = sequence_from_json(dyn.at("B"), cfg.horizon + 1, "dynamics.B");
    cfg.E = sequence_from_json(dyn.at("E"), cfg.horizon, "dynamics.E");

    const auto& cost = j.at("cost");
    cfg.Q = sequence_from_json(cost.at("Q"), cfg.horizon + 1, "cost.Q");
    cfg.R = sequence_from_json(cost.at("R"), cfg.horizon + 1, "cost.R");

    cfg.x0 = vec_from_json(j.at("initial_state"), cfg.n, "initial_state");

    const auto& model = j.at("disturbance_model");
    cfg.disturbance_shape =
        mat_from_json(model.at("shape"), "disturbance_model.shape");
    if (model.contains("energy")) {
      cfg.energy = model.at("energy").get<double>();
      if (*cfg.energy <= 0.0)
        throw ConfigError("disturbance_model.energy must be positive");
    }

    if (j.contains("weight")) {
      const auto& w = j.at("weight");
      const std::string kind = w.at("kind").get<std::string>();
      if (kind == "identity") {
        cfg.weight_kind = RegretWeight::Kind::identity;
      } else if (kind == "benchmark") {
        cfg.weight_kind = RegretWeight::Kind::benchmark;
      } else if (kind == "custom") {
        cfg.weight_kind = RegretWeight::Kind::custom;
        cfg.custom_weight = mat_from_json(w.at("matrix"), "weight.matrix");
      } else {
        throw ConfigError("weight.kind must be identity, benchmark or custom");
      }
    }

    if (j.contains("constraints")) {
      const auto& c = j.at("constraints");
      ConstraintSpec spec;
      spec.state_rows = c.contains("state_rows")
                            ? mat_from_json(c.at("state_rows"),
                                            "constraints.state_rows")
                            : Mat(0, cfg.n);
      spec.input_rows = c.contains("input_rows")
                            ? mat_from_json(c.at("input_rows"),
                                            "constraints.input_rows")
                            : Mat(0, cfg.m);
      cfg.constraints = std::move(spec);
    }

    if (j.contains("solver")) {
      const auto& s = j.at("solver");
      cfg.solver.feas_tol = s.value("feasibility_tolerance", 1e-8);
      cfg.solver.gap_tol = s.value("gap_tolerance", 1e-8);
      cfg.solver.max_iterations = s.value("max_iterations", 150);
    }

    if (j.contains("benchmark")) {
      const auto& b = j.at("benchmark");
      cfg.benchmark_realisations = b.value("realisations", 100);
      cfg.benchmark_seed = b.value("seed", 1u);
    }
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }

  // structural checks that the constructors cannot phrase per config field
  if (cfg.disturbance_shape.rows() != cfg.p ||
      cfg.disturbance_shape.cols() != cfg.p)
    throw ConfigError("disturbance_model.shape must be p x p");
  if (min_eigenvalue(symmetrized(cfg.disturbance_shape)) <= 0.0)
    throw ConfigError("disturbance_model.shape must be positive definite");
  if (cfg.constraints) {
    if (cfg.constraints->state_rows.cols() != cfg.n)
      throw ConfigError("constraints.state_rows must have n columns");
    if (cfg.constraints->input_rows.cols() != cfg.m)
      throw ConfigError("constraints.input_rows must have m columns");
  }

  // deep validation with index-naming diagnostics
  try {
    const auto sys = cfg.make_system();
    if (sys.state_dim() != cfg.n || sys.input_dim() != cfg.m ||
        sys.disturbance_dim() != cfg.p)
      throw ConfigError("dynamics dimensions disagree with the declared ones");
    const auto cost = cfg.make_cost();
    if (cost.state_dim() != cfg.n || cost.input_dim() != cfg.m)
      throw ConfigError("cost dimensions disagree with the declared ones");
    if (cfg.weight_kind == RegretWeight::Kind::custom)
      RegretWeight::custom(*cfg.custom_weight, cfg.n, cfg.p, cfg.horizon);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return cfg;
}

void save_config(const InstanceConfig& cfg, const std::string& path) {
  ordered_json j;
  j["name"] = cfg.name;
  j["horizon"] = cfg.horizon;
  j["dimensions"] = {{"state", cfg.n}, {"input", cfg.m},
                     {"disturbance", cfg.p}};
  j["dynamics"]["A"] = sequence_to_json(cfg.A);
  j["dynamics"]["B"] = sequence_to_json(cfg.B);
  j["dynamics"]["E"] = sequence_to_json(cfg.E);
  j["cost"]["Q"] = sequence_to_json(cfg.Q);
  j["cost"]["R"] = sequence_to_json(cfg.R);
  auto x0 = ordered_json::array();
  for (int i = 0; i < cfg.x0.size(); ++i) x0.push_back(cfg.x0(i));
  j["initial_state"] = std::move(x0);
  j["disturbance_model"]["shape"] = mat_to_json(cfg.disturbance_shape);
  if (cfg.energy) j["disturbance_model"]["energy"] = *cfg.energy;
  switch (cfg.weight_kind) {
    case RegretWeight::Kind::identity:
      j["weight"]["kind"] = "identity";
      break;
    case RegretWeight::Kind::benchmark:
      j["weight"]["kind"] = "benchmark";
      break;
    case RegretWeight::Kind::custom:
      j["weight"]["kind"] = "custom";
      j["weight"]["matrix"] = mat_to_json(*cfg.custom_weight);
      break;
  }
  if (cfg.constraints) {
    j["constraints"]["state_rows"] = mat_to_json(cfg.constraints->state_rows);
    j["constraints"]["input_rows"] = mat_to_json(cfg.constraints->input_rows);
  }
  j["solver"] = {{"feasibility_tolerance", cfg.solver.feas_tol},
                 {"gap_tolerance", cfg.solver.gap_tol},
                 {"max_iterations", cfg.solver.max_iterations}};
  j["benchmark"] = {{"realisations", cfg.benchmark_realisations},
                    {"seed", cfg.benchmark_seed}};
  write_json_file(j, path);
}

bool config_equal(const InstanceConfig& a, const InstanceConfig& b) {
  if (a.name != b.name || a.horizon != b.horizon || a.n != b.n ||
      a.m != b.m || a.p != b.p)
    return false;
  if (!sequences_equal(a.A, b.A) || !sequences_equal(a.B, b.B) ||
      !sequences_equal(a.E, b.E) || !sequences_equal(a.Q, b.Q) ||
      !sequences_equal(a.R, b.R))
    return false;
  if (a.x0.size() != b.x0.size() || a.x0 != b.x0) return false;
  if (!mats_equal(a.disturbance_shape, b.disturbance_shape)) return false;
  if (a.energy != b.energy) return false;
  if (a.weight_kind != b.weight_kind) return false;
  if (a.custom_weight.has_value() != b.custom_weight.has_value()) return false;
  if (a.custom_weight && !mats_equal(*a.custom_weight, *b.custom_weight))
    return false;
  if (a.constraints.has_value() != b.constraints.has_value()) return false;
  if (a.constraints &&
      (!mats_equal(a.constraints->state_rows, b.constraints->state_rows) ||
       !mats_equal(a.constraints->input_rows, b.constraints->input_rows)))
    return false;
  if (a.solver.feas_tol != b.solver.feas_tol ||
      a.solver.gap_tol != b.solver.gap_tol ||
      a.solver.max_iterations != b.solver.max_iterations)
    return false;
  return a.benchmark_realisations == b.benchmark_realisations &&
         a.benchmark_seed == b.benchmark_seed;
}

void save_result(const SynthesisRecord& rec, const std::string& path) {
  ordered_json j;
  j["variant"] = rec.variant;
  j["status"] = rec.status;
  j["level"] = rec.level;
  j["multipliers"] = rec.multipliers;
  j["dimensions"] = {{"state", rec.n},
                     {"input", rec.m},
                     {"disturbance", rec.p},
                     {"horizon", rec.horizon}};
  j["gain"] = mat_to_json(rec.gain);
  j["phi_x"] = mat_to_json(rec.phi_x);
  j["phi_u"] = mat_to_json(rec.phi_u);
  j["achievability"] = rec.achievability;
  j["solver"] = {{"gap", rec.solver_gap},
                 {"iterations", rec.solver_iterations}};
  j["constrained"] = rec.constrained;
  write_json_file(j, path);
}

SynthesisRecord load_result(const std::string& path) {
  const json j = read_json_file(path);
  SynthesisRecord rec;
  try {
    rec.variant = j.at("variant").get<std::string>();
    rec.status = j.at("status").get<std::string>();
    rec.level = j.at("level").get<double>();
    rec.multipliers = j.at("multipliers").get<std::vector<double>>();
    const auto& dims = j.at("dimensions");
    rec.n = dims.at("state").get<int>();
    rec.m = dims.at("input").get<int>();
    rec.p = dims.at("disturbance").get<int>();
    rec.horizon = dims.at("horizon").get<int>();
    rec.gain = mat_from_json(j.at("gain"), "gain");
    rec.phi_x = mat_from_json(j.at("phi_x"), "phi_x");
    rec.phi_u = mat_from_json(j.at("phi_u"), "phi_u");
    rec.achievability = j.at("achievability").get<double>();
    rec.solver_gap = j.at("solver").value("gap", 0.0);
    rec.solver_iterations = j.at("solver").value("iterations", 0);
    rec.constrained = j.value("constrained", false);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return rec;
}

}  // namespace regsyn
