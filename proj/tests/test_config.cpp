#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "oracles.hpp"
#include "regsyn/config.hpp"

using namespace regsyn;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) {
    path = std::string("/tmp/regsyn_test_") + name;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

void write_text(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  out << body;
}

InstanceConfig sample_config() {
  InstanceConfig cfg;
  cfg.name = "sample";
  cfg.horizon = 4;
  cfg.n = 2;
  cfg.m = 1;
  cfg.p = 2;
  Mat a(2, 2);
  a << 1.0, 0.1, 0.0, 1.0;
  Mat b(2, 1);
  b << 0.005, 0.1;
  cfg.A.assign(cfg.horizon + 1, a);
  cfg.B.assign(cfg.horizon + 1, b);
  cfg.E.assign(cfg.horizon, Mat::Identity(2, 2));
  cfg.Q.assign(cfg.horizon + 1, Mat::Identity(2, 2));
  Mat r(1, 1);
  r << 0.5;
  cfg.R.assign(cfg.horizon + 1, r);
  cfg.x0 = Vec::Zero(2);
  cfg.x0(0) = 0.3;
  cfg.disturbance_shape = 4.0 * Mat::Identity(2, 2);
  return cfg;
}

std::string matrix_json(const Mat& m) {
  std::string s = "{\"rows\": " + std::to_string(m.rows()) +
                  ", \"cols\": " + std::to_string(m.cols()) + ", \"data\": [";
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) {
      if (r + c > 0) s += ", ";
      s += std::to_string(m(r, c));
    }
  return s + "]}";
}

std::string broadcast_instance(const std::string& q_override = "") {
  Mat a(2, 2);
  a << 1.0, 0.1, 0.0, 1.0;
  Mat b(2, 1);
  b << 0.0, 0.1;
  const std::string q =
      q_override.empty() ? matrix_json(Mat::Identity(2, 2)) : q_override;
  return std::string("{\n") + "\"horizon\": 3,\n" +
         "\"dimensions\": {\"state\": 2, \"input\": 1, \"disturbance\": 2},\n" +
         "\"dynamics\": {\"A\": " + matrix_json(a) +
         ", \"B\": " + matrix_json(b) +
         ", \"E\": " + matrix_json(Mat::Identity(2, 2)) + "},\n" +
         "\"cost\": {\"Q\": " + q +
         ", \"R\": " + matrix_json(0.5 * Mat::Identity(1, 1)) + "},\n" +
         "\"initial_state\": [0.1, -0.2],\n" +
         "\"disturbance_model\": {\"shape\": " +
         matrix_json(Mat::Identity(2, 2)) + "}\n}\n";
}

}  // namespace

TEST_CASE("config round trip is field exact") {
  auto cfg = sample_config();
  cfg.energy = 7.5;
  cfg.weight_kind = RegretWeight::Kind::custom;
  const int d = cfg.n + cfg.p * cfg.horizon;
  cfg.custom_weight = Mat::Identity(d, d) * 1.25;
  ConstraintSpec spec;
  spec.state_rows = Mat(2, 2);
  spec.state_rows << 1.0 / 3.0, 0.0, -1.0 / 3.0, 0.0;
  spec.input_rows = Mat::Zero(0, 1);
  cfg.constraints = spec;
  cfg.solver.feas_tol = 3e-9;
  cfg.solver.max_iterations = 99;
  cfg.benchmark_realisations = 17;
  cfg.benchmark_seed = 42;

  TempFile f("roundtrip.json");
  save_config(cfg, f.path);
  const auto back = load_config(f.path);
  CHECK(config_equal(cfg, back));

  // perturbing any single field must break equality
  auto mutate = back;
  mutate.Q[2](0, 1) += 1e-14;
  CHECK_FALSE(config_equal(cfg, mutate));
}

TEST_CASE("round trip preserves time varying stages") {
  std::mt19937_64 rng(31);
  auto cfg = sample_config();
  for (int k = 0; k <= cfg.horizon; ++k) {
    cfg.A[k] = oracle::random_matrix(rng, 2, 2);
    cfg.Q[k] = oracle::random_spd(rng, 2, 0.1);
  }
  for (int k = 0; k < cfg.horizon; ++k)
    cfg.E[k] = Mat::Identity(2, 2) + 0.1 * oracle::random_matrix(rng, 2, 2);

  TempFile f("timevarying.json");
  save_config(cfg, f.path);
  CHECK(config_equal(cfg, load_config(f.path)));
}

TEST_CASE("single matrices broadcast over the horizon") {
  TempFile f("broadcast.json");
  write_text(f.path, broadcast_instance());
  const auto cfg = load_config(f.path);
  CHECK(cfg.horizon == 3);
  REQUIRE(cfg.A.size() == 4);
  REQUIRE(cfg.E.size() == 3);
  REQUIRE(cfg.Q.size() == 4);
  for (const auto& a : cfg.A) CHECK(a == cfg.A[0]);
  CHECK(cfg.A[0](0, 1) == doctest::Approx(0.1));
  CHECK(cfg.energy == std::nullopt);
  CHECK(cfg.omega_or_default() == doctest::Approx(3.0));
  CHECK(cfg.weight_kind == RegretWeight::Kind::identity);

  // loaded instances construct working problem data
  const auto sys = cfg.make_system();
  const auto cost = cfg.make_cost();
  CHECK(sys.horizon() == 3);
  CHECK(cost.stacked().rows() == 2 * 4 + 1 * 4);
}

TEST_CASE("per stage arrays must match the horizon") {
  Mat a(2, 2);
  a << 1.0, 0.1, 0.0, 1.0;
  const std::string two_as =
      "[" + matrix_json(a) + ", " + matrix_json(a) + "]";
  std::string body = broadcast_instance();
  body.replace(body.find(matrix_json(a)), matrix_json(a).size(), two_as);
  TempFile f("shortseq.json");
  write_text(f.path, body);
  CHECK_THROWS_WITH_AS(load_config(f.path),
                       doctest::Contains("dynamics.A: expected 4 entries"),
                       ConfigError);
}

TEST_CASE("validation names the offending stage") {
  Mat bad_q(2, 2);
  bad_q << 1.0, 0.0, 0.0, -1.0;
  const std::string q_seq = "[" + matrix_json(Mat::Identity(2, 2)) + ", " +
                            matrix_json(Mat::Identity(2, 2)) + ", " +
                            matrix_json(bad_q) + ", " +
                            matrix_json(Mat::Identity(2, 2)) + "]";
  TempFile f("badq.json");
  write_text(f.path, broadcast_instance(q_seq));
  CHECK_THROWS_WITH_AS(load_config(f.path), doctest::Contains("Q_2"),
                       ConfigError);
}

TEST_CASE("malformed inputs are rejected with context") {
  TempFile f("malformed.json");

  write_text(f.path, "{\"horizon\": 3");
  CHECK_THROWS_AS(load_config(f.path), ConfigError);

  write_text(f.path, "{\"horizon\": 3}");
  CHECK_THROWS_AS(load_config(f.path), ConfigError);

  std::string body = broadcast_instance();
  body.replace(body.find("[0.1, -0.2]"), 11, "[0.1]");
  write_text(f.path, body);
  CHECK_THROWS_WITH_AS(load_config(f.path),
                       doctest::Contains("initial_state"), ConfigError);

  CHECK_THROWS_AS(load_config("/tmp/regsyn_no_such_file.json"), ConfigError);
}

TEST_CASE("degenerate disturbance shape is rejected") {
  auto cfg = sample_config();
  cfg.disturbance_shape(1, 1) = 0.0;
  TempFile f("badshape.json");
  save_config(cfg, f.path);
  CHECK_THROWS_WITH_AS(load_config(f.path),
                       doctest::Contains("positive definite"), ConfigError);
}

TEST_CASE("custom weight requires a matrix of the right size") {
  auto cfg = sample_config();
  cfg.weight_kind = RegretWeight::Kind::custom;
  cfg.custom_weight = Mat::Identity(3, 3);
  TempFile f("badweight.json");
  save_config(cfg, f.path);
  CHECK_THROWS_AS(load_config(f.path), ConfigError);
}

TEST_CASE("weight factory honours the configured kind") {
  auto cfg = sample_config();
  const auto sys = cfg.make_system();
  const auto cost = cfg.make_cost();
  const auto o = noncausal_cost_operator(sys, cost);

  auto w = cfg.make_weight(o);
  CHECK(w.matrix() == Mat::Identity(w.matrix().rows(), w.matrix().cols()));

  cfg.weight_kind = RegretWeight::Kind::benchmark;
  w = cfg.make_weight(o);
  CHECK((w.matrix() - o.matrix()).norm() <=
        1e-6 * (1.0 + o.matrix().norm()));
}

TEST_CASE("synthesis record round trip") {
  std::mt19937_64 rng(7);
  SynthesisRecord rec;
  rec.variant = "dr-energy";
  rec.status = "optimal";
  rec.level = 1.2345678901234;
  rec.multipliers = {0.5, 1.5};
  rec.n = 2;
  rec.m = 1;
  rec.p = 2;
  rec.horizon = 3;
  rec.gain = oracle::random_matrix(rng, 4, 8);
  rec.phi_x = oracle::random_matrix(rng, 8, 8);
  rec.phi_u = oracle::random_matrix(rng, 4, 8);
  rec.achievability = 3.2e-12;
  rec.solver_gap = 4.4e-10;
  rec.solver_iterations = 23;
  rec.constrained = true;

  TempFile f("record.json");
  save_result(rec, f.path);
  const auto back = load_result(f.path);
  CHECK(back.variant == rec.variant);
  CHECK(back.status == rec.status);
  CHECK(back.level == rec.level);
  CHECK(back.multipliers == rec.multipliers);
  CHECK(back.gain == rec.gain);
  CHECK(back.phi_x == rec.phi_x);
  CHECK(back.phi_u == rec.phi_u);
  CHECK(back.achievability == rec.achievability);
  CHECK(back.solver_gap == rec.solver_gap);
  CHECK(back.solver_iterations == rec.solver_iterations);
  CHECK(back.constrained == rec.constrained);
}
