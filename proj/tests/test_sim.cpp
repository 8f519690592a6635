#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "regsyn/sim.hpp"

using namespace regsyn;

TEST_CASE("constant family runs along the boundary") {
  DisturbanceFamily f;
  f.kind = FamilyKind::constant;
  f.direction = Vec::Zero(2);
  f.direction(0) = 1.0;
  const auto w = generate(f, Mat::Identity(2, 2), 6, 0, 0);
  REQUIRE(w.size() == 6);
  for (const auto& wk : w) {
    CHECK(std::abs(wk(0) - 1.0) <= 1e-14);
    CHECK(std::abs(wk(1)) <= 1e-14);
  }
}

TEST_CASE("deterministic families touch the boundary at their peak") {
  std::mt19937_64 rng(103);
  const Mat P = oracle::random_spd(rng, 2, 0.5);
  for (const auto kind :
       {FamilyKind::constant, FamilyKind::sinusoidal, FamilyKind::sawtooth,
        FamilyKind::step, FamilyKind::stair}) {
    DisturbanceFamily f;
    f.kind = kind;
    const auto w = generate(f, P, 12, 0, 0);
    double peak = 0.0;
    for (const auto& wk : w) {
      const double q = wk.dot(P * wk);
      CHECK(q <= 1.0 + 1e-12);
      peak = std::max(peak, q);
    }
    CHECK(std::abs(peak - 1.0) <= 1e-12);
  }
}

TEST_CASE("random families stay inside the set and repeat with the seed") {
  std::mt19937_64 rng(107);
  const Mat P = oracle::random_spd(rng, 3, 0.4);
  for (const auto kind :
       {FamilyKind::truncated_gaussian, FamilyKind::uniform_ellipsoid}) {
    DisturbanceFamily f;
    f.kind = kind;
    for (int index = 0; index < 50; ++index) {
      const auto a = generate(f, P, 10, 42, index);
      const auto b = generate(f, P, 10, 42, index);
      for (int k = 0; k < 10; ++k) {
        CHECK(a[k] == b[k]);
        CHECK(a[k].dot(P * a[k]) <= 1.0 + 1e-12);
      }
    }
    const auto other = generate(f, P, 10, 43, 0);
    CHECK(other[0] != generate(f, P, 10, 42, 0)[0]);
  }
}

TEST_CASE("uniform ellipsoid empirical maximum stays below one") {
  DisturbanceFamily f;
  f.kind = FamilyKind::uniform_ellipsoid;
  std::mt19937_64 rng(109);
  const Mat P = oracle::random_spd(rng, 2, 0.3);
  double worst = 0.0;
  for (int index = 0; index < 1000; ++index) {
    const auto w = generate(f, P, 10, 7, index);
    for (const auto& wk : w) worst = std::max(worst, wk.dot(P * wk));
  }
  CHECK(worst <= 1.0);
  CHECK(worst >= 0.5);  // the draws are not collapsing to the centre
}

TEST_CASE("zero feedback reproduces the open loop map") {
  std::mt19937_64 rng(113);
  const int n = 2, m = 1, p = 2, T = 5;
  const auto sys = oracle::random_system(rng, n, m, p, T);
  const auto cost = oracle::random_cost(rng, n, m, T, true);
  const auto ops = build_stacked(sys);

  const Controller zero(n, m, T);
  const Vec x0 = oracle::random_vec(rng, n);
  std::vector<Vec> w(T);
  for (auto& wk : w) wk = oracle::random_vec(rng, p, 0.5);

  const auto rec = rollout(sys, cost, zero, x0, w);
  Vec delta(n + p * T);
  delta.head(n) = x0;
  for (int k = 0; k < T; ++k) delta.segment(n + k * p, p) = w[k];
  const Vec states = ops.disturbance_map * delta;
  for (int k = 0; k <= T; ++k) {
    CHECK((rec.x[k] - states.segment(k * n, n)).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(rec.u[k].cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("rollout reproduces the synthesised response maps") {
  std::mt19937_64 rng(127);
  const int n = 2, m = 1, p = 2, T = 4;
  const auto sys = oracle::random_system(rng, n, m, p, T);
  const auto cost = oracle::random_cost(rng, n, m, T, true);
  const auto o = noncausal_cost_operator(sys, cost);
  const auto res =
      synth_zero_init(sys, cost, o, RegretWeight::identity(n, p, T));
  REQUIRE(res.ok());
  REQUIRE(res.controller.has_value());

  const Mat phix = res.response->state_map();
  const Mat phiu = res.response->input_map();
  for (int rep = 0; rep < 20; ++rep) {
    const Vec x0 = oracle::random_vec(rng, n);
    std::vector<Vec> w(T);
    Vec delta(n + p * T);
    delta.head(n) = x0;
    for (int k = 0; k < T; ++k) {
      w[k] = oracle::random_vec(rng, p, 0.7);
      delta.segment(n + k * p, p) = w[k];
    }
    const auto rec = rollout(sys, cost, *res.controller, x0, w);
    const Vec xs = phix * delta;
    const Vec us = phiu * delta;
    for (int k = 0; k <= T; ++k) {
      CHECK((rec.x[k] - xs.segment(k * n, n)).cwiseAbs().maxCoeff() <= 1e-8);
      CHECK((rec.u[k] - us.segment(k * m, m)).cwiseAbs().maxCoeff() <= 1e-8);
    }
  }
}

TEST_CASE("rollout superposition") {
  std::mt19937_64 rng(131);
  const int n = 2, m = 2, p = 2, T = 4;
  const auto sys = oracle::random_system(rng, n, m, p, T);
  const auto cost = oracle::random_cost(rng, n, m, T, true);
  const auto k = oracle::random_controller(rng, n, m, T);

  const Vec x0a = oracle::random_vec(rng, n), x0b = oracle::random_vec(rng, n);
  std::vector<Vec> wa(T), wb(T), wsum(T);
  for (int t = 0; t < T; ++t) {
    wa[t] = oracle::random_vec(rng, p);
    wb[t] = oracle::random_vec(rng, p);
    wsum[t] = wa[t] + wb[t];
  }
  const auto ra = rollout(sys, cost, k, x0a, wa);
  const auto rb = rollout(sys, cost, k, x0b, wb);
  const auto rs = rollout(sys, cost, k, Vec(x0a + x0b), wsum);
  for (int t = 0; t <= T; ++t) {
    CHECK((ra.x[t] + rb.x[t] - rs.x[t]).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((ra.u[t] + rb.u[t] - rs.u[t]).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("evaluate run basics") {
  std::mt19937_64 rng(137);
  const int n = 2, m = 1, p = 2, T = 3;
  const auto sys = oracle::random_system(rng, n, m, p, T);
  const auto cost = oracle::random_cost(rng, n, m, T, true);
  const auto o = noncausal_cost_operator(sys, cost);
  const auto k = oracle::random_controller(rng, n, m, T, 0.2);

  const std::vector<Vec> zeros(T, Vec::Zero(p));
  const auto quiet = evaluate_run(sys, cost, o, k, Vec::Zero(n), zeros);
  CHECK(quiet.cost == 0.0);
  CHECK(quiet.regret == 0.0);
  CHECK(std::isnan(quiet.competitive_ratio));

  for (int rep = 0; rep < 30; ++rep) {
    const Vec x0 = oracle::random_vec(rng, n);
    std::vector<Vec> w(T);
    for (auto& wk : w) wk = oracle::random_vec(rng, p, 0.6);
    const auto rec = evaluate_run(sys, cost, o, k, x0, w);
    CHECK(rec.regret >= -1e-8);
    if (rec.benchmark_cost > 1e-12)
      CHECK(std::abs(rec.competitive_ratio -
                     rec.cost / rec.benchmark_cost) <= 1e-12);
  }
}

TEST_CASE("energy ball certificate holds along closed loop runs") {
  std::mt19937_64 rng(139);
  const int n = 2, m = 1, p = 2, T = 4;
  const auto sys = oracle::random_system(rng, n, m, p, T);
  const auto cost = oracle::random_cost(rng, n, m, T, true);
  const auto o = noncausal_cost_operator(sys, cost);
  const auto wgt = RegretWeight::identity(n, p, T);
  Vec x0(n);
  x0 << 0.6, -0.4;
  const double omega = 1.2;

  const auto res = synth_energy_ball(sys, cost, o, wgt, x0, omega);
  REQUIRE(res.ok());
  REQUIRE(res.controller.has_value());

  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unit;
  for (int rep = 0; rep < 100; ++rep) {
    Vec stacked(p * T);
    for (int i = 0; i < stacked.size(); ++i) stacked(i) = gauss(rng);
    stacked *= std::sqrt(omega) * std::pow(unit(rng), 1.0 / (p * T)) /
               stacked.norm();
    std::vector<Vec> w(T);
    for (int k = 0; k < T; ++k) w[k] = stacked.segment(k * p, p);
    const auto rec = evaluate_run(sys, cost, o, *res.controller, x0, w);
    const double weight_value = x0.squaredNorm() + stacked.squaredNorm();
    CHECK(rec.regret <= res.level * weight_value + 1e-6);
  }
}

TEST_CASE("pointwise certificate holds for generated families") {
  std::mt19937_64 rng(149);
  const int n = 2, m = 1, p = 2, T = 4;
  const auto sys = oracle::random_system(rng, n, m, p, T);
  const auto cost = oracle::random_cost(rng, n, m, T, true);
  const auto o = noncausal_cost_operator(sys, cost);
  const auto wgt = RegretWeight::identity(n, p, T);
  Vec x0(n);
  x0 << 0.5, 0.2;
  const Mat P = oracle::random_spd(rng, p, 0.6) + Mat::Identity(p, p);

  const auto res = synth_pointwise(sys, cost, o, wgt, x0, P);
  REQUIRE(res.ok());
  REQUIRE(res.controller.has_value());

  for (const auto kind : all_families()) {
    DisturbanceFamily f;
    f.kind = kind;
    for (int index = 0; index < 5; ++index) {
      const auto w = generate(f, P, T, 11, index);
      const auto rec = evaluate_run(sys, cost, o, *res.controller, x0, w);
      double weight_value = x0.squaredNorm();
      for (const auto& wk : w) weight_value += wk.squaredNorm();
      CHECK(rec.regret <= res.level * weight_value + 1e-6);
    }
  }
}

TEST_CASE("benchmark table normalisation and determinism") {
  std::mt19937_64 rng(151);
  const int n = 2, m = 1, p = 2, T = 4;
  const auto sys = oracle::random_system(rng, n, m, p, T);
  const auto cost = oracle::random_cost(rng, n, m, T, true);
  const auto o = noncausal_cost_operator(sys, cost);
  const Mat P = Mat::Identity(p, p);
  Vec x0(n);
  x0 << 0.4, -0.1;

  std::vector<DisturbanceFamily> families;
  for (const auto kind : all_families()) {
    DisturbanceFamily f;
    f.kind = kind;
    families.push_back(f);
  }

  const auto h2 = synth_h2(sys, cost);
  const auto hinf = synth_hinf(sys, cost);
  REQUIRE(h2.ok());
  REQUIRE(hinf.ok());
  std::vector<std::pair<std::string, Controller>> controllers{
      {"h2", *h2.controller}, {"hinf", *hinf.controller}};

  const auto table =
      benchmark_table(sys, cost, o, controllers, families, P, x0, 20, 3);
  REQUIRE(table.normalised.rows() == static_cast<int>(families.size()));
  REQUIRE(table.normalised.cols() == 2);
  for (int f = 0; f < table.normalised.rows(); ++f) {
    CHECK(table.normalised.row(f).minCoeff() == 1.0);
    for (int c = 0; c < table.normalised.cols(); ++c)
      CHECK(table.normalised(f, c) >= 1.0);
  }

  const auto again =
      benchmark_table(sys, cost, o, controllers, families, P, x0, 20, 3);
  CHECK(table.to_csv() == again.to_csv());

  const auto csv = table.to_csv();
  CHECK(csv.rfind("family,h2,hinf\n", 0) == 0);

  std::vector<std::pair<std::string, Controller>> solo{{"h2", *h2.controller}};
  const auto single =
      benchmark_table(sys, cost, o, solo, families, P, x0, 5, 3);
  for (int f = 0; f < single.normalised.rows(); ++f)
    CHECK(single.normalised(f, 0) == 1.0);
}
