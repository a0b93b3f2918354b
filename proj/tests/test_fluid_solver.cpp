#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "kinlim/error.hpp"
#include "kinlim/fluid_solver.hpp"

using namespace kinlim;

namespace {

ScalarFn constant_fn(double c) {
  return [c](double) { return c; };
}

std::vector<double> cells(double X, std::size_t n) {
  std::vector<double> x(n);
  const double dx = 2 * X / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = -X + (static_cast<double>(i) + 0.5) * dx;
  return x;
}

FluidField uniform_field(std::size_t n, double v, double theta, double eps) {
  FluidField s;
  s.x = cells(2.0, n);
  s.dx = 4.0 / static_cast<double>(n);
  s.epsilon = eps;
  s.v.assign(n, v);
  s.theta.assign(n, theta);
  s.u1.assign(n, 0.0);
  s.u2.assign(n, 0.0);
  s.u3.assign(n, 0.0);
  s.left = s.right = {v, theta};
  s.mu = [](double t) { return 0.5 * std::sqrt(t); };
  s.lambda = [](double t) { return 0.9 * std::sqrt(t); };
  return s;
}

// Smooth localized bumps on a constant background (far field untouched).
FluidField bump_field(std::size_t n, double eps) {
  auto s = uniform_field(n, 1.0, 1.0, eps);
  for (std::size_t i = 0; i < n; ++i) {
    const double g = std::exp(-s.x[i] * s.x[i] / 0.08);
    s.v[i] = 1.0 + 0.1 * g;
    s.u1[i] = 0.2 * s.x[i] * g;
    s.u2[i] = 0.05 * g;
    s.theta[i] = 1.0 - 0.1 * g;
  }
  return s;
}

struct WaveSetup {
  RiemannContact rc = euler_riemann_contact(1, 1, 1.2);
  double mu = rc.p_plus, lam = 5.0 * rc.p_plus / 3.0;
  SelfSimilarProfile p = solve_selfsimilar(1, 1.2, rc.p_plus, constant_fn(5.0 * rc.p_plus / 3.0));
};

}  // namespace

TEST_CASE("fluid: constant state is a fixed point") {
  auto s = uniform_field(64, 1.2, 0.8, 0.05);
  const auto s0 = s;
  const double dt = 0.9 * max_stable_dt(s);
  for (int k = 0; k < 20; ++k) ns_step(s, dt);
  CHECK(testutil::max_abs_diff(s.v, s0.v) <= 1e-14);
  CHECK(testutil::max_abs_diff(s.theta, s0.theta) <= 1e-14);
  CHECK(testutil::max_abs(s.u1) <= 1e-14);
  CHECK(s.t == doctest::Approx(20 * dt));
}

TEST_CASE("fluid: stability limit, vacuum and validation") {
  auto s = uniform_field(32, 1.0, 1.0, 0.05);
  CHECK_THROWS_AS(ns_step(s, 1.01 * max_stable_dt(s)), PreconditionError);
  CHECK_THROWS_AS(ns_step(s, -1.0), PreconditionError);
  auto bad = s;
  bad.theta[5] = -1.0;
  CHECK_THROWS_AS(bad.validate(), NumericalError);
  bad = s;
  bad.epsilon = 0.0;
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("fluid.epsilon"), PreconditionError);
  bad = s;
  bad.x[3] += 1e-3;
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("fluid.x"), PreconditionError);
  // A strong expansion drives the state to vacuum; the error names the cell.
  auto hot = uniform_field(64, 1.0, 1.0, 1e-4);
  for (std::size_t i = 0; i < hot.size(); ++i) hot.u1[i] = hot.x[i] > 0 ? 3.0 : -3.0;
  FluidRunConfig c;
  c.t_final = 2.0;
  CHECK_THROWS_WITH_AS(ns_run(hot, c), doctest::Contains("vacuum"), NumericalError);
}

TEST_CASE("fluid: transverse velocity stays zero for Riemann data") {
  const auto rc = euler_riemann_contact(1, 1, 1.2);
  auto s = fluid_from_riemann(rc, cells(2.0, 200), 0.01, 4.0, constant_fn(rc.p_plus),
                              constant_fn(5 * rc.p_plus / 3));
  FluidRunConfig c;
  c.t_final = 0.5;
  const auto tr = ns_run(s, c);
  const auto& e = tr.snapshots.back();
  CHECK(testutil::max_abs(e.u2) == 0.0);
  CHECK(testutil::max_abs(e.u3) == 0.0);
  CHECK(testutil::max_abs(e.u1) > 0.0);
}

TEST_CASE("fluid: zero-length run echoes the initial state") {
  const auto s = bump_field(50, 0.01);
  FluidRunConfig c;
  c.t_final = 0.0;
  const auto tr = ns_run(s, c);
  REQUIRE(tr.snapshots.size() == 1);
  CHECK(tr.snapshots[0].v == s.v);
  CHECK(tr.snapshots[0].theta == s.theta);
  CHECK(tr.ledger.steps == 0);
}

TEST_CASE("fluid: conservation ledger closes per step (property)") {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  for (int trial = 0; trial < 8; ++trial) {
    auto s = bump_field(120, 0.02 + 0.02 * (U(rng) + 1.0));
    s.left = {1.0 + 0.1 * U(rng), 1.0 + 0.1 * U(rng)};
    s.right = {1.0 + 0.1 * U(rng), 1.0 + 0.1 * U(rng)};
    for (std::size_t i = 0; i < s.size(); ++i) {
      s.u1[i] += 0.05 * U(rng);
      s.u3[i] = 0.05 * U(rng);
      s.theta[i] *= 1.0 + 0.05 * U(rng);
    }
    FluidRunConfig c;
    c.t_final = 0.3;
    c.snapshots = {0.1, 0.2};
    const auto tr = ns_run(s, c);
    CHECK(tr.ledger.max_step_drift <= 1e-10);
    REQUIRE(tr.ledger.entries.size() == 3);
    for (const auto& e : tr.ledger.entries)
      for (double d : e.drift) CHECK(std::abs(d) <= 1e-10 * static_cast<double>(tr.ledger.steps));
  }
}

TEST_CASE("fluid: self-convergence order under dt and dx refinement") {
  // dt = 0.2 dx stays inside both stability limits on every level.
  std::vector<std::vector<double>> sol;
  const double eps = 0.002;
  for (std::size_t n : {200u, 400u, 800u}) {
    auto s = bump_field(n, eps);
    FluidRunConfig c;
    c.t_final = 0.4;
    c.dt = 0.2 * s.dx;
    sol.push_back(ns_run(s, c).snapshots.back().theta);
  }
  auto restrict_diff = [](const std::vector<double>& coarse, const std::vector<double>& fine) {
    double e = 0.0;
    for (std::size_t i = 0; i < coarse.size(); ++i)
      e += std::abs(coarse[i] - 0.5 * (fine[2 * i] + fine[2 * i + 1]));
    return e / static_cast<double>(coarse.size());
  };
  const double e1 = restrict_diff(sol[0], sol[1]), e2 = restrict_diff(sol[1], sol[2]);
  const double order = std::log2(e1 / e2);
  MESSAGE("fluid self-convergence order " << order);
  CHECK(order >= 1.8);
}

TEST_CASE("fluid: deviation from the evolving contact wave") {
  const WaveSetup w;
  const double eps = 0.01;
  const auto x = cells(4.0, 800);
  auto wave0 = build_wave(w.p, eps, 0.0, x);
  wave_residuals(wave0, w.p, constant_fn(w.mu), constant_fn(w.lam));
  const double R = testutil::max_abs(wave0.R1) + testutil::max_abs(wave0.R2);
  const auto s = fluid_from_wave(wave0, w.p, constant_fn(w.mu), constant_fn(w.lam));
  FluidRunConfig c;
  c.t_final = 3.0;
  c.snapshots = {1.0, 2.0};
  c.reference = &w.p;
  const auto tr = ns_run(s, c);
  REQUIRE(tr.deviation.size() == 3);
  const auto& d1 = tr.deviation[0];
  CHECK(d1.t == doctest::Approx(1.0));
  const double C = d1.max() / (R * 1.0 / std::sqrt(eps));
  MESSAGE("deviation constant at t = 1: " << C);
  CHECK(C <= 10.0);
  // Sublinear growth: deviation / t decreases.
  CHECK(tr.deviation[1].max() / 2.0 <= d1.max());
  CHECK(tr.deviation[2].max() / 3.0 <= tr.deviation[1].max() / 2.0);
  CHECK(tr.ledger.max_step_drift <= 1e-10);
  CHECK(testutil::max_abs(tr.snapshots.back().u2) == 0.0);
}
