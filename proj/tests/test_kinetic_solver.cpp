#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "kinlim/error.hpp"
#include "kinlim/kinetic_solver.hpp"
#include "kinlim/micromacro.hpp"
#include "kinlim/scenario.hpp"

using namespace kinlim;

namespace {

GridPtr small_grid() {
  static const GridPtr g = VelocityGrid::build({16, 12, 12}, 6.0, 1.2);
  return g;
}

KineticConfig small_config(double eps, double t_final = 0.2) {
  KineticConfig c;
  c.epsilon = eps;
  c.grid = small_grid();
  c.n_cells = 60;
  c.x_half = 3.0;
  c.t_final = t_final;
  c.mstar = {1.0, {0, 0, 0}, 0.9};
  return c;
}

struct Setup {
  ContactScenario sc;
  KineticConfig cfg;
  DistributionField f0;
};

Setup wave_setup(double eps, double theta_plus = 1.2, double t_final = 0.2) {
  ScenarioOptions o;
  o.theta_plus = theta_plus;
  CollisionModel bgk;
  Setup s{make_contact_scenario(o, bgk), small_config(eps, t_final), {}};
  s.cfg.mstar = s.sc.mstar;
  const auto w = s.sc.eulerian_wave(eps, 0.0, s.cfg.x_half);
  s.f0 = init_from_wave(w, s.cfg.grid, s.cfg.x0(), s.cfg.dx(), s.cfg.n_cells);
  return s;
}

// Two drifting Maxwellians: far from local equilibrium in every cell.
DistributionField two_stream(const KineticConfig& c) {
  DistributionField f(c.grid, c.x0(), c.dx(), c.n_cells, Frame::Eulerian);
  for (std::size_t i = 0; i < c.n_cells; ++i) {
    const double a = 0.5 + 0.3 * std::exp(-f.x(i) * f.x(i));
    const auto A = maxwellian({a, {0.6, 0, 0}, 0.7}, *c.grid);
    const auto B = maxwellian({1.0 - a, {-0.6, 0, 0}, 0.8}, *c.grid);
    auto s = f.cell(i);
    for (std::size_t k = 0; k < s.size(); ++k) s[k] = A[k] + B[k];
  }
  return f;
}

}  // namespace

TEST_CASE("kinetic: constant Maxwellian is a fixed point") {
  for (auto lim : {kernels::Limiter::Upwind, kernels::Limiter::Minmod}) {
    auto c = small_config(0.05);
    c.limiter = lim;
    const Primitive st{1.3, {0, 0, 0}, 1.1};
    const auto f0 = constant_maxwellian_field(st, c.grid, c.x0(), c.dx(), c.n_cells);
    const auto tr = kinetic_run(c, f0, {st, st});
    const auto& f = tr.snapshots.back().f;
    CHECK(testutil::max_abs_diff(f.values, f0.values) <= 1e-14 * testutil::max_abs(f0.values));
    CHECK(tr.steps > 5);
  }
}

TEST_CASE("kinetic: initial data is a pure local Maxwellian matching the wave") {
  const auto s = wave_setup(0.05);
  const auto w = s.sc.eulerian_wave(0.05, 0.0, s.cfg.x_half);
  const auto st = moment_fields(s.f0);
  double worst = 0.0, micro = 0.0;
  for (std::size_t i = 0; i < st.size(); ++i) {
    const auto want = w.sample(s.f0.x(i));
    worst = std::max({worst, std::abs(st[i].rho - want.rho), std::abs(st[i].u[0] - want.u[0]),
                      std::abs(st[i].theta - want.theta)});
    const auto basis = build_local_basis(s.f0.cell(i), *s.cfg.grid);
    const auto split = project(s.f0.cell(i), basis);
    micro = std::max(micro, testutil::max_abs(split.micro) / testutil::max_abs(s.f0.cell(i)));
  }
  CHECK(worst <= 1e-12);
  CHECK(micro <= 1e-12);
}

TEST_CASE("kinetic: collision substep conserves moments cell-wise") {
  auto s = wave_setup(0.05);
  s.cfg.audit = true;
  const auto tr = kinetic_run(s.cfg, two_stream(s.cfg), s.sc.boundary);
  CHECK(tr.audit.cells > 0);
  CHECK(tr.audit.max_relative_defect <= 1e-12);
}

TEST_CASE("kinetic: transport limit at large epsilon, relaxation at small epsilon") {
  auto c = small_config(1e3);
  const Primitive st{1.0, {0, 0, 0}, 1.0};
  const auto f0 = two_stream(c);
  std::vector<double> Mstar(c.grid->size());
  maxwellian_into(c.mstar, *c.grid, Mstar);

  KineticStepper big(c, {st, st});
  const double dt = big.max_dt();
  auto fa = f0;
  big.step(fa, dt);
  // Pure transport: two half steps with the same kernels.
  auto fb = f0;
  auto c0 = c;
  c0.epsilon = 1e300;
  KineticStepper none(c0, {st, st});
  none.step(fb, dt);
  const double diff = testutil::max_abs_diff(fa.values, fb.values) / testutil::max_abs(f0.values);
  CHECK(diff <= 10.0 * dt / c.epsilon);
  CHECK(diff > 0.0);

  c.epsilon = 1e-4;
  auto fc = f0;
  KineticStepper(c, {st, st}).step(fc, dt);
  const double m_big = micro_norm(fa, Mstar), m_small = micro_norm(fc, Mstar);
  CHECK(m_small <= 1e-2 * m_big);
  // The collision substep alone lands on the local Maxwellian.
  auto fd = f0;
  kernels::omp::bgk_relax(*c.grid, c.n_cells, std::exp(-dt / 1e-4), fd.values);
  CHECK(micro_norm(fd, Mstar) <= 1e-24 * micro_norm(f0, Mstar) + 1e-28);
}

TEST_CASE("kinetic: zero jump keeps the constant Maxwellian") {
  auto s = wave_setup(0.05, 1.0);
  const auto tr = kinetic_run(s.cfg, s.f0, s.sc.boundary);
  const auto M = maxwellian({1.0, {0, 0, 0}, 1.0}, *s.cfg.grid);
  std::vector<double> Mm(M.size());
  match_maxwellian(conserved_from_primitive({1.0, {0, 0, 0}, 1.0}), *s.cfg.grid, Mm);
  for (std::size_t i = 0; i < s.cfg.n_cells; ++i)
    CHECK(testutil::max_abs_diff(tr.snapshots.back().f.cell(i), Mm) <= 1e-14);
}

TEST_CASE("kinetic: conservation ledger and mass drift") {
  auto s = wave_setup(0.05, 1.2, 1.0);
  const auto tr = kinetic_run(s.cfg, s.f0, s.sc.boundary);
  const auto& e = tr.ledger.back();
  CHECK(e.t == doctest::Approx(1.0));
  for (int q = 0; q < 3; ++q) CHECK(std::abs(e.drift[q]) <= 1e-12 * std::abs(e.totals[0]));
  const double mass0 = kinetic_totals(s.f0)[0];
  CHECK(std::abs(e.totals[0] - mass0) <= 1e-8 * mass0);
  CHECK(tr.max_negative == 0);
}

TEST_CASE("kinetic: microscopic norm decreases with epsilon") {
  double prev = INFINITY;
  for (double eps : {0.1, 0.01}) {
    auto s = wave_setup(eps, 1.2, 0.5);
    const auto tr = kinetic_run(s.cfg, s.f0, s.sc.boundary);
    double peak = 0.0;
    for (const auto& m : tr.micro_trace) peak = std::max(peak, m.micro_norm);
    CHECK(tr.micro_trace.front().micro_norm <= 1e-24);
    CHECK(peak > 0.0);
    CHECK(peak < prev);
    prev = peak;
  }
}

TEST_CASE("kinetic: serial reference and OpenMP path agree") {
  auto s = wave_setup(0.05, 1.2, 0.1);
  const auto a = kinetic_run(s.cfg, s.f0, s.sc.boundary);
  s.cfg.parallel = false;
  const auto b = kinetic_run(s.cfg, s.f0, s.sc.boundary);
  CHECK(testutil::max_abs_diff(a.snapshots.back().f.values, b.snapshots.back().f.values) <= 1e-15);
}

TEST_CASE("kinetic: preconditions") {
  auto s = wave_setup(0.05);
  KineticStepper st(s.cfg, s.sc.boundary);
  auto f = s.f0;
  CHECK_THROWS_WITH_AS(st.step(f, 1.5 * st.max_dt()), doctest::Contains("kinetic.dt"),
                       PreconditionError);
  auto bad = s.cfg;
  bad.epsilon = -1;
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("kinetic.epsilon"), PreconditionError);
  bad = s.cfg;
  bad.snapshots = {5.0};
  CHECK_THROWS_WITH_AS(bad.validate(), doctest::Contains("kinetic.snapshots"), PreconditionError);
  bad = s.cfg;
  bad.n_cells = 30;
  CHECK_THROWS_WITH_AS(kinetic_run(bad, s.f0, s.sc.boundary), doctest::Contains("kinetic.initial"),
                       PreconditionError);
}

TEST_CASE("kinetic: hard-sphere path on a coarse grid") {
  KineticConfig c;
  c.epsilon = 0.5;
  c.grid = VelocityGrid::build({8, 8, 8}, 4.5, 1.0);
  c.n_cells = 6;
  c.x_half = 1.5;
  c.model.kind = CollisionKind::HardSphere;
  c.hs_refresh = 3;
  c.audit = true;
  c.trace_every = 1;
  c.mstar = {1.0, {0, 0, 0}, 0.85};
  // Spatially uniform two-stream data: pure collisional relaxation.
  DistributionField f(c.grid, c.x0(), c.dx(), c.n_cells, Frame::Eulerian);
  const auto A = maxwellian({0.5, {0.5, 0, 0}, 0.9}, *c.grid);
  const auto B = maxwellian({0.5, {-0.5, 0, 0}, 0.9}, *c.grid);
  for (std::size_t i = 0; i < c.n_cells; ++i)
    for (std::size_t k = 0; k < A.size(); ++k) f.cell(i)[k] = A[k] + B[k];
  const Primitive far = primitive_from_conserved(moments(f.cell(0), *c.grid));
  KineticStepper st(c, {far, far});
  c.t_final = 6 * st.max_dt();
  const auto tr = kinetic_run(c, f, {far, far});
  CHECK(tr.steps == 6);
  CHECK(tr.audit.max_relative_defect <= 1e-12);
  REQUIRE(tr.micro_trace.size() >= 3);
  for (std::size_t k = 1; k < tr.micro_trace.size(); ++k)
    CHECK(tr.micro_trace[k].micro_norm < tr.micro_trace[k - 1].micro_norm);
  CHECK(tr.tally.kept > 0);
}
