#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../helpers.hpp"
#include "../oracles.hpp"
#include "kinlim/collision.hpp"
#include "kinlim/contact_wave.hpp"
#include "kinlim/diagnostics.hpp"
#include "kinlim/fluid_solver.hpp"
#include "kinlim/kinetic_solver.hpp"
#include "kinlim/micromacro.hpp"
#include "kinlim/scenario.hpp"

using namespace kinlim;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(const std::string& name, const std::function<Outcome()>& run) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = run();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!o.pass) ++failures;
  std::ostringstream secs;
  secs << std::fixed << std::setprecision(1) << s;
  std::cout << (o.pass ? "PASS " : "FAIL ") << name << " [" << secs.str() << " s] " << o.detail
            << std::endl;
}

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(3) << x;
  return os.str();
}

GridPtr run_grid() {
  static const GridPtr g = VelocityGrid::build({16, 12, 12}, 6.0, 1.2);
  return g;
}

ContactScenario bgk_scenario(double theta_plus = 1.2) {
  ScenarioOptions o;
  o.theta_plus = theta_plus;
  return make_contact_scenario(o, CollisionModel{});
}

// ---- projection algebra ----

Outcome projection_algebra() {
  const auto g = run_grid();
  std::mt19937_64 rng(20240611);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto f = testutil::random_slice(rng, *g);
    const auto b = build_local_basis(f, *g);
    const double nf = std::sqrt(b.inner(f, f));
    const auto p0 = apply_p0(f, b), p1 = apply_p1(f, b);
    const auto p00 = apply_p0(p0, b), p01 = apply_p0(p1, b);
    std::vector<double> d(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) d[k] = p00[k] - p0[k];
    worst = std::max({worst, std::sqrt(b.inner(d, d)) / nf, std::sqrt(b.inner(p01, p01)) / nf});
    for (int j = 0; j < 5; ++j) worst = std::max(worst, std::abs(b.inner(p1, b.chi[j])) / nf);
  }
  return {worst <= 1e-12, "100 slices, worst relative defect " + fmt(worst) + " (<= 1e-12)"};
}

// ---- collision conservation ----

Outcome collision_conservation() {
  std::mt19937_64 rng(20240612);
  const auto g = run_grid();
  double bgk = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto f = testutil::random_slice(rng, *g);
    bgk = std::max(bgk, invariant_moments(bgk_collision(f, *g, 1.0), *g).max_relative());
  }
  const auto hg = VelocityGrid::build({16, 16, 16}, 6.0, 1.2);
  const HardSphereOperator op(hg, 8, 8);
  double hs = 0.0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int t = 0; t < 100; ++t) {
    const auto f = testutil::random_slice(rng, *hg);
    hs = std::max(hs, invariant_moments(op.collide(f, f), *hg).max_relative());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {bgk <= 1e-12 && hs <= 1e-12,
          "BGK worst " + fmt(bgk) + ", hard-sphere (16^3 x 8x8) worst " + fmt(hs) +
              " (<= 1e-12 of scale); hard-sphere time " + fmt(secs) + " s"};
}

// ---- certification ----

std::optional<std::string> certification_problem(const CertificationReport& r) {
  if (!r.success) return "failure: " + r.failure;
  if (!(r.sigma > 0.0)) return "sigma not positive";
  if (r.inverse_bound_ratio_m > 1.0 + 1e-10 || r.inverse_bound_ratio_mstar > 1.0 + 1e-10)
    return "inverse bound ratio above 1";
  if (r.projection_moment.size() != 9) return "expected 9 (k, lambda) pairs";
  for (const auto& e : r.projection_moment)
    if (!e.ok) return "projection moment bound fails at k = " + std::to_string(e.k);
  return std::nullopt;
}

Outcome certification() {
  const Primitive state{1.0, {0.0, 0.0, 0.0}, 1.0}, mstar{1.0, {0.0, 0.0, 0.0}, 0.85};
  const auto grid = VelocityGrid::build({12, 12, 12}, 5.0, 1.2);
  CollisionModel bgk;
  const auto a = certify_operator_properties(bgk, state, mstar, 100, 20240611, grid);
  CollisionModel hs;
  hs.kind = CollisionKind::HardSphere;
  const auto b = certify_operator_properties(hs, state, mstar, 100, 20240611, grid);
  std::string detail = "BGK sigma " + fmt(a.sigma) + " (" + fmt(a.seconds) + " s), hard-sphere sigma " +
                       fmt(b.sigma) + " (" + fmt(b.seconds) + " s), inverse ratios " +
                       fmt(b.inverse_bound_ratio_m) + "/" + fmt(b.inverse_bound_ratio_mstar) +
                       ", projection-moment C " + fmt(b.projection_moment_C);
  bool ok = std::abs(a.sigma - bgk.nu0) <= 1e-12;
  if (!ok) detail += "; BGK sigma differs from nu0";
  for (const auto* r : {&a, &b})
    if (auto p = certification_problem(*r)) {
      ok = false;
      detail += "; " + to_string(r->kind) + " " + *p;
    }
  return {ok, detail};
}

// ---- self-similar profile ----

Outcome profile() {
  const auto sc = bgk_scenario();
  const auto& p = sc.profile;
  const auto flat = solve_selfsimilar(1.0, 1.0, sc.rc.p_plus, sc.coefficients.lambda_fn());
  double flat_dev = 0.0;
  for (double v : flat.theta_hat) flat_dev = std::max(flat_dev, std::abs(v - 1.0));
  std::vector<double> x;
  const auto th = testutil::relax_step(p, 24.0, 0.02, 4.0, x);
  double oracle = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    oracle = std::max(oracle, std::abs(th[i] - p.value(x[i] / 2.0)));
  const auto tail = p.tail_fit();
  const bool ok = p.residual_norm <= 1e-8 && flat_dev == 0.0 && oracle <= 1e-4 && tail.ok &&
                  tail.c > 0.0;
  return {ok, "residual " + fmt(p.residual_norm) + " (<= 1e-8), constant case deviation " +
                  fmt(flat_dev) + " (== 0), relaxation oracle " + fmt(oracle) +
                  " (<= 1e-4), tail c " + fmt(tail.c) + " (> 0)"};
}

// ---- residual scalings ----

Outcome residual_scalings() {
  const auto sc = bgk_scenario();
  std::vector<double> x(12001);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = -3.0 + 6.0 * static_cast<double>(i) / 12000.0;
  double r1_spread = 0.0, r2_spread = 0.0, r2_ref = 0.0;
  for (double eps : {0.04, 0.01}) {
    double r1_ref = 0.0;
    for (double t : {0.0, 1.0, 3.0}) {
      auto w = build_wave(sc.profile, eps, t, x);
      wave_residuals(w, sc.profile, sc.coefficients.mu_fn(), sc.coefficients.lambda_fn());
      const double r1 = testutil::max_abs(w.R1) * (1.0 + t);
      const double r2 = testutil::max_abs(w.R2) * std::pow(1.0 + t, 1.5) / std::pow(eps, 1.5);
      if (t == 0.0) r1_ref = r1;
      if (r2_ref == 0.0) r2_ref = r2;
      r1_spread = std::max(r1_spread, std::abs(r1 / r1_ref - 1.0));
      r2_spread = std::max(r2_spread, std::abs(r2 / r2_ref - 1.0));
    }
  }
  return {r1_spread <= 0.15 && r2_spread <= 0.15,
          "max|R1|(1+t) spread " + fmt(r1_spread) + ", max|R2|(1+t)^1.5/eps^1.5 spread " +
              fmt(r2_spread) + " (<= 0.15)"};
}

// ---- fluid solver ----

FluidField bump_field(std::size_t n, double eps) {
  FluidField s;
  s.dx = 4.0 / static_cast<double>(n);
  s.epsilon = eps;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = -2.0 + (static_cast<double>(i) + 0.5) * s.dx;
    const double g = std::exp(-x * x / 0.08);
    s.x.push_back(x);
    s.v.push_back(1.0 + 0.1 * g);
    s.u1.push_back(0.2 * x * g);
    s.u2.push_back(0.05 * g);
    s.u3.push_back(0.0);
    s.theta.push_back(1.0 - 0.1 * g);
  }
  s.left = s.right = {1.0, 1.0};
  s.mu = [](double t) { return 0.5 * std::sqrt(t); };
  s.lambda = [](double t) { return 0.9 * std::sqrt(t); };
  return s;
}

Outcome fluid_solver() {
  std::vector<std::vector<double>> sol;
  for (std::size_t n : {200u, 400u, 800u}) {
    auto s = bump_field(n, 0.002);
    FluidRunConfig c;
    c.t_final = 0.4;
    c.dt = 0.2 * s.dx;
    sol.push_back(ns_run(s, c).snapshots.back().theta);
  }
  auto diff = [](const std::vector<double>& coarse, const std::vector<double>& fine) {
    double e = 0.0;
    for (std::size_t i = 0; i < coarse.size(); ++i)
      e += std::abs(coarse[i] - 0.5 * (fine[2 * i] + fine[2 * i + 1]));
    return e / static_cast<double>(coarse.size());
  };
  const double order = std::log2(diff(sol[0], sol[1]) / diff(sol[1], sol[2]));

  const auto sc = bgk_scenario();
  std::vector<double> x(800);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = -4.0 + (static_cast<double>(i) + 0.5) * 0.01;
  const auto w = build_wave(sc.profile, 0.01, 0.0, x);
  FluidRunConfig c;
  c.t_final = 1.0;
  c.reference = &sc.profile;
  const auto run = ns_run(
      fluid_from_wave(w, sc.profile, sc.coefficients.mu_fn(), sc.coefficients.lambda_fn()), c);
  const double drift = run.ledger.max_step_drift;
  return {order >= 1.8 && drift <= 1e-10,
          "self-convergence order " + fmt(order) + " (>= 1.8), max ledger drift per step " +
              fmt(drift) + " over " + std::to_string(run.ledger.steps) + " steps (<= 1e-10)"};
}

// ---- kinetic solver structure ----

KineticConfig kinetic_config(double eps, double t_final, const Primitive& mstar) {
  KineticConfig c;
  c.epsilon = eps;
  c.grid = run_grid();
  c.n_cells = 100;
  c.x_half = 3.0;
  c.t_final = t_final;
  c.mstar = mstar;
  return c;
}

Outcome kinetic_structure() {
  const auto sc = bgk_scenario();
  auto c = kinetic_config(0.05, 0.2, sc.mstar);
  const Primitive st{1.3, {0.0, 0.0, 0.0}, 1.1};
  const auto f0 = constant_maxwellian_field(st, c.grid, c.x0(), c.dx(), c.n_cells);
  const auto fixed = kinetic_run(c, f0, {st, st});
  const double fp = testutil::max_abs_diff(fixed.snapshots.back().f.values, f0.values) /
                    testutil::max_abs(f0.values);

  // Two drifting Maxwellians are far from equilibrium in every cell.
  DistributionField two(c.grid, c.x0(), c.dx(), c.n_cells, Frame::Eulerian);
  for (std::size_t i = 0; i < c.n_cells; ++i) {
    const double a = 0.5 + 0.3 * std::exp(-two.x(i) * two.x(i));
    const auto A = maxwellian({a, {0.6, 0, 0}, 0.7}, *c.grid);
    const auto B = maxwellian({1.0 - a, {-0.6, 0, 0}, 0.8}, *c.grid);
    auto s = two.cell(i);
    for (std::size_t k = 0; k < s.size(); ++k) s[k] = A[k] + B[k];
  }
  c.audit = true;
  const double defect = kinetic_run(c, two, sc.boundary).audit.max_relative_defect;

  double peak[2];
  int q = 0;
  for (double eps : {0.1, 0.01}) {
    const auto k = kinetic_config(eps, 0.5, sc.mstar);
    const auto f = init_from_wave(sc.eulerian_wave(0.05, 0.0, k.x_half), k.grid, k.x0(), k.dx(),
                                  k.n_cells);  // same data for both
    peak[q] = 0.0;
    for (const auto& m : kinetic_run(k, f, sc.boundary).micro_trace)
      peak[q] = std::max(peak[q], m.micro_norm);
    ++q;
  }
  return {fp <= 1e-13 && defect <= 1e-12 && peak[1] < peak[0],
          "fixed point deviation " + fmt(fp) + " (<= 1e-13), collision moment defect " +
              fmt(defect) + " (<= 1e-12), peak micro norm eps 0.1 -> " + fmt(peak[0]) +
              ", eps 0.01 -> " + fmt(peak[1]) + " (decreasing)"};
}

// ---- Knudsen sweep and energy ----

struct SweepResult {
  ContactScenario scenario;
  SweepOptions options;
  ConvergenceReport report;
};

std::optional<SweepResult> sweep_result;

Outcome knudsen_sweep() {
  SweepOptions o;
  o.grid = run_grid();
  SweepResult r{bgk_scenario(), o, {}};
  r.report = convergence_sweep(o, r.scenario, [](const SweepMember& m) {
    std::cout << "  sweep member eps " << fmt(m.epsilon) << ": sup error " << fmt(m.sup_over_time)
              << " (" << m.steps << " steps, " << fmt(m.seconds) << " s)" << std::endl;
  });
  sweep_result = r;
  const auto& rep = r.report;
  std::string errs;
  for (const auto& m : rep.members) errs += (errs.empty() ? "" : ", ") + fmt(m.sup_over_time);
  const bool ok = !rep.degenerate && rep.decreasing && rep.fit.slope >= 0.2;
  return {ok, "sup_{|x|>=0.5} errors [" + errs + "], decreasing within 5%: " +
                  (rep.decreasing ? "yes" : "no") +
                  ", strictly: " + (rep.strictly_decreasing ? "yes" : "no") + ", slope " + fmt(rep.fit.slope) + " (>= 0.2)"};
}

Outcome energy() {
  if (!sweep_result) return {false, "sweep did not complete"};
  const auto& r = *sweep_result;
  auto low = bgk_scenario(1.1);
  low.mstar = r.scenario.mstar;
  const auto es = energy_scaling(r.report, r.scenario, low);
  bool growth = true;
  double ratio = 0.0, exponent = -INFINITY;
  for (const auto& m : r.report.members) {
    growth = growth && m.growth.pass && (!m.growth.exponent_fitted || m.growth.exponent <= 0.6);
    ratio = std::max(ratio, m.growth.max_ratio);
    if (m.growth.exponent_fitted) exponent = std::max(exponent, m.growth.exponent);
  }
  return {es.delta_ok && es.eps_ok && growth,
          "E6(0)/delta: " + fmt(es.e0_high / es.delta_high) + " at delta 0.2 vs " +
              fmt(es.e0_low / es.delta_low) + " at delta 0.1, ratio " + fmt(es.delta_ratio) +
              " (<= 2); E6(0) eps " + fmt(es.eps_a) + " vs " + fmt(es.eps_b) + " spread " +
              fmt(es.eps_spread) + " (<= 0.2); growth max ratio " + fmt(ratio) +
              " (<= 5), max fitted exponent " + fmt(exponent) + " (<= 0.6)"};
}

}  // namespace

int main() {
  criterion("projection-algebra", projection_algebra);
  criterion("collision-conservation", collision_conservation);
  criterion("operator-certification", certification);
  criterion("self-similar-profile", profile);
  criterion("residual-scalings", residual_scalings);
  criterion("fluid-solver", fluid_solver);
  criterion("kinetic-structure", kinetic_structure);
  criterion("knudsen-sweep", knudsen_sweep);
  criterion("energy-diagnostics", energy);
  std::cout << (failures ? "acceptance: " + std::to_string(failures) + " criterion(s) failed"
                         : std::string("acceptance: all criteria passed"))
            << std::endl;
  return failures ? 1 : 0;
}
