#include "kinlim/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kinlim/error.hpp"
#include "kinlim/micromacro.hpp"
#include "kinlim/numerics.hpp"

namespace kinlim {

namespace {

// y derivative of a cell-major (n_cells x n_vel) array.
std::vector<double> dy_cells(std::span<const double> y, std::span<const double> a,
                             std::size_t nv) {
  const std::size_t n = y.size();
  std::vector<double> out(a.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const auto s = num::derivative_stencil(y, i);
    const double* r0 = a.data() + s.first * nv;
    double* o = out.data() + i * nv;
    for (std::size_t k = 0; k < nv; ++k)
      o[k] = s.c[0] * r0[k] + s.c[1] * r0[nv + k] + s.c[2] * r0[2 * nv + k];
  }
  return out;
}

// int int a^2 / M* dxi dy.
double weighted_square(std::span<const double> y, std::span<const double> a,
                       std::span<const double> mstar, const VelocityGrid& grid) {
  const std::size_t nv = grid.size(), n = y.size();
  const auto w = grid.weights();
  std::vector<double> per(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* r = a.data() + i * nv;
    double s = 0.0;
    for (std::size_t k = 0; k < nv; ++k) s += w[k] * r[k] * r[k] / mstar[k];
    per[i] = s;
  }
  return num::trapezoid(y, per);
}

double square_integral(std::span<const double> y, std::span<const double> a) {
  std::vector<double> sq(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) sq[i] = a[i] * a[i];
  return num::trapezoid(y, sq);
}

// Material tau derivative sqrt(eps) (a_j - a_k)/(t_j - t_k) + u1 rho d_y a_k.
std::vector<double> tau_derivative(std::span<const double> y, std::span<const double> a_k,
                                   std::span<const double> a_j, double dt, double epsilon,
                                   std::span<const double> u1, std::span<const double> v,
                                   std::size_t nv) {
  auto out = dy_cells(y, a_k, nv);
  const double s = std::sqrt(epsilon) / dt;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double c = u1[i] / v[i];
    for (std::size_t k = 0; k < nv; ++k) {
      const std::size_t q = i * nv + k;
      out[q] = s * (a_j[q] - a_k[q]) + c * out[q];
    }
  }
  return out;
}

std::vector<double> mstar_slice(const Primitive& mstar, const VelocityGrid& grid) {
  std::vector<double> m(grid.size());
  maxwellian_into(mstar, grid, m);
  return m;
}

}  // namespace

double initial_left_label(const DistributionField& f0) {
  const double left = f0.x0 - 0.5 * f0.dx;
  double mass = 0.0;
  for (std::size_t i = 0; i < f0.n_cells; ++i) {
    const double a = std::max(f0.x(i) - 0.5 * f0.dx, left), b = std::min(f0.x(i) + 0.5 * f0.dx, 0.0);
    if (b > a) mass += moments(f0.cell(i), *f0.grid).rho * (b - a);
  }
  return -mass;
}

LagrangianMoments kinetic_to_lagrangian(const KineticSnapshot& s, double initial_left) {
  const std::size_t n = s.state.size();
  require(n == s.f.n_cells && n > 0, "diagnostics.snapshot: moment fields missing");
  LagrangianMoments m;
  m.t = s.t;
  m.x.resize(n);
  m.v.resize(n);
  m.u1.resize(n);
  m.u2.resize(n);
  m.u3.resize(n);
  m.theta.resize(n);
  double face = initial_left - s.left_mass_inflow;
  for (std::size_t i = 0; i < n; ++i) {
    const Primitive& p = s.state[i];
    if (!(p.rho > 0.0)) {
      std::ostringstream os;
      os << "diagnostics.snapshot: nonpositive density in cell " << i << " at t = " << s.t;
      throw NumericalError(os.str());
    }
    const double dm = p.rho * s.f.dx;
    m.x[i] = face + 0.5 * dm;
    face += dm;
    m.v[i] = 1.0 / p.rho;
    m.u1[i] = p.u[0];
    m.u2[i] = p.u[1];
    m.u3[i] = p.u[2];
    m.theta[i] = p.theta;
  }
  return m;
}

PerturbationFields scaled_perturbation(const LagrangianMoments& m, const ContactWaveField& wave) {
  const std::size_t n = m.x.size();
  require(wave.x.size() == n && m.v.size() == n && m.u1.size() == n && m.theta.size() == n,
          "diagnostics.grid: moment fields and wave differ in length");
  for (std::size_t i = 0; i < n; ++i)
    require(std::abs(wave.x[i] - m.x[i]) <= 1e-12 * std::max(1.0, std::abs(m.x[i])),
            "diagnostics.grid: moment fields and wave are on different Lagrangian grids");
  require(wave.epsilon > 0.0, "diagnostics.epsilon: must be positive");
  const double s = std::sqrt(wave.epsilon);
  PerturbationFields p;
  p.epsilon = wave.epsilon;
  p.tau = wave.t / s;
  p.y.resize(n);
  p.phi.resize(n);
  p.zeta.resize(n);
  p.omega.resize(n);
  for (auto& a : p.psi) a.resize(n);
  const bool transverse = m.u2.size() == n && m.u3.size() == n;
  for (std::size_t i = 0; i < n; ++i) {
    const double u2 = transverse ? m.u2[i] : 0.0, u3 = transverse ? m.u3[i] : 0.0;
    p.y[i] = m.x[i] / s;
    p.phi[i] = (m.v[i] - wave.vbar[i]) / s;
    p.psi[0][i] = (m.u1[i] - wave.u1bar[i]) / s;
    p.psi[1][i] = u2 / s;
    p.psi[2][i] = u3 / s;
    p.zeta[i] = (m.theta[i] - wave.thetabar[i]) / s;
    const double e = m.theta[i] + 0.5 * (m.u1[i] * m.u1[i] + u2 * u2 + u3 * u3);
    const double ebar = wave.thetabar[i] + 0.5 * wave.u1bar[i] * wave.u1bar[i];
    p.omega[i] = (e - ebar) / s;
  }
  return p;
}

void antiderivatives(PerturbationFields& p, const ContactWaveField& wave) {
  const std::size_t n = p.size();
  require(n >= 2 && wave.u1bar.size() == n && wave.u1bar_x.size() == n,
          "diagnostics.grid: wave and perturbation differ in length");
  p.left_tail = std::max({std::abs(p.phi[0]), std::abs(p.psi[0][0]), std::abs(p.psi[1][0]),
                          std::abs(p.psi[2][0]), std::abs(p.omega[0])});
  p.antiderivatives_valid = p.left_tail < kLeftTailTolerance;
  p.Phi = num::cumulative_trapezoid(p.y, p.phi);
  for (int a = 0; a < 3; ++a) p.Psi[a] = num::cumulative_trapezoid(p.y, p.psi[a]);
  p.Wbar = num::cumulative_trapezoid(p.y, p.omega);
  p.W.resize(n);
  p.Y.resize(n);
  const double s = std::sqrt(p.epsilon);
  for (std::size_t i = 0; i < n; ++i) {
    p.W[i] = p.Wbar[i] - wave.u1bar[i] * p.Psi[0][i];
    const double psi2 = p.psi[0][i] * p.psi[0][i] + p.psi[1][i] * p.psi[1][i] +
                        p.psi[2][i] * p.psi[2][i];
    p.Y[i] = 0.5 * s * psi2 - s * wave.u1bar_x[i] * p.Psi[0][i];
  }
}

MicroFields micro_decomposition_G(const DistributionField& f, std::span<const double> thetabar_y,
                                  std::span<const double> u1bar_y, double epsilon,
                                  const CollisionModel& model, InversePath path) {
  require(epsilon > 0.0, "diagnostics.epsilon: must be positive");
  require(thetabar_y.size() == f.n_cells && u1bar_y.size() == f.n_cells,
          "diagnostics.grid: wave derivatives and field differ in length");
  model.validate();
  const auto& grid = *f.grid;
  const std::size_t nv = grid.size(), n = f.n_cells;
  const bool closed = path == InversePath::ClosedForm ||
                      (path == InversePath::Auto && model.kind == CollisionKind::BGK);
  require(!closed || model.kind == CollisionKind::BGK,
          "diagnostics.inverse: the closed-form inverse exists only for BGK");
  MicroFields out;
  out.n_cells = n;
  out.n_vel = nv;
  out.G.resize(n * nv);
  out.G0.resize(n * nv);
  out.G1.resize(n * nv);
  out.maxwellian.resize(n * nv);
  const double rs = 1.0 / std::sqrt(epsilon);
  const auto x1 = grid.xi1(), x2 = grid.xi2(), x3 = grid.xi3();
  std::string failure;
#pragma omp parallel
  {
    std::vector<double> h(nv), r(nv);
#pragma omp for schedule(dynamic)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n); ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      const auto c = f.cell(i);
      std::span<double> M(out.maxwellian.data() + i * nv, nv);
      std::span<double> G(out.G.data() + i * nv, nv), G0(out.G0.data() + i * nv, nv),
          G1(out.G1.data() + i * nv, nv);
      try {
        const auto mm = match_maxwellian(moments(c, grid), grid, M);
        const Primitive& st = mm.physical;
        for (std::size_t k = 0; k < nv; ++k) G[k] = (c[k] - M[k]) * rs;
        const double a = 1.0 / (2.0 * st.theta);
        for (std::size_t k = 0; k < nv; ++k) {
          const double d1 = x1[k] - st.u[0], d2 = x2[k] - st.u[1], d3 = x3[k] - st.u[2];
          const double e2 = d1 * d1 + d2 * d2 + d3 * d3;
          h[k] = x1[k] * (e2 * a * thetabar_y[i] + x1[k] * u1bar_y[i]) * M[k];
        }
        const double pre = 3.0 / (2.0 * st.theta / st.rho);
        if (closed) {
          const auto basis = build_basis_from_weight(mm.params, st, {M.begin(), M.end()}, grid);
          apply_p1(h, basis, r);
          for (std::size_t k = 0; k < nv; ++k) G0[k] = -pre * r[k] / model.nu0;
        } else {
          const auto op = build_linearized(st, f.grid, model, true);
          apply_p1(h, op.basis(), r);
          const auto sol = op.solve(r);
          for (std::size_t k = 0; k < nv; ++k) G0[k] = pre * sol[k];
        }
        for (std::size_t k = 0; k < nv; ++k) G1[k] = G[k] - G0[k];
      } catch (const std::exception& e) {
#pragma omp critical(kinlim_micro_failure)
        if (failure.empty()) failure = "cell " + std::to_string(i) + ": " + e.what();
      }
    }
  }
  if (!failure.empty())
    throw NumericalError("diagnostics.inverse: linearized solve failed in " + failure);
  return out;
}

EnergyComponents energy_components(const PerturbationFields& p, const MicroFields& g,
                                   const DerivativeFields& d, std::span<const double> mstar,
                                   const VelocityGrid& grid) {
  const std::size_t n = p.size(), nv = grid.size();
  require(n >= 3, "diagnostics.energy: at least 3 cells required");
  require(p.Phi.size() == n && p.W.size() == n,
          "diagnostics.energy: antiderivatives missing (call antiderivatives first)");
  require(g.n_cells == n && g.n_vel == nv && g.G1.size() == n * nv,
          "diagnostics.energy: microscopic fields missing or on another grid");
  require(mstar.size() == nv, "diagnostics.energy: M* size mismatch");
  EnergyComponents c;
  const double eps = p.epsilon;
  auto& t = c.term;
  t[0] = square_integral(p.y, p.Phi) + square_integral(p.y, p.W);
  t[1] = square_integral(p.y, p.phi) + square_integral(p.y, p.zeta);
  for (int a = 0; a < 3; ++a) {
    t[0] += square_integral(p.y, p.Psi[a]);
    t[1] += square_integral(p.y, p.psi[a]);
  }
  t[2] = square_integral(p.y, num::derivative(p.y, p.phi)) +
         square_integral(p.y, num::derivative(p.y, p.zeta));
  for (int a = 0; a < 3; ++a) t[2] += square_integral(p.y, num::derivative(p.y, p.psi[a]));
  t[2] *= eps;
  t[3] = weighted_square(p.y, g.G1, mstar, grid);
  auto term = [&](const std::vector<double>& a) {
    if (a.empty()) return 0.0;
    require(a.size() == n * nv, "diagnostics.energy: derivative field on another grid");
    return weighted_square(p.y, a, mstar, grid);
  };
  t[4] = eps * (term(d.G_y) + term(d.G_tau));
  t[5] = eps * (term(d.f_yy) + term(d.f_ytau) + term(d.f_tautau));
  return c;
}

double energy_E6(const EnergyComponents& c, const E6Weights& w) {
  double s = 0.0;
  for (int q = 0; q < 6; ++q) {
    require(w.w[q] >= 0.0, "diagnostics.weights: must be nonnegative");
    s += w.w[q] * c.term[q];
  }
  return s;
}

nlohmann::json EnergyReport::to_json() const {
  nlohmann::json j;
  j["epsilon"] = epsilon;
  j["delta"] = delta;
  j["weights"] = weights.w;
  j["terms"] = kEnergyTermNames;
  auto& rs = j["rows"] = nlohmann::json::array();
  for (const auto& r : rows)
    rs.push_back({{"t", r.t},
                  {"tau", r.tau},
                  {"E6", r.E6},
                  {"components", r.components.term},
                  {"growth_ratio", r.growth_ratio},
                  {"antiderivatives_valid", r.antiderivatives_valid}});
  return j;
}

io::CsvTable EnergyReport::to_csv() const {
  io::CsvTable t;
  t.header = {"tau", "t", "E6"};
  for (const char* name : kEnergyTermNames) t.header.push_back(name);
  t.header.push_back("growth_ratio");
  for (const auto& r : rows) {
    std::vector<double> row{r.tau, r.t, r.E6};
    for (double v : r.components.term) row.push_back(v);
    row.push_back(r.growth_ratio);
    t.add(std::move(row));
  }
  return t;
}

EnergyReport energy_trace(const KineticTrajectory& run, const KineticConfig& config,
                          const ContactScenario& scenario, const E6Weights& weights) {
  const std::size_t K = run.snapshots.size();
  require(K >= 1, "diagnostics.energy: trajectory has no snapshots");
  require(run.snapshots.front().t == 0.0,
          "diagnostics.energy: the first snapshot must be the initial data (t = 0)");
  const auto& grid = *config.grid;
  const std::size_t nv = grid.size();
  const double eps = config.epsilon, s = std::sqrt(eps);
  const auto mstar = mstar_slice(scenario.mstar, grid);
  const double left0 = initial_left_label(run.snapshots.front().f);

  EnergyReport rep;
  rep.epsilon = eps;
  rep.delta = scenario.rc.delta();
  rep.weights = weights;

  struct Stage {
    PerturbationFields p;
    std::vector<double> u1, v, G, f_tau;
  };
  std::vector<Stage> st(K);
  for (std::size_t k = 0; k < K; ++k) {
    const auto& snap = run.snapshots[k];
    const auto m = kinetic_to_lagrangian(snap, left0);
    const auto wave = build_wave(scenario.profile, eps, snap.t, m.x);
    auto p = scaled_perturbation(m, wave);
    antiderivatives(p, wave);
    std::vector<double> th_y(m.x.size()), u_y(m.x.size());
    for (std::size_t i = 0; i < m.x.size(); ++i) {
      th_y[i] = s * wave.thetabar_x[i];
      u_y[i] = s * wave.u1bar_x[i];
    }
    auto g = micro_decomposition_G(snap.f, th_y, u_y, eps, config.model);
    EnergyRow row;
    row.t = snap.t;
    row.tau = p.tau;
    row.antiderivatives_valid = p.antiderivatives_valid;
    row.components = energy_components(p, g, {}, mstar, grid);
    rep.rows.push_back(row);
    st[k].p = std::move(p);
    st[k].u1 = m.u1;
    st[k].v = m.v;
    st[k].G = std::move(g.G);
  }

  auto neighbour = [&](std::size_t k) { return k + 1 < K ? k + 1 : k - 1; };
  auto tau_of = [&](std::size_t k, std::span<const double> a_k, std::span<const double> a_j) {
    const std::size_t j = neighbour(k);
    return tau_derivative(st[k].p.y, a_k, a_j, run.snapshots[j].t - run.snapshots[k].t, eps,
                          st[k].u1, st[k].v, nv);
  };
  if (K >= 2)
    for (std::size_t k = 0; k < K; ++k)
      st[k].f_tau = tau_of(k, run.snapshots[k].f.values, run.snapshots[neighbour(k)].f.values);

  for (std::size_t k = 0; k < K; ++k) {
    const auto& y = st[k].p.y;
    double first = weighted_square(y, dy_cells(y, st[k].G, nv), mstar, grid);
    double second =
        weighted_square(y, dy_cells(y, dy_cells(y, run.snapshots[k].f.values, nv), nv), mstar,
                        grid);
    if (K >= 2) {
      first += weighted_square(y, tau_of(k, st[k].G, st[neighbour(k)].G), mstar, grid);
      second += weighted_square(y, dy_cells(y, st[k].f_tau, nv), mstar, grid);
      second += weighted_square(y, tau_of(k, st[k].f_tau, st[neighbour(k)].f_tau), mstar, grid);
    }
    auto& row = rep.rows[k];
    row.components.term[4] = eps * first;
    row.components.term[5] = eps * second;
    row.E6 = energy_E6(row.components, weights);
    row.growth_ratio = row.E6 / std::sqrt(1.0 + s * row.tau);
  }
  return rep;
}

nlohmann::json GrowthCheck::to_json() const {
  return {{"pass", pass},
          {"slack", slack},
          {"max_ratio", max_ratio},
          {"exponent", exponent},
          {"exponent_fitted", exponent_fitted}};
}

GrowthCheck growth_check(const EnergyReport& report, double slack, double floor) {
  require(!report.rows.empty(), "diagnostics.growth: empty energy trace");
  require(slack > 0.0, "diagnostics.growth: slack must be positive");
  GrowthCheck g;
  g.slack = slack;
  const double s = std::sqrt(report.epsilon);
  auto clip = [&](double e) { return e > floor ? e : 0.0; };
  const double base = clip(report.rows.front().E6) + report.delta;
  std::vector<double> lx, ly;
  for (const auto& r : report.rows) {
    const double e = clip(r.E6);
    const double grow = std::sqrt(1.0 + s * r.tau);
    const double ratio = base > 0.0 ? e / (base * grow) : (e > 0.0 ? INFINITY : 0.0);
    g.max_ratio = std::max(g.max_ratio, ratio);
    if (e > 0.0) {
      lx.push_back(std::log1p(s * r.tau));
      ly.push_back(std::log(r.E6));
    }
  }
  g.pass = g.max_ratio <= slack;
  if (lx.size() >= 2 && *std::max_element(lx.begin(), lx.end()) >
                            *std::min_element(lx.begin(), lx.end())) {
    g.exponent = num::fit_line(lx, ly).slope;
    g.exponent_fitted = true;
  }
  return g;
}

DistributionField inviscid_reference(const ContactScenario& scenario, GridPtr grid, double x0,
                                     double dx, std::size_t n_cells) {
  DistributionField f(grid, x0, dx, n_cells, Frame::Eulerian);
  std::vector<double> Ml(grid->size()), Mr(grid->size());
  match_maxwellian(conserved_from_primitive(scenario.boundary.left), *grid, Ml);
  match_maxwellian(conserved_from_primitive(scenario.boundary.right), *grid, Mr);
  for (std::size_t i = 0; i < n_cells; ++i) {
    const auto& M = f.x(i) < 0.0 ? Ml : Mr;
    std::copy(M.begin(), M.end(), f.cell(i).begin());
  }
  return f;
}

std::vector<double> pointwise_error_profile(const DistributionField& f,
                                            const DistributionField& reference,
                                            const Primitive& mstar) {
  require(f.grid && reference.grid == f.grid && reference.n_cells == f.n_cells &&
              std::abs(reference.x0 - f.x0) <= 1e-12 * std::max(1.0, std::abs(f.x0)) &&
              std::abs(reference.dx - f.dx) <= 1e-12 * f.dx,
          "diagnostics.grid: solution and reference are on different grids");
  const auto& grid = *f.grid;
  double lo = INFINITY, hi = 0.0;
  for (std::size_t i = 0; i < reference.n_cells; ++i) {
    const double th = primitive_from_conserved(moments(reference.cell(i), grid)).theta;
    lo = std::min(lo, th);
    hi = std::max(hi, th);
  }
  check_mstar_window(mstar.theta, lo, hi, "diagnostics.mstar");
  const auto ms = mstar_slice(mstar, grid);
  std::vector<double> e(f.n_cells);
  for (std::size_t i = 0; i < f.n_cells; ++i)
    e[i] = weighted_l2_error(f.cell(i), reference.cell(i), ms, grid);
  return e;
}

double sup_error_away(std::span<const double> x, std::span<const double> e, double h) {
  require(x.size() == e.size(), "diagnostics.grid: profile and abscissae differ in length");
  require(h > 0.0, "diagnostics.h: must be positive");
  double best = -1.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (std::abs(x[i]) >= h) {
      require(e[i] >= 0.0, "diagnostics.profile: pointwise error must be nonnegative");
      best = std::max(best, std::sqrt(e[i]));
    }
  require(best >= 0.0, "diagnostics.h: no cell with |x| >= h inside the domain");
  return best;
}

TailFit fit_error_tail(std::span<const double> x, std::span<const double> e, double epsilon,
                       double t, double lo, double hi) {
  require(x.size() == e.size(), "diagnostics.grid: profile and abscissae differ in length");
  require(epsilon > 0.0 && t >= 0.0 && hi > lo && lo >= 0.0, "diagnostics.tail: bad window");
  const double scale = std::sqrt(epsilon * (1.0 + t));
  std::vector<double> xs[2], ys[2], all_x, all_y;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double eta = std::abs(x[i]) / scale;
    if (eta < lo || eta > hi || !(e[i] > 0.0)) continue;
    const int side = x[i] < 0.0 ? 0 : 1;
    xs[side].push_back(eta * eta);
    ys[side].push_back(std::log(e[i]));
    all_x.push_back(eta * eta);
    all_y.push_back(std::log(e[i]));
  }
  TailFit r;
  if (xs[0].size() < 3 || xs[1].size() < 3) return r;
  r.c_left = -num::fit_line(xs[0], ys[0]).slope;
  r.c_right = -num::fit_line(xs[1], ys[1]).slope;
  const auto both = num::fit_line(all_x, all_y);
  r.c = -both.slope;
  r.residual = both.residual;
  r.ok = r.c > 0.0 && r.c_left > 0.0 && r.c_right > 0.0;
  return r;
}

std::vector<double> SweepOptions::snapshot_times(double epsilon) const {
  std::vector<double> t{0.0, std::min(h * h / epsilon, t_final), t_final};
  for (double s : times)
    if (s <= t_final) t.push_back(s);
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

void SweepOptions::validate() const {
  require(epsilons.size() >= 3, "sweep.epsilons: at least three values required");
  for (std::size_t k = 0; k < epsilons.size(); ++k) {
    require(epsilons[k] > 0.0, "sweep.epsilons: values must be positive");
    if (k)
      require(epsilons[k] < epsilons[k - 1], "sweep.epsilons: must be strictly decreasing");
  }
  require(static_cast<bool>(grid), "sweep.grid: velocity grid missing");
  require(h > 0.0 && h < x_half, "sweep.h: must lie in (0, x_half)");
  require(t_final > 0.0, "sweep.t_final: must be positive");
  for (double t : times) require(t > 0.0, "sweep.times: must be positive");
  require(noise >= 0.0, "sweep.noise: must be nonnegative");
  model.validate();
}

nlohmann::json SweepOptions::to_json() const {
  nlohmann::json j{{"epsilons", epsilons},
                   {"h", h},
                   {"t_final", t_final},
                   {"times", times},
                   {"n_cells", n_cells},
                   {"x_half", x_half},
                   {"model", model.to_json()},
                   {"limiter", limiter == kernels::Limiter::Minmod ? "minmod" : "upwind"},
                   {"noise", noise},
                   {"energy", energy}};
  if (grid) j["velocity_grid"] = grid->metadata();
  if (!certification.is_null()) j["certification"] = certification;
  return j;
}

num::LinearFit fit_rate(std::span<const double> epsilons, std::span<const double> errors,
                        bool* degenerate, double floor) {
  require(epsilons.size() == errors.size() && epsilons.size() >= 2,
          "diagnostics.rate: need matching lists of at least two values");
  bool deg = false;
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < errors.size(); ++k) {
    if (!(errors[k] > floor)) {
      deg = true;
      continue;
    }
    lx.push_back(std::log(epsilons[k]));
    ly.push_back(std::log(errors[k]));
  }
  if (degenerate) *degenerate = deg;
  if (deg || lx.size() < 2) return {};
  return num::fit_line(lx, ly);
}

nlohmann::json ConvergenceReport::to_json() const {
  nlohmann::json j;
  j["h"] = h;
  j["noise"] = noise;
  auto fit_json = [](const num::LinearFit& f) {
    return nlohmann::json{
        {"slope", f.slope}, {"intercept", f.intercept}, {"residual", f.residual}, {"n", f.n}};
  };
  j["fit"] = fit_json(fit);
  j["fit_whole_line"] = fit_json(fit_whole_line);
  j["degenerate"] = degenerate;
  j["decreasing"] = decreasing;
  j["strictly_decreasing"] = strictly_decreasing;
  j["options"] = options.to_json();
  j["certification"] = options.certification;
  auto& ms = j["members"] = nlohmann::json::array();
  std::vector<double> eps;
  for (const auto& m : members) {
    eps.push_back(m.epsilon);
    nlohmann::json mj{{"epsilon", m.epsilon},
                      {"t", m.t},
                      {"sup_error", m.sup_error},
                      {"max_error", m.max_error},
                      {"sup_error_viscous", m.sup_error_viscous},
                      {"sup_over_time", m.sup_over_time},
                      {"max_over_time", m.max_over_time},
                      {"viscous_over_time", m.viscous_over_time},
                      {"steps", m.steps},
                      {"seconds", m.seconds},
                      {"max_mass_drift", m.max_mass_drift},
                      {"max_negative_entries", m.max_negative}};
    if (m.has_energy) {
      mj["energy"] = m.energy.to_json();
      mj["growth"] = m.growth.to_json();
    }
    ms.push_back(std::move(mj));
  }
  j["epsilons"] = eps;
  return j;
}

io::CsvTable ConvergenceReport::to_csv() const {
  io::CsvTable t;
  t.header = {"epsilon", "sup_error", "max_error", "sup_error_viscous", "slope", "intercept",
              "residual"};
  for (const auto& m : members)
    t.add({m.epsilon, m.sup_over_time, m.max_over_time, m.viscous_over_time, fit.slope,
           fit.intercept, fit.residual});
  return t;
}

io::CsvTable ConvergenceReport::detail_csv() const {
  io::CsvTable t;
  t.header = {"epsilon", "t", "sup_error", "max_error", "sup_error_viscous"};
  for (const auto& m : members)
    for (std::size_t k = 0; k < m.t.size(); ++k)
      t.add({m.epsilon, m.t[k], m.sup_error[k], m.max_error[k], m.sup_error_viscous[k]});
  return t;
}

ConvergenceReport convergence_sweep(const SweepOptions& options, const ContactScenario& scenario,
                                    const SweepProgress& progress) {
  options.validate();
  const auto& grid = options.grid;
  ConvergenceReport rep;
  rep.h = options.h;
  rep.noise = options.noise;
  rep.options = options;

  KineticConfig base;
  base.grid = grid;
  base.n_cells = options.n_cells;
  base.x_half = options.x_half;
  base.model = options.model;
  base.t_final = options.t_final;
  base.limiter = options.limiter;
  base.mstar = scenario.mstar;
  base.trace_every = 50;
  const auto inviscid = inviscid_reference(scenario, grid, base.x0(), base.dx(), base.n_cells);

  for (double eps : options.epsilons) {
    KineticConfig c = base;
    c.epsilon = eps;
    c.snapshots = options.snapshot_times(eps);
    const auto f0 = init_from_wave(scenario.eulerian_wave(eps, 0.0, c.x_half), grid, c.x0(),
                                   c.dx(), c.n_cells);
    const auto run = kinetic_run(c, f0, scenario.boundary);
    SweepMember m;
    m.epsilon = eps;
    m.steps = run.steps;
    m.seconds = run.seconds;
    m.max_negative = run.max_negative;
    for (const auto& e : run.ledger)
      m.max_mass_drift = std::max(m.max_mass_drift, std::abs(e.drift[0]));
    std::vector<double> xs(c.n_cells);
    for (std::size_t i = 0; i < c.n_cells; ++i) xs[i] = f0.x(i);
    for (const auto& s : run.snapshots) {
      const auto e = pointwise_error_profile(s.f, inviscid, scenario.mstar);
      const auto viscous = init_from_wave(scenario.eulerian_wave(eps, s.t, c.x_half), grid,
                                          c.x0(), c.dx(), c.n_cells);
      const auto ev = pointwise_error_profile(s.f, viscous, scenario.mstar);
      m.t.push_back(s.t);
      m.sup_error.push_back(sup_error_away(xs, e, options.h));
      m.max_error.push_back(std::sqrt(*std::max_element(e.begin(), e.end())));
      m.sup_error_viscous.push_back(sup_error_away(xs, ev, options.h));
      if (s.t > 0.0) {
        m.sup_over_time = std::max(m.sup_over_time, m.sup_error.back());
        m.max_over_time = std::max(m.max_over_time, m.max_error.back());
        m.viscous_over_time = std::max(m.viscous_over_time, m.sup_error_viscous.back());
      }
    }
    if (options.energy) {
      m.energy = energy_trace(run, c, scenario);
      m.growth = growth_check(m.energy);
      m.has_energy = true;
    }
    if (progress) progress(m);
    rep.members.push_back(std::move(m));
  }

  std::vector<double> eps, sup, whole;
  for (const auto& m : rep.members) {
    eps.push_back(m.epsilon);
    sup.push_back(m.sup_over_time);
    whole.push_back(m.max_over_time);
  }
  bool deg_sup = false, deg_whole = false;
  rep.fit = fit_rate(eps, sup, &deg_sup);
  rep.fit_whole_line = fit_rate(eps, whole, &deg_whole);
  rep.degenerate = deg_sup;
  rep.decreasing = !rep.degenerate;
  rep.strictly_decreasing = !rep.degenerate;
  for (std::size_t k = 1; k < sup.size(); ++k) {
    if (!(sup[k] < (1.0 + options.noise) * sup[k - 1])) rep.decreasing = false;
    if (!(sup[k] < sup[k - 1])) rep.strictly_decreasing = false;
  }
  return rep;
}

nlohmann::json EnergyScaling::to_json() const {
  return {{"epsilon", epsilon},
          {"delta_high", delta_high},
          {"delta_low", delta_low},
          {"e0_high", e0_high},
          {"e0_low", e0_low},
          {"delta_ratio", delta_ratio},
          {"delta_ok", delta_ok},
          {"eps_a", eps_a},
          {"eps_b", eps_b},
          {"e0_a", e0_a},
          {"e0_b", e0_b},
          {"eps_spread", eps_spread},
          {"eps_ok", eps_ok}};
}

double initial_energy(const SweepOptions& options, const ContactScenario& scenario,
                      double epsilon) {
  options.validate();
  KineticConfig c;
  c.epsilon = epsilon;
  c.grid = options.grid;
  c.n_cells = options.n_cells;
  c.x_half = options.x_half;
  c.model = options.model;
  c.limiter = options.limiter;
  c.mstar = scenario.mstar;
  c.trace_every = 50;
  auto t = options.snapshot_times(epsilon);
  t.resize(std::min<std::size_t>(t.size(), 3));
  c.snapshots = t;
  c.t_final = t.back();
  const auto f0 = init_from_wave(scenario.eulerian_wave(epsilon, 0.0, c.x_half), c.grid, c.x0(),
                                 c.dx(), c.n_cells);
  const auto run = kinetic_run(c, f0, scenario.boundary);
  return energy_trace(run, c, scenario).rows.front().E6;
}

EnergyScaling energy_scaling(const ConvergenceReport& sweep, const ContactScenario& high,
                             const ContactScenario& low, double eps_b) {
  require(!sweep.members.empty() && sweep.members.front().has_energy,
          "diagnostics.energy: the sweep carries no energy traces");
  EnergyScaling r;
  const auto& first = sweep.members.front();
  r.epsilon = first.epsilon;
  r.delta_high = high.rc.delta();
  r.delta_low = low.rc.delta();
  require(r.delta_high > 0.0 && r.delta_low > 0.0 && r.delta_high != r.delta_low,
          "diagnostics.energy: two distinct positive jumps are required");
  r.e0_high = first.energy.rows.front().E6;
  r.e0_low = initial_energy(sweep.options, low, r.epsilon);
  const double a = r.e0_high / r.delta_high, b = r.e0_low / r.delta_low;
  r.delta_ratio = std::max(a, b) / std::min(a, b);
  r.delta_ok = r.delta_ratio <= 2.0;

  const SweepMember* other = nullptr;
  for (const auto& m : sweep.members)
    if (!other || std::abs(m.epsilon - eps_b) < std::abs(other->epsilon - eps_b)) other = &m;
  r.eps_a = first.epsilon;
  r.e0_a = r.e0_high;
  r.eps_b = other->epsilon;
  r.e0_b = other->energy.rows.front().E6;
  r.eps_spread = std::abs(r.e0_a - r.e0_b) / std::min(r.e0_a, r.e0_b);
  r.eps_ok = r.eps_spread <= 0.2;
  return r;
}

}  // namespace kinlim
