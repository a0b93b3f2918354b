#include "kinlim/fluid_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "kinlim/error.hpp"
#include "kinlim/numerics.hpp"

namespace kinlim {

namespace {

constexpr double kGamma = 5.0 / 3.0;

double pressure(double v, double theta) { return kGasConstant * theta / v; }

struct Conserved {
  std::vector<double> v, u1, u2, u3, E;
};

Conserved to_conserved(const FluidField& s) {
  Conserved U{s.v, s.u1, s.u2, s.u3, s.theta};
  for (std::size_t i = 0; i < s.size(); ++i)
    U.E[i] += 0.5 * (s.u1[i] * s.u1[i] + s.u2[i] * s.u2[i] + s.u3[i] * s.u3[i]);
  return U;
}

[[noreturn]] void vacuum(const FluidField& s, std::size_t i, double v, double theta) {
  std::ostringstream os;
  os << "fluid: vacuum at cell " << i << " (x = " << s.x[i] << ", t = " << s.t << "): v = " << v
     << ", theta = " << theta;
  throw NumericalError(os.str());
}

void from_conserved(const Conserved& U, FluidField& s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double th = U.E[i] - 0.5 * (U.u1[i] * U.u1[i] + U.u2[i] * U.u2[i] + U.u3[i] * U.u3[i]);
    if (!(U.v[i] > 0.0) || !(th > 0.0)) vacuum(s, i, U.v[i], th);
    s.v[i] = U.v[i];
    s.u1[i] = U.u1[i];
    s.u2[i] = U.u2[i];
    s.u3[i] = U.u3[i];
    s.theta[i] = th;
  }
}

// Hyperbolic right-hand side with central face fluxes; inflow = F_left - F_right.
void hyperbolic_rhs(const Conserved& U, const FluidField& s, Conserved& dU,
                    std::array<double, 3>& inflow) {
  const std::size_t n = s.size();
  std::vector<double> u(n + 2), p(n + 2);
  u[0] = 0.0;
  p[0] = pressure(s.left.v, s.left.theta);
  u[n + 1] = 0.0;
  p[n + 1] = pressure(s.right.v, s.right.theta);
  for (std::size_t i = 0; i < n; ++i) {
    const double th = U.E[i] - 0.5 * (U.u1[i] * U.u1[i] + U.u2[i] * U.u2[i] + U.u3[i] * U.u3[i]);
    if (!(U.v[i] > 0.0) || !(th > 0.0)) vacuum(s, i, U.v[i], th);
    u[i + 1] = U.u1[i];
    p[i + 1] = pressure(U.v[i], th);
  }
  std::vector<double> Fv(n + 1), Fu(n + 1), Fe(n + 1);
#pragma omp parallel for
  for (std::size_t f = 0; f <= n; ++f) {
    Fv[f] = -0.5 * (u[f] + u[f + 1]);
    Fu[f] = 0.5 * (p[f] + p[f + 1]);
    Fe[f] = 0.5 * (p[f] * u[f] + p[f + 1] * u[f + 1]);
  }
  dU.v.resize(n);
  dU.u1.resize(n);
  dU.E.resize(n);
#pragma omp parallel for
  for (std::size_t i = 0; i < n; ++i) {
    dU.v[i] = -(Fv[i + 1] - Fv[i]) / s.dx;
    dU.u1[i] = -(Fu[i + 1] - Fu[i]) / s.dx;
    dU.E[i] = -(Fe[i + 1] - Fe[i]) / s.dx;
  }
  inflow = {Fv[0] - Fv[n], Fu[0] - Fu[n], Fe[0] - Fe[n]};
}

void hyperbolic_step(FluidField& s, double dt, std::array<double, 3>& inflow) {
  const std::size_t n = s.size();
  const Conserved U0 = to_conserved(s);
  Conserved U = U0, dU;
  std::array<double, 3> fl{};
  inflow = {0, 0, 0};
  // Shu-Osher SSP-RK3; the effective weights of the three stages are 1/6, 1/6, 2/3.
  const double keep[3] = {0.0, 0.75, 1.0 / 3.0};
  const double weight[3] = {1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0};
  for (int stage = 0; stage < 3; ++stage) {
    hyperbolic_rhs(U, s, dU, fl);
    const double a = keep[stage], b = 1.0 - a;
    for (std::size_t i = 0; i < n; ++i) {
      U.v[i] = a * U0.v[i] + b * (U.v[i] + dt * dU.v[i]);
      U.u1[i] = a * U0.u1[i] + b * (U.u1[i] + dt * dU.u1[i]);
      U.E[i] = a * U0.E[i] + b * (U.E[i] + dt * dU.E[i]);
    }
    for (int c = 0; c < 3; ++c) inflow[c] += weight[stage] * dt * fl[c];
  }
  from_conserved(U, s);
}

struct DiffusionResult {
  std::vector<double> u1, u2, u3, theta;
  std::array<double, 3> inflow{};
};

// Crank-Nicolson for the parabolic terms with face coefficients frozen at
// theta_coef. The viscous heating is the difference between the work flux
// divergence and u times the stress divergence, so total energy stays in flux form.
DiffusionResult diffusion_solve(const FluidField& s, const std::vector<double>& theta_coef,
                                double tau) {
  const std::size_t n = s.size();
  const double r = tau / (2.0 * s.dx * s.dx);
  std::vector<double> m(n + 1), k(n + 1);
  for (std::size_t f = 0; f <= n; ++f) {
    const double vl = f == 0 ? s.left.v : s.v[f - 1], vr = f == n ? s.right.v : s.v[f];
    const double tl = f == 0 ? s.left.theta : theta_coef[f - 1];
    const double tr = f == n ? s.right.theta : theta_coef[f];
    const double vf = 0.5 * (vl + vr), tf = 0.5 * (tl + tr);
    m[f] = s.mu(tf) / vf;
    k[f] = s.lambda(tf) / vf;
  }
  DiffusionResult out;
  std::vector<double> a(n), b(n), c(n), coef(n + 1), phi(n, 0.0), work(n + 1, 0.0);
  auto tridiag = [&](const std::vector<double>& cf) {
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = i == 0 ? 0.0 : -r * cf[i];
      c[i] = i + 1 == n ? 0.0 : -r * cf[i + 1];
      b[i] = 1.0 + r * (cf[i] + cf[i + 1]);
    }
  };
  double momentum_in = 0.0;
  auto velocity = [&](const std::vector<double>& u0, double factor, std::vector<double>& u1out,
                      bool is_u1) {
    for (std::size_t f = 0; f <= n; ++f) coef[f] = factor * s.epsilon * m[f];
    tridiag(coef);
    auto at = [&](const std::vector<double>& u, std::ptrdiff_t i) {
      return (i < 0 || i >= static_cast<std::ptrdiff_t>(n)) ? 0.0 : u[static_cast<std::size_t>(i)];
    };
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<std::ptrdiff_t>(i);
      d[i] = u0[i] + r * (coef[i + 1] * (at(u0, ii + 1) - u0[i]) - coef[i] * (u0[i] - at(u0, ii - 1)));
    }
    num::solve_tridiagonal(a, b, c, d);
    u1out = d;
    std::vector<double> ub(n);
    for (std::size_t i = 0; i < n; ++i) ub[i] = 0.5 * (u0[i] + d[i]);
    std::vector<double> sigma(n + 1);
    for (std::size_t f = 0; f <= n; ++f) {
      const auto fi = static_cast<std::ptrdiff_t>(f);
      const double ul = at(ub, fi - 1), ur = at(ub, fi);
      sigma[f] = coef[f] * (ur - ul) / s.dx;
      work[f] += 0.5 * (ul + ur) * sigma[f];
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<std::ptrdiff_t>(i);
      phi[i] += (0.5 * (at(ub, ii + 1) - ub[i]) * sigma[i + 1] +
                 0.5 * (ub[i] - at(ub, ii - 1)) * sigma[i]) / s.dx;
    }
    if (is_u1) momentum_in = tau * (sigma[n] - sigma[0]);
  };
  velocity(s.u1, 4.0 / 3.0, out.u1, true);
  velocity(s.u2, 1.0, out.u2, false);
  velocity(s.u3, 1.0, out.u3, false);

  for (std::size_t f = 0; f <= n; ++f) coef[f] = s.epsilon * k[f];
  tridiag(coef);
  std::vector<double> d(n);
  auto th_at = [&](const std::vector<double>& t, std::ptrdiff_t i) {
    if (i < 0) return s.left.theta;
    if (i >= static_cast<std::ptrdiff_t>(n)) return s.right.theta;
    return t[static_cast<std::size_t>(i)];
  };
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<std::ptrdiff_t>(i);
    d[i] = s.theta[i] +
           r * (coef[i + 1] * (th_at(s.theta, ii + 1) - s.theta[i]) -
                coef[i] * (s.theta[i] - th_at(s.theta, ii - 1))) +
           tau * phi[i];
  }
  d[0] += r * coef[0] * s.left.theta;
  d[n - 1] += r * coef[n] * s.right.theta;
  num::solve_tridiagonal(a, b, c, d);
  out.theta = d;
  std::vector<double> tb(n);
  for (std::size_t i = 0; i < n; ++i) tb[i] = 0.5 * (s.theta[i] + d[i]);
  const double q0 = coef[0] * (th_at(tb, 0) - s.left.theta) / s.dx;
  const double qn = coef[n] * (s.right.theta - th_at(tb, static_cast<std::ptrdiff_t>(n) - 1)) / s.dx;
  out.inflow = {0.0, momentum_in, tau * (qn - q0 + work[n] - work[0])};
  return out;
}

void diffusion_step(FluidField& s, double tau, std::array<double, 3>& inflow) {
  const auto pred = diffusion_solve(s, s.theta, tau);
  std::vector<double> mid(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) mid[i] = 0.5 * (s.theta[i] + pred.theta[i]);
  auto fin = diffusion_solve(s, mid, tau);
  for (std::size_t i = 0; i < s.size(); ++i)
    if (!(fin.theta[i] > 0.0)) vacuum(s, i, s.v[i], fin.theta[i]);
  s.u1 = std::move(fin.u1);
  s.u2 = std::move(fin.u2);
  s.u3 = std::move(fin.u3);
  s.theta = std::move(fin.theta);
  inflow = fin.inflow;
}

bool uniform_grid(const std::vector<double>& x, double& dx) {
  if (x.size() < 2) return false;
  dx = (x.back() - x.front()) / static_cast<double>(x.size() - 1);
  for (std::size_t i = 1; i < x.size(); ++i)
    if (std::abs(x[i] - x[i - 1] - dx) > 1e-9 * dx) return false;
  return dx > 0.0;
}

}  // namespace

void FluidField::validate() const {
  const std::size_t n = x.size();
  require(n >= 3, "fluid.x: at least 3 cells required");
  require(v.size() == n && u1.size() == n && u2.size() == n && u3.size() == n && theta.size() == n,
          "fluid.state: array sizes differ from the grid");
  double h = 0.0;
  require(uniform_grid(x, h) && std::abs(h - dx) <= 1e-9 * h, "fluid.x: grid must be uniform");
  require(epsilon > 0.0, "fluid.epsilon: must be positive");
  require(left.v > 0 && left.theta > 0 && right.v > 0 && right.theta > 0,
          "fluid.boundary: far-field v and theta must be positive");
  require(static_cast<bool>(mu) && static_cast<bool>(lambda), "fluid.coefficients: mu and lambda required");
  for (std::size_t i = 0; i < n; ++i)
    if (!(v[i] > 0.0) || !(theta[i] > 0.0)) vacuum(*this, i, v[i], theta[i]);
}

FluidField fluid_from_wave(const ContactWaveField& wave, const SelfSimilarProfile& profile,
                           ScalarFn mu, ScalarFn lambda) {
  FluidField s;
  s.x = wave.x;
  require(uniform_grid(s.x, s.dx), "fluid.x: wave grid must be uniform");
  s.t = wave.t;
  s.epsilon = wave.epsilon;
  s.v = wave.vbar;
  s.u1 = wave.u1bar;
  s.u2.assign(s.x.size(), 0.0);
  s.u3.assign(s.x.size(), 0.0);
  s.theta = wave.thetabar;
  s.left = {2.0 * profile.theta_minus / (3.0 * profile.p_plus), profile.theta_minus};
  s.right = {2.0 * profile.theta_plus / (3.0 * profile.p_plus), profile.theta_plus};
  s.mu = std::move(mu);
  s.lambda = std::move(lambda);
  s.validate();
  return s;
}

FluidField fluid_from_riemann(const RiemannContact& rc, std::vector<double> x, double epsilon,
                              double width_cells, ScalarFn mu, ScalarFn lambda) {
  FluidField s;
  s.x = std::move(x);
  require(uniform_grid(s.x, s.dx), "fluid.x: grid must be uniform");
  require(width_cells > 0.0, "fluid.smoothing: width must be positive");
  s.epsilon = epsilon;
  const std::size_t n = s.x.size();
  s.v.resize(n);
  s.theta.resize(n);
  s.u1.assign(n, 0.0);
  s.u2.assign(n, 0.0);
  s.u3.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = 0.5 * (1.0 + std::tanh(s.x[i] / (width_cells * s.dx)));
    s.theta[i] = rc.theta_minus + (rc.theta_plus - rc.theta_minus) * w;
    s.v[i] = kGasConstant * s.theta[i] / rc.p_plus;
  }
  s.left = {rc.v_minus, rc.theta_minus};
  s.right = {rc.v_plus, rc.theta_plus};
  s.mu = std::move(mu);
  s.lambda = std::move(lambda);
  s.validate();
  return s;
}

std::array<double, 3> fluid_totals(const FluidField& s) {
  std::array<double, 3> t{};
  for (std::size_t i = 0; i < s.size(); ++i) {
    t[0] += s.v[i];
    t[1] += s.u1[i];
    t[2] += s.theta[i] + 0.5 * (s.u1[i] * s.u1[i] + s.u2[i] * s.u2[i] + s.u3[i] * s.u3[i]);
  }
  for (double& a : t) a *= s.dx;
  return t;
}

double max_stable_dt(const FluidField& s) {
  double dt = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double d = std::max(s.lambda(s.theta[i]), 4.0 * s.mu(s.theta[i]) / 3.0);
    dt = std::min(dt, 0.4 * s.dx * s.dx * s.v[i] / (s.epsilon * d));
    const double c = std::sqrt(kGamma * pressure(s.v[i], s.theta[i]) / s.v[i]);
    dt = std::min(dt, 0.5 * s.dx / c);
  }
  return dt;
}

void ns_step(FluidField& s, double dt, FluidStepFlux* flux) {
  require(dt > 0.0, "fluid.dt: must be positive");
  const double limit = max_stable_dt(s);
  if (dt > limit * (1.0 + 1e-9)) {
    std::ostringstream os;
    os << "fluid.dt: " << dt << " exceeds the stability limit " << limit;
    throw PreconditionError(os.str());
  }
  std::array<double, 3> a{}, b{}, c{};
  diffusion_step(s, 0.5 * dt, a);
  hyperbolic_step(s, dt, b);
  diffusion_step(s, 0.5 * dt, c);
  s.t += dt;
  if (flux)
    for (int k = 0; k < 3; ++k) flux->inflow[k] = a[k] + b[k] + c[k];
}

nlohmann::json FluidLedger::to_json() const {
  nlohmann::json j;
  j["steps"] = steps;
  j["max_step_drift"] = max_step_drift;
  j["quantities"] = {"v", "u1", "energy"};
  auto& arr = j["entries"] = nlohmann::json::array();
  for (const auto& e : entries)
    arr.push_back({{"t", e.t}, {"totals", e.totals}, {"inflow", e.inflow}, {"drift", e.drift}});
  return j;
}

WaveDeviation deviation_from_wave(const FluidField& s, const SelfSimilarProfile& profile) {
  const auto w = build_wave(profile, s.epsilon, s.t, s.x);
  WaveDeviation d;
  d.t = s.t;
  for (std::size_t i = 0; i < s.size(); ++i) {
    d.v = std::max(d.v, std::abs(s.v[i] - w.vbar[i]));
    d.u1 = std::max(d.u1, std::abs(s.u1[i] - w.u1bar[i]));
    d.theta = std::max(d.theta, std::abs(s.theta[i] - w.thetabar[i]));
  }
  return d;
}

FluidTrajectory ns_run(const FluidField& initial, const FluidRunConfig& config) {
  initial.validate();
  require(config.t_final >= initial.t, "fluid.t_final: must not precede the initial time");
  require(config.cfl > 0.0 && config.cfl <= 1.0, "fluid.cfl: must lie in (0, 1]");
  std::vector<double> targets;
  for (double t : config.snapshots) {
    require(t >= initial.t && t <= config.t_final, "fluid.snapshots: outside [t0, t_final]");
    targets.push_back(t);
  }
  targets.push_back(config.t_final);
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());

  FluidTrajectory out;
  FluidField s = initial;
  const auto totals0 = fluid_totals(s);
  std::array<double, 3> inflow_total{};
  auto record = [&]() {
    FluidLedgerEntry e;
    e.t = s.t;
    e.totals = fluid_totals(s);
    e.inflow = inflow_total;
    for (int k = 0; k < 3; ++k) e.drift[k] = e.totals[k] - totals0[k] - inflow_total[k];
    out.ledger.entries.push_back(e);
    out.snapshots.push_back(s);
    if (config.reference) out.deviation.push_back(deviation_from_wave(s, *config.reference));
  };
  for (double target : targets) {
    const double tol = 1e-12 * std::max(1.0, std::abs(target));
    while (s.t < target - tol) {
      double dt = config.dt > 0.0 ? config.dt : config.cfl * max_stable_dt(s);
      if (s.t + dt > target - tol) dt = target - s.t;
      const auto before = fluid_totals(s);
      FluidStepFlux fl;
      ns_step(s, dt, &fl);
      const auto after = fluid_totals(s);
      for (int k = 0; k < 3; ++k) {
        inflow_total[k] += fl.inflow[k];
        out.ledger.max_step_drift =
            std::max(out.ledger.max_step_drift, std::abs(after[k] - before[k] - fl.inflow[k]));
      }
      ++out.ledger.steps;
    }
    s.t = std::max(s.t, target);
    record();
  }
  return out;
}

}  // namespace kinlim
