#include "kinlim/contact_wave.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kinlim/error.hpp"

namespace kinlim {

Primitive RiemannContact::state_at(double x) const {
  if (x < 0.0) return {1.0 / v_minus, {0, 0, 0}, theta_minus};
  return {1.0 / v_plus, {0, 0, 0}, theta_plus};
}

RiemannContact euler_riemann_contact(double v_minus, double theta_minus, double theta_plus) {
  require(v_minus > 0.0 && theta_minus > 0.0 && theta_plus > 0.0,
          "euler_riemann_contact: v_minus, theta_minus, theta_plus must be positive");
  RiemannContact c;
  c.v_minus = v_minus;
  c.theta_minus = theta_minus;
  c.theta_plus = theta_plus;
  c.v_plus = v_minus * theta_plus / theta_minus;
  c.p_plus = kGasConstant * theta_minus / v_minus;
  return c;
}

// ---------------------------------------------------------------------------
// Self-similar profile

double SelfSimilarProfile::a(double theta) const {
  return 9.0 * p_plus * lambda_fn(theta) / (10.0 * theta);
}

double SelfSimilarProfile::a_prime(double theta) const {
  const double h = 1e-5 * theta;
  return (a(theta + h) - a(theta - h)) / (2.0 * h);
}

double SelfSimilarProfile::value(double e) const {
  if (e <= -L) return theta_minus;
  if (e >= L) return theta_plus;
  return num::hermite(theta_hat, dtheta_hat, -L, h, e);
}

double SelfSimilarProfile::slope(double e) const {
  if (e <= -L || e >= L) return 0.0;
  return num::hermite(dtheta_hat, d2theta_hat, -L, h, e);
}

double SelfSimilarProfile::curvature(double e) const {
  if (e <= -L || e >= L) return 0.0;
  const double s = (e + L) / h;
  const std::size_t n = eta.size();
  const std::size_t i = std::min(static_cast<std::size_t>(s), n - 2);
  const double r = s - static_cast<double>(i);
  return (1.0 - r) * d2theta_hat[i] + r * d2theta_hat[i + 1];
}

TailFit SelfSimilarProfile::tail_fit(double lo, double hi) const {
  TailFit t;
  if (delta == 0.0) return t;
  auto side = [&](int sign, double& c, double& res) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < eta.size(); ++i) {
      const double e = sign * eta[i];
      if (e < lo || e > hi) continue;
      const double d = std::abs(dtheta_hat[i]);
      if (!(d > 0.0)) continue;
      xs.push_back(eta[i] * eta[i]);
      ys.push_back(std::log(d));
    }
    if (xs.size() < 3) return false;
    const auto fit = num::fit_line(xs, ys);
    c = -fit.slope;
    res = std::max(res, fit.residual);
    return std::isfinite(c);
  };
  const bool l = side(-1, t.c_left, t.residual);
  const bool r = side(1, t.c_right, t.residual);
  t.c = std::min(t.c_left, t.c_right);
  t.ok = l && r && t.c > 0.0;
  return t;
}

namespace {

struct BvpState {
  const SelfSimilarProfile* prof;
  std::vector<double> eta;
  double h;
};

// Central-difference residual of (a(T) T')' + (eta/2) T' at interior nodes.
double residual(const BvpState& s, const std::vector<double>& T, std::vector<double>* r) {
  const std::size_t n = T.size();
  const double h2 = s.h * s.h;
  double mx = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double ap = s.prof->a(0.5 * (T[i] + T[i + 1]));
    const double am = s.prof->a(0.5 * (T[i] + T[i - 1]));
    const double v = (ap * (T[i + 1] - T[i]) - am * (T[i] - T[i - 1])) / h2 +
                     0.25 * s.eta[i] * (T[i + 1] - T[i - 1]) / s.h;
    if (r) (*r)[i] = v;
    mx = std::max(mx, std::abs(v));
  }
  return mx;
}

struct NewtonResult {
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

NewtonResult newton(const BvpState& s, std::vector<double>& T, double tol, int max_iter) {
  const std::size_t n = T.size();
  const std::size_t m = n - 2;
  const double h2 = s.h * s.h;
  std::vector<double> r(n, 0.0), lo(m), di(m), up(m), d(m), trial(n);
  NewtonResult out;
  double rn = residual(s, T, &r);
  for (int it = 0; it < max_iter; ++it) {
    out.residual = rn;
    out.iterations = it;
    if (rn <= tol) {
      out.converged = true;
      return out;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double tp = 0.5 * (T[i] + T[i + 1]), tm = 0.5 * (T[i] + T[i - 1]);
      const double ap = s.prof->a(tp), am = s.prof->a(tm);
      const double dap = s.prof->a_prime(tp), dam = s.prof->a_prime(tm);
      const double gp = T[i + 1] - T[i], gm = T[i] - T[i - 1];
      const std::size_t k = i - 1;
      up[k] = (ap + 0.5 * dap * gp) / h2 + 0.25 * s.eta[i] / s.h;
      lo[k] = (am - 0.5 * dam * gm) / h2 - 0.25 * s.eta[i] / s.h;
      di[k] = (0.5 * dap * gp - ap - am - 0.5 * dam * gm) / h2;
      d[k] = -r[i];
    }
    num::solve_tridiagonal(lo, di, up, d);
    double step = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls, step *= 0.5) {
      trial = T;
      for (std::size_t k = 0; k < m; ++k) trial[k + 1] += step * d[k];
      bool positive = true;
      for (double v : trial) positive = positive && v > 0.0;
      if (!positive) continue;
      std::vector<double> rt(n, 0.0);
      const double rtn = residual(s, trial, &rt);
      if (rtn < rn || (rtn <= tol)) {
        T.swap(trial);
        r.swap(rt);
        rn = rtn;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  out.residual = rn;
  out.converged = rn <= tol;
  return out;
}

}  // namespace

SelfSimilarProfile solve_selfsimilar(double theta_minus, double theta_plus, double p_plus,
                                     ScalarFn lambda_fn, double L, int n_eta, double tol) {
  require(theta_minus > 0.0 && theta_plus > 0.0, "wave.theta: theta_minus and theta_plus must be positive");
  require(p_plus > 0.0, "wave.p_plus: must be positive");
  require(L >= 8.0, "wave.L: must be at least 8");
  require(n_eta >= 21, "wave.n_eta: must be at least 21");
  require(tol > 0.0, "wave.tol: must be positive");
  require(static_cast<bool>(lambda_fn), "wave.lambda_fn: missing heat-conductivity function");
  const double tlo = std::min(theta_minus, theta_plus), thi = std::max(theta_minus, theta_plus);
  for (int k = 0; k <= 8; ++k) {
    const double th = tlo + (thi - tlo) * k / 8.0;
    require(lambda_fn(th) > 0.0, "wave.lambda_fn: must be positive on [min theta, max theta]");
  }

  SelfSimilarProfile p;
  p.L = L;
  p.theta_minus = theta_minus;
  p.theta_plus = theta_plus;
  p.delta = std::abs(theta_plus - theta_minus);
  p.p_plus = p_plus;
  p.lambda_fn = std::move(lambda_fn);
  const std::size_t n = static_cast<std::size_t>(n_eta);
  p.h = 2.0 * L / static_cast<double>(n - 1);
  p.eta.resize(n);
  for (std::size_t i = 0; i < n; ++i) p.eta[i] = -L + p.h * static_cast<double>(i);
  p.eta.back() = L;

  std::vector<double> T(n, theta_minus);
  if (p.delta > 0.0) {
    BvpState s{&p, p.eta, p.h};
    // Continuation in the jump, starting from the constant solution.
    const int stages = std::max(1, static_cast<int>(std::ceil(p.delta / 0.1)));
    double prev_plus = theta_minus;
    for (int st = 1; st <= stages; ++st) {
      const double target = theta_minus + (theta_plus - theta_minus) * st / stages;
      if (st == 1) {
        for (std::size_t i = 0; i < n; ++i)
          T[i] = theta_minus + (target - theta_minus) * 0.5 * (1.0 + std::erf(p.eta[i] / 2.0));
      } else {
        const double scale = (target - theta_minus) / (prev_plus - theta_minus);
        for (double& v : T) v = theta_minus + (v - theta_minus) * scale;
      }
      T.front() = theta_minus;
      T.back() = target;
      // Intermediate stages only need to land in Newton's basin.
      const double stage_tol = st == stages ? tol : std::max(tol, 1e-8);
      const NewtonResult nr = newton(s, T, stage_tol, 60);
      p.newton_iterations += nr.iterations;
      p.residual_norm = nr.residual;
      if (!nr.converged)
        throw NumericalError("wave: Newton did not converge (last residual " +
                             std::to_string(nr.residual) + ", continuation stage " +
                             std::to_string(st) + "/" + std::to_string(stages) + ")");
      prev_plus = target;
    }
    p.continuation_steps = stages;
  }
  p.theta_hat = T;

  // Derivatives: second-order differences for T', the ODE itself for T''.
  p.dtheta_hat.assign(n, 0.0);
  p.d2theta_hat.assign(n, 0.0);
  if (p.delta > 0.0) {
    for (std::size_t i = 1; i + 1 < n; ++i) p.dtheta_hat[i] = (T[i + 1] - T[i - 1]) / (2.0 * p.h);
    p.dtheta_hat[0] = (-3.0 * T[0] + 4.0 * T[1] - T[2]) / (2.0 * p.h);
    p.dtheta_hat[n - 1] = (3.0 * T[n - 1] - 4.0 * T[n - 2] + T[n - 3]) / (2.0 * p.h);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = p.dtheta_hat[i];
      p.d2theta_hat[i] = (-0.5 * p.eta[i] * d - p.a_prime(T[i]) * d * d) / p.a(T[i]);
    }
  }

  const double sgn = theta_plus >= theta_minus ? 1.0 : -1.0;
  const double slack = 1e-14 * std::max(p.delta, 1e-300);
  p.monotone = true;
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (sgn * (T[i + 1] - T[i]) < -slack) p.monotone = false;
  return p;
}

// ---------------------------------------------------------------------------
// Coefficient tables

double CoefficientTable::mu(double theta) const {
  if (constant) return mu0;
  return mu_spline(std::clamp(theta, theta_lo, theta_hi));
}

double CoefficientTable::lambda(double theta) const {
  if (constant) return lambda0;
  return lambda_spline(std::clamp(theta, theta_lo, theta_hi));
}

ScalarFn CoefficientTable::mu_fn() const {
  return [t = *this](double th) { return t.mu(th); };
}

ScalarFn CoefficientTable::lambda_fn() const {
  return [t = *this](double th) { return t.lambda(th); };
}

nlohmann::json CoefficientTable::to_json() const {
  nlohmann::json j{{"theta_lo", theta_lo}, {"theta_hi", theta_hi}, {"constant", constant}};
  if (constant) {
    j["mu"] = mu0;
    j["lambda"] = lambda0;
  } else {
    nlohmann::json nodes = nlohmann::json::array();
    for (int k = 0; k <= 4; ++k) {
      const double th = theta_lo + (theta_hi - theta_lo) * k / 4.0;
      nodes.push_back({{"theta", th}, {"mu", mu(th)}, {"lambda", lambda(th)}});
    }
    j["samples"] = nodes;
  }
  return j;
}

CoefficientTable tabulate_coefficients(double theta_lo, double theta_hi, double p_plus,
                                       GridPtr grid, const CollisionModel& model, int nodes) {
  require(theta_lo > 0.0 && theta_hi >= theta_lo, "coefficients: invalid temperature range");
  require(p_plus > 0.0, "coefficients: p_plus must be positive");
  model.validate();
  CoefficientTable t;
  // A 10% margin covers theta_bar dipping below the profile range.
  const double span = std::max(theta_hi - theta_lo, 0.05 * theta_hi);
  t.theta_lo = std::max(theta_lo - 0.1 * span, 0.5 * theta_lo);
  t.theta_hi = theta_hi + 0.1 * span;
  if (model.kind == CollisionKind::BGK) {
    t.constant = true;
    t.mu0 = p_plus / model.nu0;
    t.lambda0 = 5.0 * p_plus / (3.0 * model.nu0);
    return t;
  }
  require(nodes >= 3, "coefficients: need at least 3 table nodes");
  require(static_cast<bool>(grid), "coefficients: velocity grid required for hard-sphere tables");
  const double h = (t.theta_hi - t.theta_lo) / (nodes - 1);
  std::vector<double> mu(nodes), la(nodes);
  for (int k = 0; k < nodes; ++k) {
    const double th = t.theta_lo + h * k;
    const double rho = 3.0 * p_plus / (2.0 * th);
    const auto c = transport_coefficients(rho, th, grid, model, CoefficientPath::Dense);
    mu[k] = c.mu;
    la[k] = c.lambda;
  }
  t.mu_spline = num::UniformCubic(t.theta_lo, h, mu);
  t.lambda_spline = num::UniformCubic(t.theta_lo, h, la);
  return t;
}

// ---------------------------------------------------------------------------
// Wave construction

ContactWaveField build_wave(const SelfSimilarProfile& profile, double epsilon, double t,
                            std::span<const double> x) {
  require(epsilon > 0.0, "wave.epsilon: must be positive");
  require(t >= 0.0, "wave.t: must be nonnegative");
  require(!profile.theta_hat.empty(), "build_wave: profile not solved");
  const std::size_t n = x.size();
  ContactWaveField w;
  w.x.assign(x.begin(), x.end());
  w.t = t;
  w.epsilon = epsilon;
  w.delta = profile.delta;
  w.p_plus = profile.p_plus;
  for (auto* v : {&w.vbar, &w.u1bar, &w.thetabar, &w.theta_hat, &w.theta_hat_x, &w.theta_hat_t,
                  &w.vbar_x, &w.u1bar_x, &w.thetabar_x, &w.R1, &w.R2})
    v->assign(n, 0.0);
  const double s = std::sqrt(epsilon * (1.0 + t));
  const double pp = profile.p_plus;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = x[i] / s;
    const double T = profile.value(e);
    const double d1 = profile.slope(e);
    const double d2 = profile.curvature(e);
    const double Tx = d1 / s, Txx = d2 / (s * s);
    const double a = profile.delta > 0.0 ? profile.a(T) : 0.0;
    const double da = profile.delta > 0.0 ? profile.a_prime(T) : 0.0;
    w.theta_hat[i] = T;
    w.theta_hat_x[i] = Tx;
    w.theta_hat_t[i] = -(e / (2.0 * (1.0 + t))) * d1;
    w.vbar[i] = 2.0 * T / (3.0 * pp);
    w.vbar_x[i] = 2.0 * Tx / (3.0 * pp);
    const double u = 2.0 * epsilon * a / (3.0 * pp) * Tx;
    const double ux = 2.0 * epsilon / (3.0 * pp) * (da * Tx * Tx + a * Txx);
    w.u1bar[i] = u;
    w.u1bar_x[i] = ux;
    w.thetabar[i] = T - 0.5 * u * u;
    w.thetabar_x[i] = Tx - u * ux;
  }
  return w;
}

void wave_residuals(ContactWaveField& w, const SelfSimilarProfile& profile, const ScalarFn& mu_fn,
                    const ScalarFn& lambda_fn) {
  require(static_cast<bool>(mu_fn) && static_cast<bool>(lambda_fn),
          "wave_residuals: missing coefficient functions");
  const std::size_t n = w.x.size();
  require(w.theta_hat_t.size() == n && w.u1bar_x.size() == n && w.thetabar_x.size() == n,
          "wave_residuals: missing derivative tables");
  const double eps = w.epsilon, pp = w.p_plus;
  w.R1.assign(n, 0.0);
  w.R2.assign(n, 0.0);
  if (w.delta == 0.0) return;
  for (std::size_t i = 0; i < n; ++i) {
    const double T = w.theta_hat[i];
    const double tb = w.thetabar[i], vb = w.vbar[i], u = w.u1bar[i], ux = w.u1bar_x[i];
    const double pbar = kGasConstant * tb / vb;
    const double visc = 4.0 * eps * mu_fn(tb) / (3.0 * vb);
    w.R1[i] = 2.0 * eps / (3.0 * pp) * profile.a(T) * w.theta_hat_t[i] + (pbar - pp) - visc * ux;
    w.R2[i] = eps / vb * (lambda_fn(T) * w.theta_hat_x[i] - lambda_fn(tb) * w.thetabar_x[i]) +
              (pbar - pp) * u - visc * u * ux;
  }
}

double origin_shift(const SelfSimilarProfile& profile, double epsilon, double t) {
  if (profile.delta == 0.0) return 0.0;
  const double a0 = profile.a(profile.value(0.0));
  return 2.0 * std::sqrt(epsilon) * a0 * profile.slope(0.0) / (3.0 * profile.p_plus) * 2.0 *
         (std::sqrt(1.0 + t) - 1.0);
}

// ---------------------------------------------------------------------------
// Coordinate maps

namespace {

std::vector<double> cumulative(std::span<const double> x, std::span<const double> f) {
  std::vector<double> c(x.size(), 0.0);
  for (std::size_t i = 1; i < x.size(); ++i)
    c[i] = c[i - 1] + 0.5 * (x[i] - x[i - 1]) * (f[i] + f[i - 1]);
  return c;
}

// Integral from x[0] to a, consistent with the trapezoid table above.
double cumulative_at(std::span<const double> x, std::span<const double> f,
                     const std::vector<double>& c, double a) {
  require(a >= x.front() && a <= x.back(), "coordinate map: anchor outside the grid");
  std::size_t k = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), a) - x.begin());
  k = std::clamp<std::size_t>(k, 1, x.size() - 1) - 1;
  const double r = (a - x[k]) / (x[k + 1] - x[k]);
  const double fa = (1.0 - r) * f[k] + r * f[k + 1];
  return c[k] + 0.5 * (a - x[k]) * (f[k] + fa);
}

}  // namespace

Primitive EulerianWave::sample(double x) const {
  if (x <= X.front()) return left;
  if (x >= X.back()) return right;
  return {rho_i(x), {u1_i(x), 0.0, 0.0}, theta_i(x)};
}

EulerianWave lagrangian_to_eulerian(const ContactWaveField& w, double origin, std::size_t n_out) {
  const std::size_t n = w.x.size();
  require(n >= 2, "lagrangian_to_eulerian: need at least two nodes");
  for (double v : w.vbar) require(v > 0.0, "lagrangian_to_eulerian: nonpositive specific volume");
  for (std::size_t i = 1; i < n; ++i)
    require(w.x[i] > w.x[i - 1], "lagrangian_to_eulerian: grid must be increasing");
  const auto c = cumulative(w.x, w.vbar);
  // The Lagrangian origin maps to `origin`; if it lies outside the grid the
  // far field is treated as uniform out to it.
  const double a0 = std::clamp(0.0, w.x.front(), w.x.back());
  const double c0 = cumulative_at(w.x, w.vbar, c, a0);
  const double va = a0 == w.x.front() ? w.vbar.front() : w.vbar.back();
  const double shift = a0 == 0.0 ? 0.0 : a0 * va;
  std::vector<double> Xl(n), rho(n);
  for (std::size_t i = 0; i < n; ++i) {
    Xl[i] = origin + shift + c[i] - c0;
    rho[i] = 1.0 / w.vbar[i];
  }

  EulerianWave e;
  e.t = w.t;
  e.epsilon = w.epsilon;
  e.left = {rho.front(), {w.u1bar.front(), 0, 0}, w.thetabar.front()};
  e.right = {rho.back(), {w.u1bar.back(), 0, 0}, w.thetabar.back()};
  e.rho_i = num::Pchip(Xl, rho);
  e.u1_i = num::Pchip(Xl, w.u1bar);
  e.theta_i = num::Pchip(Xl, w.thetabar);
  const std::size_t m = n_out ? n_out : n;
  e.X.resize(m);
  e.rho.resize(m);
  e.u1.resize(m);
  e.theta.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double X = i + 1 == m ? Xl.back()
                                : Xl.front() + (Xl.back() - Xl.front()) * static_cast<double>(i) /
                                                   static_cast<double>(m - 1);
    e.X[i] = X;
    e.rho[i] = e.rho_i(X);
    e.u1[i] = e.u1_i(X);
    e.theta[i] = e.theta_i(X);
  }
  return e;
}

std::vector<double> eulerian_to_lagrangian(std::span<const double> X, std::span<const double> rho,
                                           double X_anchor, double x_anchor) {
  require(X.size() == rho.size() && X.size() >= 2, "eulerian_to_lagrangian: size mismatch");
  for (double r : rho) require(r > 0.0, "eulerian_to_lagrangian: nonpositive density");
  const auto c = cumulative(X, rho);
  const double ca = cumulative_at(X, rho, c, X_anchor);
  std::vector<double> x(X.size());
  for (std::size_t i = 0; i < X.size(); ++i) x[i] = x_anchor + c[i] - ca;
  return x;
}

}  // namespace kinlim
