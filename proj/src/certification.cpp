#include <chrono>
#include <cmath>
#include <limits>
#include <random>

#include "kinlim/collision.hpp"
#include "kinlim/error.hpp"

namespace kinlim {

namespace {

double wsum(const VelocityGrid& grid, std::span<const double> a, std::span<const double> b,
            std::span<const double> weight, std::span<const double> extra = {}) {
  const auto w = grid.weights();
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    s += w[k] * a[k] * b[k] / weight[k] * (extra.empty() ? 1.0 : extra[k]);
  return s;
}

// Random microscopic trial function: rough (white noise times M) or smooth
// (random quartic polynomial times M), alternating.
std::vector<double> trial_function(int t, std::mt19937_64& rng, const LinearizedOperator& op) {
  const VelocityGrid& grid = op.grid();
  const auto M = op.maxwellian();
  const std::size_t n = grid.size();
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> r(n);
  if (t % 2 == 0) {
    for (std::size_t k = 0; k < n; ++k) r[k] = nd(rng) * M[k];
  } else {
    double c[15];
    for (double& v : c) v = nd(rng);
    const auto x1 = grid.xi1(), x2 = grid.xi2(), x3 = grid.xi3();
    const double s = 1.0 / std::sqrt(kGasConstant * op.state().theta);
    for (std::size_t k = 0; k < n; ++k) {
      const double a = (x1[k] - op.state().u[0]) * s, b = (x2[k] - op.state().u[1]) * s,
                   d = (x3[k] - op.state().u[2]) * s;
      const double p = c[0] * a * b + c[1] * a * d + c[2] * b * d + c[3] * (a * a - b * b) +
                       c[4] * a * (a * a + b * b + d * d) + c[5] * b * (a * a + b * b + d * d) +
                       c[6] * d * (a * a + b * b + d * d) + c[7] * a * a * a + c[8] * b * b * d +
                       c[9] * (a * a + b * b + d * d) * (a * a + b * b + d * d) * 0.1 +
                       c[10] * a * b * d + c[11] * a * a * b + c[12] * d * d * a +
                       c[13] * a * a * d * d * 0.2 + c[14] * (b * b - d * d);
      r[k] = p * M[k];
    }
  }
  return apply_p1(r, op.basis());
}

double projection_moment_bound(const LinearizedOperator& op, std::span<const double> mstar, int k) {
  const VelocityGrid& grid = op.grid();
  const auto M = op.maxwellian();
  const auto x1 = grid.xi1(), x2 = grid.xi2(), x3 = grid.xi3(), w = grid.weights();
  double c0 = 0.0;
  for (int j = 0; j < 5; ++j) {
    const auto& chi = op.basis().chi[j];
    double a = 0.0, b = 0.0;
    for (std::size_t q = 0; q < grid.size(); ++q) {
      const double r = std::sqrt(x1[q] * x1[q] + x2[q] * x2[q] + x3[q] * x3[q]);
      const double rk = std::pow(r, k);
      a += w[q] * rk * rk * chi[q] * chi[q] * mstar[q] / (M[q] * M[q]);
      b += w[q] * chi[q] * chi[q] / mstar[q];
    }
    c0 += std::sqrt(a) * std::sqrt(b);
  }
  return 0.5 * c0;
}

}  // namespace

CertificationReport certify_operator_properties(const CollisionModel& model, const Primitive& state,
                                                const Primitive& mstar, int trials,
                                                std::uint64_t seed, GridPtr grid, int q_trials) {
  model.validate();
  require(trials >= 1, "certify: trials must be >= 1");
  require(state.rho > 0.0 && state.theta > 0.0, "certify: invalid state");
  require(mstar.rho > 0.0, "certify: M* density must be positive");
  if (!(mstar.theta > 0.5 * state.theta && mstar.theta < state.theta))
    throw PreconditionError(
        "certify.mstar.theta: global Maxwellian temperature window violated: need theta/2 < "
        "theta* < theta, got theta* = " +
        std::to_string(mstar.theta) + ", theta = " + std::to_string(state.theta));

  const auto t0 = std::chrono::steady_clock::now();
  CertificationReport rep;
  rep.kind = model.kind;
  rep.state = state;
  rep.mstar = mstar;
  rep.trials = trials;
  rep.q_trials = model.kind == CollisionKind::HardSphere ? q_trials : 0;
  rep.seed = seed;
  rep.eta0_used = std::abs(1.0 / state.rho - 1.0 / mstar.rho) + std::abs(state.u[0] - mstar.u[0]) +
                  std::abs(state.u[1] - mstar.u[1]) + std::abs(state.u[2] - mstar.u[2]) +
                  std::abs(state.theta - mstar.theta);

  const VelocityGrid& g = *grid;
  const std::size_t n = g.size();
  const auto op = build_linearized(state, grid, model);
  const auto M = op.maxwellian();
  const auto Ms = maxwellian(mstar, g);
  const auto nu = op.frequency();
  std::vector<double> inv_nu(n);
  for (std::size_t k = 0; k < n; ++k) inv_nu[k] = 1.0 / nu[k];
  rep.envelope = fit_frequency_envelope(g, nu);

  for (int j = 0; j < 5; ++j) {
    const auto& chi = op.basis().chi[j];
    const auto Lc = op.apply(chi);
    rep.null_space_residual = std::max(
        rep.null_space_residual, std::sqrt(op.basis().inner(Lc, Lc) / op.basis().inner(chi, chi)));
  }

  std::mt19937_64 rng(seed);

  // Coercivity: Rayleigh quotients over random microscopic h and over the
  // images L^{-1} h of a second random family.
  double smin_m = std::numeric_limits<double>::infinity();
  double smin_s = smin_m;
  auto rayleigh = [&](const std::vector<double>& h) {
    const auto Lh = op.apply(h);
    smin_m = std::min(smin_m, -wsum(g, h, Lh, M) / wsum(g, h, h, M, nu));
    smin_s = std::min(smin_s, -wsum(g, h, Lh, Ms) / wsum(g, h, h, Ms, nu));
  };
  for (int t = 0; t < trials; ++t) {
    rayleigh(trial_function(t, rng, op));
    const auto img = op.solve(trial_function(t + 1, rng, op));
    rep.inverse_residual = std::max(rep.inverse_residual, op.last_residual());
    rayleigh(img);
  }
  rep.sigma_m = smin_m;
  rep.sigma_mstar = smin_s;
  rep.sigma = std::min(smin_m, smin_s);

  // Inverse bounds on a fresh family, with the measured sigma.
  std::mt19937_64 rng_inv(seed ^ 0x9e3779b97f4a7c15ULL);
  for (int t = 0; t < trials; ++t) {
    const auto h = trial_function(t, rng_inv, op);
    const auto x = op.solve(h);
    rep.inverse_residual = std::max(rep.inverse_residual, op.last_residual());
    const double s2 = 1.0 / (rep.sigma * rep.sigma);
    rep.inverse_bound_ratio_m =
        std::max(rep.inverse_bound_ratio_m, wsum(g, x, x, M, nu) / (s2 * wsum(g, h, h, M, inv_nu)));
    rep.inverse_bound_ratio_mstar = std::max(
        rep.inverse_bound_ratio_mstar, wsum(g, x, x, Ms, nu) / (s2 * wsum(g, h, h, Ms, inv_nu)));
  }

  // Projection-moment inequality.
  {
    std::mt19937_64 rng_pm(seed + 44);
    std::normal_distribution<double> nd(0.0, 1.0);
    const auto x1 = g.xi1(), x2 = g.xi2(), x3 = g.xi3();
    for (int k : {1, 2, 3}) {
      const double structural = projection_moment_bound(op, Ms, k);
      for (double lam : {0.1, 1.0, 10.0}) {
        ProjectionMomentEntry e{k, lam, 0.0, structural, false};
        for (int t = 0; t < trials; ++t) {
          std::vector<double> g1(n), g2(n), r(n);
          const double s1 = std::exp(nd(rng_pm)), s2 = std::exp(nd(rng_pm));
          for (std::size_t q = 0; q < n; ++q) {
            g1[q] = s1 * nd(rng_pm) * M[q];
            g2[q] = s2 * nd(rng_pm) * M[q];
            const double rr = std::sqrt(x1[q] * x1[q] + x2[q] * x2[q] + x3[q] * x3[q]);
            r[q] = std::pow(rr, k) * g2[q];
          }
          const auto p1 = apply_p1(r, op.basis());
          double lhs = 0.0;
          for (std::size_t q = 0; q < n; ++q) lhs += g.weights()[q] * g1[q] * (p1[q] - r[q]) / Ms[q];
          const double rhs = lam * wsum(g, g1, g1, Ms) + wsum(g, g2, g2, Ms) / lam;
          e.measured = std::max(e.measured, std::abs(lhs) / rhs);
        }
        e.ok = std::isfinite(e.measured) && e.measured <= e.structural * (1.0 + 1e-12);
        rep.projection_moment_C = std::max(rep.projection_moment_C, e.measured);
        rep.projection_moment.push_back(e);
      }
    }
  }

  // Bilinear bound on Q (hard spheres only: BGK has no bilinear form).
  rep.collision_bound_C = std::numeric_limits<double>::quiet_NaN();
  if (model.kind == CollisionKind::HardSphere && q_trials > 0) {
    HardSphereOperator hs(grid, model.n_polar, model.n_azimuth);
    std::mt19937_64 rngq(seed + 41);
    std::normal_distribution<double> nd(0.0, 1.0);
    double cmax = 0.0;
    for (int t = 0; t < q_trials; ++t) {
      std::vector<double> f(n), h(n);
      for (std::size_t q = 0; q < n; ++q) {
        f[q] = M[q] * (1.0 + 0.3 * nd(rngq));
        h[q] = M[q] * (1.0 + 0.3 * nd(rngq));
      }
      const auto Q = hs.collide(f, h, M);
      for (int which = 0; which < 2; ++which) {
        std::span<const double> W = which == 0 ? std::span<const double>(M)
                                               : std::span<const double>(Ms);
        const double lhs = wsum(g, Q, Q, W, inv_nu);
        const double rhs = wsum(g, f, f, W, nu) * wsum(g, h, h, W) +
                           wsum(g, f, f, W) * wsum(g, h, h, W, nu);
        cmax = std::max(cmax, lhs / rhs);
      }
    }
    rep.collision_bound_C = cmax;
  }

  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  bool ok = true;
  std::string why;
  auto fail = [&](const std::string& s) {
    ok = false;
    if (!why.empty()) why += "; ";
    why += s;
  };
  if (!(rep.sigma > 0.0) || !std::isfinite(rep.sigma)) fail("coercivity constant is not positive");
  if (!(rep.inverse_bound_ratio_m <= 1.0 + 1e-10) || !(rep.inverse_bound_ratio_mstar <= 1.0 + 1e-10))
    fail("inverse bound violated with the measured coercivity constant");
  for (const auto& e : rep.projection_moment)
    if (!e.ok) fail("projection-moment inequality exceeded its structural bound");
  if (model.kind == CollisionKind::HardSphere && !std::isfinite(rep.collision_bound_C))
    fail("bilinear collision bound is not finite");
  if (!(rep.null_space_residual <= 1e-6)) fail("collision invariants are not in the null space");
  rep.success = ok;
  rep.failure = why;
  return rep;
}

nlohmann::json CertificationReport::to_json() const {
  nlohmann::json l44 = nlohmann::json::array();
  for (const auto& e : projection_moment)
    l44.push_back({{"k", e.k}, {"lambda", e.lambda}, {"measured", e.measured},
                   {"structural_bound", e.structural}, {"ok", e.ok}});
  auto prim = [](const Primitive& p) {
    return nlohmann::json{{"rho", p.rho}, {"u", p.u}, {"theta", p.theta}};
  };
  nlohmann::json j{{"model", to_string(kind)},
                   {"state", prim(state)},
                   {"mstar", prim(mstar)},
                   {"trials", trials},
                   {"q_trials", q_trials},
                   {"seed", seed},
                   {"sigma", sigma},
                   {"sigma_m", sigma_m},
                   {"sigma_mstar", sigma_mstar},
                   {"eta0_used", eta0_used},
                   {"null_space_residual", null_space_residual},
                   {"inverse_bound_ratio_m", inverse_bound_ratio_m},
                   {"inverse_bound_ratio_mstar", inverse_bound_ratio_mstar},
                   {"projection_moment_C", projection_moment_C},
                   {"projection_moment", l44},
                   {"envelope", envelope.to_json()},
                   {"inverse_residual", inverse_residual},
                   {"seconds", seconds},
                   {"success", success},
                   {"failure", failure}};
  j["collision_bound_C"] = std::isfinite(collision_bound_C) ? nlohmann::json(collision_bound_C) : nlohmann::json(nullptr);
  return j;
}

}  // namespace kinlim
