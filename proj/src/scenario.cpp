#include "kinlim/scenario.hpp"

#include <algorithm>
#include <cmath>

#include "kinlim/error.hpp"
#include "kinlim/micromacro.hpp"

namespace kinlim {

EulerianWave ContactScenario::eulerian_wave(double epsilon, double t, double x_half,
                                            std::size_t n_lagrangian) const {
  require(x_half > 0.0 && n_lagrangian >= 3, "scenario: bad Eulerian window");
  // Lagrangian half-width that maps beyond the Eulerian window on both sides.
  const double rho_max = std::max(1.0 / rc.v_minus, 1.0 / rc.v_plus);
  const double shift = std::abs(origin_shift(profile, epsilon, t));
  const double half = 1.1 * (x_half + shift) * rho_max + 1.0;
  std::vector<double> x(n_lagrangian);
  for (std::size_t i = 0; i < n_lagrangian; ++i)
    x[i] = -half + 2.0 * half * static_cast<double>(i) / static_cast<double>(n_lagrangian - 1);
  const auto wave = build_wave(profile, epsilon, t, x);
  return lagrangian_to_eulerian(wave, origin_shift(profile, epsilon, t));
}

nlohmann::json ContactScenario::to_json() const {
  return {{"v_minus", rc.v_minus},
          {"v_plus", rc.v_plus},
          {"theta_minus", rc.theta_minus},
          {"theta_plus", rc.theta_plus},
          {"p_plus", rc.p_plus},
          {"delta", rc.delta()},
          {"profile",
           {{"L", profile.L},
            {"n_eta", profile.eta.size()},
            {"residual_norm", profile.residual_norm},
            {"newton_iterations", profile.newton_iterations},
            {"continuation_steps", profile.continuation_steps},
            {"monotone", profile.monotone}}},
          {"coefficients", coefficients.to_json()},
          {"mstar", {{"rho", mstar.rho}, {"theta", mstar.theta}}}};
}

ContactScenario make_contact_scenario(const ScenarioOptions& o, const CollisionModel& model,
                                      GridPtr grid) {
  ContactScenario s;
  s.rc = euler_riemann_contact(o.v_minus, o.theta_minus, o.theta_plus);
  const double lo = std::min(o.theta_minus, o.theta_plus);
  const double hi = std::max(o.theta_minus, o.theta_plus);
  s.coefficients = tabulate_coefficients(lo, hi, s.rc.p_plus, grid, model);
  s.profile = solve_selfsimilar(o.theta_minus, o.theta_plus, s.rc.p_plus,
                                s.coefficients.lambda_fn(), o.L, o.n_eta, o.tol);
  s.boundary.left = {1.0 / s.rc.v_minus, {0, 0, 0}, o.theta_minus};
  s.boundary.right = {1.0 / s.rc.v_plus, {0, 0, 0}, o.theta_plus};
  s.mstar = default_mstar(s.boundary.left.rho, s.boundary.right.rho, lo, hi);
  s.mstar.theta = o.mstar_fraction * lo;
  check_mstar_window(s.mstar.theta, lo, hi, "scenario.mstar_fraction");
  return s;
}

}  // namespace kinlim
