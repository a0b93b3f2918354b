#pragma once

#include <json.hpp>

#include "kinlim/collision.hpp"
#include "kinlim/contact_wave.hpp"
#include "kinlim/kinetic_solver.hpp"

namespace kinlim {

// The contact-wave problem shared by the kinetic and fluid pipelines.
struct ContactScenario {
  RiemannContact rc;
  SelfSimilarProfile profile;
  CoefficientTable coefficients;
  KineticBoundary boundary;
  Primitive mstar;

  // Viscous wave mapped to Eulerian coordinates, covering [-x_half, x_half].
  EulerianWave eulerian_wave(double epsilon, double t, double x_half,
                             std::size_t n_lagrangian = 4001) const;
  nlohmann::json to_json() const;
};

struct ScenarioOptions {
  double v_minus = 1.0, theta_minus = 1.0, theta_plus = 1.2;
  double L = 10.0;
  int n_eta = 2001;
  double tol = 1e-10;
  double mstar_fraction = 0.9;  // theta* = fraction * min(theta-, theta+)
};

// grid is only used to tabulate hard-sphere transport coefficients.
ContactScenario make_contact_scenario(const ScenarioOptions& options, const CollisionModel& model,
                                      GridPtr grid = nullptr);

}  // namespace kinlim
