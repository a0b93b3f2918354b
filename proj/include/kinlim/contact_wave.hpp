#pragma once

#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

#include "kinlim/collision.hpp"
#include "kinlim/numerics.hpp"
#include "kinlim/velocity_space.hpp"

namespace kinlim {

using ScalarFn = std::function<double(double)>;

struct RiemannContact {
  double v_minus = 1.0, theta_minus = 1.0;
  double v_plus = 1.0, theta_plus = 1.0;
  double p_plus = kGasConstant;
  double delta() const { return std::abs(theta_plus - theta_minus); }
  // Piecewise-constant inviscid state at Lagrangian x (the jump sits at x = 0).
  Primitive state_at(double x) const;
};

RiemannContact euler_riemann_contact(double v_minus, double theta_minus, double theta_plus);

struct TailFit {
  double c = 0.0;  // |Theta'| ~ A exp(-c eta^2)
  double c_left = 0.0, c_right = 0.0;
  double residual = 0.0;
  bool ok = false;
};

struct SelfSimilarProfile {
  double L = 10.0;
  double h = 0.0;
  std::vector<double> eta, theta_hat, dtheta_hat, d2theta_hat;
  double theta_minus = 1.0, theta_plus = 1.0, delta = 0.0, p_plus = kGasConstant;
  double residual_norm = 0.0;
  int newton_iterations = 0;
  int continuation_steps = 0;
  bool monotone = true;
  ScalarFn lambda_fn;

  double a(double theta) const;        // 9 p+ lambda(theta) / (10 theta)
  double a_prime(double theta) const;
  double value(double e) const;        // far-field constants outside [-L, L]
  double slope(double e) const;
  double curvature(double e) const;
  TailFit tail_fit(double lo = 2.0, double hi = 5.0) const;
};

SelfSimilarProfile solve_selfsimilar(double theta_minus, double theta_plus, double p_plus,
                                     ScalarFn lambda_fn, double L = 10.0, int n_eta = 2001,
                                     double tol = 1e-10);

// mu(theta), lambda(theta) along the isobar p = p_plus.
struct CoefficientTable {
  double theta_lo = 0.0, theta_hi = 0.0;
  bool constant = false;
  double mu0 = 0.0, lambda0 = 0.0;
  num::UniformCubic mu_spline, lambda_spline;
  double mu(double theta) const;
  double lambda(double theta) const;
  ScalarFn mu_fn() const;
  ScalarFn lambda_fn() const;
  nlohmann::json to_json() const;
};
CoefficientTable tabulate_coefficients(double theta_lo, double theta_hi, double p_plus,
                                       GridPtr grid, const CollisionModel& model, int nodes = 5);

struct ContactWaveField {
  Frame frame = Frame::Lagrangian;
  std::vector<double> x;
  double t = 0.0, epsilon = 0.0, delta = 0.0, p_plus = kGasConstant;
  // Transverse velocity components are identically zero.
  std::vector<double> vbar, u1bar, thetabar;
  std::vector<double> theta_hat, theta_hat_x, theta_hat_t;
  std::vector<double> vbar_x, u1bar_x, thetabar_x;
  std::vector<double> R1, R2;
};

ContactWaveField build_wave(const SelfSimilarProfile& profile, double epsilon, double t,
                            std::span<const double> x);
void wave_residuals(ContactWaveField& wave, const SelfSimilarProfile& profile, const ScalarFn& mu_fn,
                    const ScalarFn& lambda_fn);

// Eulerian displacement of the Lagrangian origin, int_0^t u1bar(0, s) ds.
double origin_shift(const SelfSimilarProfile& profile, double epsilon, double t);

struct EulerianWave {
  double t = 0.0, epsilon = 0.0;
  std::vector<double> X, rho, u1, theta;
  Primitive left, right;  // far-field states
  num::Pchip rho_i, u1_i, theta_i;
  Primitive sample(double X) const;
};

// Resample onto a uniform Eulerian grid with the same node count (or n_out).
EulerianWave lagrangian_to_eulerian(const ContactWaveField& wave, double origin = 0.0,
                                    std::size_t n_out = 0);

// Inverse map: Lagrangian coordinate of each Eulerian node, x = int rho dX,
// anchored so that x(X_anchor) = x_anchor.
std::vector<double> eulerian_to_lagrangian(std::span<const double> X, std::span<const double> rho,
                                           double X_anchor, double x_anchor);

}  // namespace kinlim
