#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

#include "kinlim/collision.hpp"
#include "kinlim/contact_wave.hpp"
#include "kinlim/io.hpp"
#include "kinlim/kinetic_solver.hpp"
#include "kinlim/scenario.hpp"

namespace kinlim {

// ---- Lagrangian view of a kinetic snapshot ----

// Lagrangian label of the left domain face at t = 0, with the label origin at
// the Eulerian origin: -int_{X_left}^{0} rho dX.
double initial_left_label(const DistributionField& f0);

struct LagrangianMoments {
  double t = 0.0;
  std::vector<double> x;  // labels of the cell centres, increasing
  std::vector<double> v, u1, u2, u3, theta;
};

// Labels follow from x = left_label + int rho dX, with the left label moved
// by the mass that has entered through the left boundary.
LagrangianMoments kinetic_to_lagrangian(const KineticSnapshot& s, double initial_left);

// ---- Scaled perturbation and antiderivatives ----

struct PerturbationFields {
  double epsilon = 0.0, tau = 0.0;
  std::vector<double> y;  // x / sqrt(eps)
  std::vector<double> phi, zeta, omega;
  std::array<std::vector<double>, 3> psi;
  std::vector<double> Phi, Wbar, W, Y;
  std::array<std::vector<double>, 3> Psi;
  bool antiderivatives_valid = false;
  double left_tail = 0.0;  // largest |phi|, |psi|, |omega| at y_min

  std::size_t size() const { return y.size(); }
};

// Differences to the wave over sqrt(eps); the wave must sit on the same labels.
PerturbationFields scaled_perturbation(const LagrangianMoments& m, const ContactWaveField& wave);

inline constexpr double kLeftTailTolerance = 1e-6;

// Cumulative trapezoid integrals from y_min, then W = Wbar - u1bar Psi1 and
// Y = sqrt(eps)/2 |Psi_y|^2 - u1bar_y Psi1. Flags the result invalid when the
// integrands do not decay at y_min.
void antiderivatives(PerturbationFields& p, const ContactWaveField& wave);

// ---- Microscopic part and its fluid-driven component ----

struct MicroFields {
  std::size_t n_cells = 0, n_vel = 0;
  std::vector<double> G, G0, G1;  // cell-major, n_cells * n_vel
  std::vector<double> maxwellian;  // matched local Maxwellian of each cell
};

enum class InversePath { Auto, ClosedForm, Dense };

// Gbar = P1 f / sqrt(eps), G0 = 3/(2 v theta) L_M^{-1} P1[xi1 (|xi-u|^2/(2 theta)
// thetabar_y + xi . ubar_y) M], G1 = Gbar - G0; v, u, theta, M are the cell's own.
// ubar_y has only the first component for the contact wave.
MicroFields micro_decomposition_G(const DistributionField& f, std::span<const double> thetabar_y,
                                  std::span<const double> u1bar_y, double epsilon,
                                  const CollisionModel& model,
                                  InversePath path = InversePath::Auto);

// ---- Energy functional ----

inline constexpr std::array<const char*, 6> kEnergyTermNames = {
    "antiderivative", "perturbation", "perturbation_y", "G1", "G_first_derivatives",
    "f_second_derivatives"};

struct E6Weights {
  std::array<double, 6> w{1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
};

// The six terms: ||(Phi,Psi,W)||^2, ||(phi,psi,zeta)||^2, eps ||(phi,psi,zeta)_y||^2,
// int int G1^2/M*, eps sum_{|a|=1} int int |d^a Gbar|^2/M*,
// eps sum_{|a|=2} int int |d^a f|^2/M*, derivatives in (y, tau).
struct EnergyComponents {
  std::array<double, 6> term{};
};

// Derivatives of Gbar and f at one snapshot, cell-major like MicroFields.
struct DerivativeFields {
  std::vector<double> G_y, G_tau, f_yy, f_ytau, f_tautau;
  bool has_tau = false;
};

EnergyComponents energy_components(const PerturbationFields& p, const MicroFields& g,
                                   const DerivativeFields& d, std::span<const double> mstar,
                                   const VelocityGrid& grid);
double energy_E6(const EnergyComponents& c, const E6Weights& w = {});

struct EnergyRow {
  double t = 0.0, tau = 0.0;
  double E6 = 0.0;
  EnergyComponents components;
  double growth_ratio = 0.0;  // E6 / (1 + sqrt(eps) tau)^{1/2}
  bool antiderivatives_valid = false;
};

struct EnergyReport {
  double epsilon = 0.0, delta = 0.0;
  E6Weights weights;
  std::vector<EnergyRow> rows;
  nlohmann::json to_json() const;
  io::CsvTable to_csv() const;
};

// E6 at every snapshot of a run started from the wave's Maxwellian. Tau
// derivatives are material derivatives from one-sided differences between
// adjacent snapshots (first order); y derivatives are second order.
EnergyReport energy_trace(const KineticTrajectory& run, const KineticConfig& config,
                          const ContactScenario& scenario, const E6Weights& weights = {});

struct GrowthCheck {
  bool pass = true;
  double slack = 5.0;
  double max_ratio = 0.0;     // E6 / ((E6(0) + delta)(1 + sqrt(eps) tau)^{1/2})
  double exponent = 0.0;      // fitted d log E6 / d log(1 + sqrt(eps) tau)
  bool exponent_fitted = false;
  nlohmann::json to_json() const;
};

// E6 values at or below `floor` count as zero (roundoff of an unperturbed run).
GrowthCheck growth_check(const EnergyReport& report, double slack = 5.0, double floor = 1e-20);

// ---- Pointwise errors ----

// Cell-wise matched Maxwellians of the inviscid contact: far-field states
// with the jump at X = 0.
DistributionField inviscid_reference(const ContactScenario& scenario, GridPtr grid, double x0,
                                     double dx, std::size_t n_cells);

// e(x) = int |f - M_ref|^2 / M* dxi per cell. Checks the M* window against
// the temperatures of the reference.
std::vector<double> pointwise_error_profile(const DistributionField& f,
                                            const DistributionField& reference,
                                            const Primitive& mstar);

// sup over |x| >= h of sqrt(e(x)).
double sup_error_away(std::span<const double> x, std::span<const double> e, double h);

// Fit log e = a - c eta^2 with eta = |x| / sqrt(eps (1 + t)) over eta in [lo, hi].
TailFit fit_error_tail(std::span<const double> x, std::span<const double> e, double epsilon,
                       double t, double lo = 1.0, double hi = 3.0);

// ---- Knudsen sweep ----

struct SweepOptions {
  std::vector<double> epsilons{0.1, 0.05, 0.025, 0.0125};
  double h = 0.5;
  double t_final = 2.5;
  std::vector<double> times{0.25, 0.5, 1.0, 2.0};  // plus h^2/eps capped at t_final
  GridPtr grid;
  std::size_t n_cells = 400;
  double x_half = 6.5;
  CollisionModel model;
  kernels::Limiter limiter = kernels::Limiter::Minmod;
  double noise = 0.05;      // relative tolerance of the monotonicity check
  bool energy = true;       // E6 trace per member
  nlohmann::json certification;  // reference to the certification the run relies on

  std::vector<double> snapshot_times(double epsilon) const;
  void validate() const;
  nlohmann::json to_json() const;
};

struct SweepMember {
  double epsilon = 0.0;
  std::vector<double> t, sup_error, max_error, sup_error_viscous;
  double sup_over_time = 0.0;      // max over t > 0
  double max_over_time = 0.0;
  double viscous_over_time = 0.0;
  std::uint64_t steps = 0;
  double seconds = 0.0;
  double max_mass_drift = 0.0;
  std::size_t max_negative = 0;
  EnergyReport energy;
  GrowthCheck growth;
  bool has_energy = false;
};

struct ConvergenceReport {
  double h = 0.0;
  std::vector<SweepMember> members;
  num::LinearFit fit;               // log sup error vs log eps
  num::LinearFit fit_whole_line;    // log whole-line max vs log eps
  bool degenerate = false;          // some error vanished (no rate)
  bool decreasing = false;          // within the noise tolerance
  bool strictly_decreasing = false; // without tolerance
  double noise = 0.05;
  SweepOptions options;

  nlohmann::json to_json() const;
  io::CsvTable to_csv() const;        // one row per epsilon
  io::CsvTable detail_csv() const;    // one row per (epsilon, t)
};

using SweepProgress = std::function<void(const SweepMember&)>;

// Runs one kinetic solve per epsilon from the wave's Maxwellian and reduces
// the errors. Members run one after another; each uses the threaded kernels.
ConvergenceReport convergence_sweep(const SweepOptions& options, const ContactScenario& scenario,
                                    const SweepProgress& progress = {});

// E6(0) checks: E6(0)/delta compared across two jump sizes at the first sweep
// epsilon, and E6(0) compared across two epsilons of the sweep.
struct EnergyScaling {
  double epsilon = 0.0;              // where the delta comparison is made
  double delta_high = 0.0, delta_low = 0.0;
  double e0_high = 0.0, e0_low = 0.0;
  double delta_ratio = 0.0;          // max/min of E6(0)/delta over the two deltas
  bool delta_ok = false;             // delta_ratio <= 2
  double eps_a = 0.0, eps_b = 0.0;
  double e0_a = 0.0, e0_b = 0.0;
  double eps_spread = 0.0;           // |E6_a - E6_b| / min(E6_a, E6_b)
  bool eps_ok = false;               // eps_spread <= 0.2
  nlohmann::json to_json() const;
};

// E6 at t = 0 for a run of the scenario, using the sweep's first snapshots
// for the tau differences.
double initial_energy(const SweepOptions& options, const ContactScenario& scenario,
                      double epsilon);

// Uses the sweep members for the delta_high values and the eps comparison;
// runs the delta_low scenario once at the first sweep epsilon.
EnergyScaling energy_scaling(const ConvergenceReport& sweep, const ContactScenario& high,
                             const ContactScenario& low, double eps_b = 0.025);

// Fit of log e against log eps; degenerate if any error is at or below
// `floor` (no rate can be read off roundoff).
num::LinearFit fit_rate(std::span<const double> epsilons, std::span<const double> errors,
                        bool* degenerate = nullptr, double floor = 1e-12);

}  // namespace kinlim
