#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "kinlim/contact_wave.hpp"
#include "kinlim/velocity_space.hpp"

namespace kinlim {

struct FluidBoundary {
  double v = 1.0, theta = 1.0;  // velocity is zero at both far fields
};

// Cell-centred Lagrangian state of the epsilon-order limit system.
struct FluidField {
  Frame frame = Frame::Lagrangian;
  std::vector<double> x;  // uniform cell centres
  double dx = 0.0;
  double t = 0.0, epsilon = 0.0;
  std::vector<double> v, u1, u2, u3, theta;
  FluidBoundary left, right;
  ScalarFn mu, lambda;

  std::size_t size() const { return x.size(); }
  void validate() const;
};

FluidField fluid_from_wave(const ContactWaveField& wave, const SelfSimilarProfile& profile,
                           ScalarFn mu, ScalarFn lambda);
// Riemann data with the jump replaced by a tanh ramp `width_cells` cells wide.
FluidField fluid_from_riemann(const RiemannContact& rc, std::vector<double> x, double epsilon,
                              double width_cells, ScalarFn mu, ScalarFn lambda);

// Sums over cells times dx of (v, u1, theta + |u|^2/2).
std::array<double, 3> fluid_totals(const FluidField& s);

// Largest dt allowed by the diffusive and acoustic limits.
double max_stable_dt(const FluidField& s);

// Net inflow through the two boundaries during one step, same order as fluid_totals.
struct FluidStepFlux {
  std::array<double, 3> inflow{};
};

// One Strang step D(dt/2) H(dt) D(dt/2): H is central differencing with SSP-RK3,
// D is Crank-Nicolson with predictor-corrector coefficients.
void ns_step(FluidField& s, double dt, FluidStepFlux* flux = nullptr);

struct FluidLedgerEntry {
  double t = 0.0;
  std::array<double, 3> totals{}, inflow{}, drift{};
};

struct FluidLedger {
  std::vector<FluidLedgerEntry> entries;
  double max_step_drift = 0.0;
  std::uint64_t steps = 0;
  nlohmann::json to_json() const;
};

struct WaveDeviation {
  double t = 0.0;
  double v = 0.0, u1 = 0.0, theta = 0.0;
  double max() const { return std::max(v, std::max(u1, theta)); }
};

struct FluidRunConfig {
  double t_final = 0.0;
  std::vector<double> snapshots;  // t_final is always recorded
  double cfl = 0.9;               // fraction of max_stable_dt
  double dt = 0.0;                // fixed step if positive
  const SelfSimilarProfile* reference = nullptr;  // deviation from the evolving wave
};

struct FluidTrajectory {
  std::vector<FluidField> snapshots;
  std::vector<WaveDeviation> deviation;
  FluidLedger ledger;
};

FluidTrajectory ns_run(const FluidField& initial, const FluidRunConfig& config);

WaveDeviation deviation_from_wave(const FluidField& s, const SelfSimilarProfile& profile);

}  // namespace kinlim
