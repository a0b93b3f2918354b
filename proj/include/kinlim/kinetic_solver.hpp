#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

#include <json.hpp>

#include "kinlim/collision.hpp"
#include "kinlim/contact_wave.hpp"
#include "kinlim/kernels/kinetic.hpp"
#include "kinlim/velocity_space.hpp"

namespace kinlim {

// Far-field states; the two ghost cells on each side hold their Maxwellians.
struct KineticBoundary {
  Primitive left, right;
};

struct KineticConfig {
  double epsilon = 0.1;
  GridPtr grid;
  std::size_t n_cells = 400;
  double x_half = 6.0;  // spatial domain [-x_half, x_half]
  CollisionModel model;
  double t_final = 1.0;
  std::vector<double> snapshots;  // t_final is always recorded
  double cfl = 0.9;
  kernels::Limiter limiter = kernels::Limiter::Minmod;
  int hs_refresh = 10;   // steps between rebuilds of the frozen hard-sphere operator
  int trace_every = 10;  // steps between microscopic-norm samples
  bool audit = false;    // record per-cell collision moment defects
  bool parallel = true;  // OpenMP kernels (serial reference otherwise)
  Primitive mstar;       // weight of the microscopic-norm trace

  double dx() const { return 2.0 * x_half / static_cast<double>(n_cells); }
  double x0() const { return -x_half + 0.5 * dx(); }
  void validate() const;
  nlohmann::json to_json() const;
};

// Cell-wise moment-matched Maxwellian of the wave state (initial layer free data).
DistributionField init_from_wave(const EulerianWave& wave, GridPtr grid, double x0, double dx,
                                 std::size_t n_cells);
DistributionField constant_maxwellian_field(const Primitive& state, GridPtr grid, double x0,
                                            double dx, std::size_t n_cells);

std::vector<Primitive> moment_fields(const DistributionField& f);
std::array<double, 3> kinetic_totals(const DistributionField& f);  // mass, momentum_1, energy

// sum_i dx sum_k w_k (f - M_i)^2 / M*, M_i the matched local Maxwellian of cell i.
double micro_norm(const DistributionField& f, std::span<const double> mstar_slice);

struct CollisionAudit {
  double max_relative_defect = 0.0;  // moments after vs before, relative to their scale
  std::uint64_t cells = 0;
};

// Advances f by one Strang step T(dt/2) C(dt) T(dt/2) and keeps the data a
// step needs between calls (ghost Maxwellians, frozen hard-sphere operators).
class KineticStepper {
 public:
  KineticStepper(const KineticConfig& config, const KineticBoundary& boundary);
  ~KineticStepper();
  KineticStepper(KineticStepper&&) noexcept;

  double max_dt() const;  // cfl * dx / max|xi_1|
  void step(DistributionField& f, double dt);

  const std::array<double, 3>& inflow() const { return inflow_; }  // cumulative boundary inflow
  double left_mass_inflow() const { return left_mass_inflow_; }
  const CollisionAudit& audit() const { return audit_; }
  const kernels::CollisionTally& tally() const { return tally_; }

 private:
  void transport(DistributionField& f, double tau);
  void collide(DistributionField& f, double dt);
  void collide_hard_sphere(DistributionField& f, double k);

  KineticConfig cfg_;
  std::vector<double> ghost_left_, ghost_right_, buffer_, flux_left_, flux_right_;
  std::array<double, 3> inflow_{};
  double left_mass_inflow_ = 0.0;
  CollisionAudit audit_;
  kernels::CollisionTally tally_;
  struct HardSphereCache;
  std::unique_ptr<HardSphereCache> hs_;
};

// One step on a field with the given far field (no state carried over).
void kinetic_step(DistributionField& f, double dt, const KineticConfig& config,
                  const KineticBoundary& boundary);

struct KineticSnapshot {
  double t = 0.0;
  DistributionField f;
  std::vector<Primitive> state;
  double left_mass_inflow = 0.0;  // mass that entered through the left boundary since t = 0
};

struct KineticLedgerEntry {
  double t = 0.0;
  std::array<double, 3> totals{}, inflow{}, drift{};
  double left_mass_inflow = 0.0;  // shifts the Lagrangian label of the left boundary
};

struct MicroTraceEntry {
  double t = 0.0;
  double micro_norm = 0.0;
};

struct KineticTrajectory {
  std::vector<KineticSnapshot> snapshots;
  std::vector<KineticLedgerEntry> ledger;
  std::vector<MicroTraceEntry> micro_trace;
  CollisionAudit audit;
  kernels::CollisionTally tally;
  std::uint64_t steps = 0;
  double dt = 0.0;
  std::size_t max_negative = 0;
  double seconds = 0.0;
  nlohmann::json ledger_json() const;
};

KineticTrajectory kinetic_run(const KineticConfig& config, const DistributionField& initial,
                              const KineticBoundary& boundary);

}  // namespace kinlim
