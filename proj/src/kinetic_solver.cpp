#include "kinlim/kinetic_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "kinlim/error.hpp"
#include "kinlim/micromacro.hpp"

namespace kinlim {

namespace {

std::array<double, 5> moment_vector(std::span<const double> f, const VelocityGrid& grid) {
  const auto m = moments(f, grid);
  return {m.rho, m.m[0], m.m[1], m.m[2], m.energy};
}

const char* limiter_name(kernels::Limiter l) {
  return l == kernels::Limiter::Minmod ? "minmod" : "upwind";
}

}  // namespace

void KineticConfig::validate() const {
  require(epsilon > 0.0, "kinetic.epsilon: must be positive");
  require(static_cast<bool>(grid), "kinetic.grid: velocity grid missing");
  require(n_cells >= 4, "kinetic.n_cells: at least 4 cells required");
  require(x_half > 0.0, "kinetic.x_half: must be positive");
  require(t_final >= 0.0, "kinetic.t_final: must be nonnegative");
  for (double t : snapshots)
    require(t >= 0.0 && t <= t_final, "kinetic.snapshots: times must lie in [0, t_final]");
  require(cfl > 0.0 && cfl <= 1.0, "kinetic.cfl: must lie in (0, 1]");
  require(hs_refresh >= 1, "kinetic.hs_refresh: must be at least 1");
  require(trace_every >= 1, "kinetic.trace_every: must be at least 1");
  require(mstar.rho > 0.0 && mstar.theta > 0.0, "kinetic.mstar: rho and theta must be positive");
  model.validate();
}

nlohmann::json KineticConfig::to_json() const {
  nlohmann::json j;
  j["epsilon"] = epsilon;
  j["n_cells"] = n_cells;
  j["x_half"] = x_half;
  j["dx"] = dx();
  j["model"] = model.to_json();
  j["t_final"] = t_final;
  j["snapshots"] = snapshots;
  j["cfl"] = cfl;
  j["limiter"] = limiter_name(limiter);
  j["hs_refresh"] = hs_refresh;
  j["trace_every"] = trace_every;
  j["mstar"] = {{"rho", mstar.rho}, {"theta", mstar.theta}};
  if (grid) j["velocity_grid"] = grid->metadata();
  return j;
}

DistributionField init_from_wave(const EulerianWave& wave, GridPtr grid, double x0, double dx,
                                 std::size_t n_cells) {
  require(static_cast<bool>(grid), "init_from_wave: velocity grid missing");
  DistributionField f(grid, x0, dx, n_cells, Frame::Eulerian);
  for (std::size_t i = 0; i < n_cells; ++i) {
    const Primitive st = wave.sample(f.x(i));
    require(st.rho > 0.0 && st.theta > 0.0, "init_from_wave: invalid wave state");
    match_maxwellian(conserved_from_primitive(st), *grid, f.cell(i));
  }
  return f;
}

DistributionField constant_maxwellian_field(const Primitive& state, GridPtr grid, double x0,
                                            double dx, std::size_t n_cells) {
  DistributionField f(grid, x0, dx, n_cells, Frame::Eulerian);
  std::vector<double> M(grid->size());
  match_maxwellian(conserved_from_primitive(state), *grid, M);
  for (std::size_t i = 0; i < n_cells; ++i) std::copy(M.begin(), M.end(), f.cell(i).begin());
  return f;
}

std::vector<Primitive> moment_fields(const DistributionField& f) {
  std::vector<Primitive> out(f.n_cells);
  for (std::size_t i = 0; i < f.n_cells; ++i)
    out[i] = primitive_from_conserved(moments(f.cell(i), *f.grid));
  return out;
}

std::array<double, 3> kinetic_totals(const DistributionField& f) {
  std::array<double, 3> t{};
  for (std::size_t i = 0; i < f.n_cells; ++i) {
    const auto m = moments(f.cell(i), *f.grid);
    t[0] += m.rho;
    t[1] += m.m[0];
    t[2] += m.energy;
  }
  for (double& a : t) a *= f.dx;
  return t;
}

double micro_norm(const DistributionField& f, std::span<const double> mstar_slice) {
  const auto& grid = *f.grid;
  require(mstar_slice.size() == grid.size(), "micro_norm: M* size mismatch");
  std::vector<double> per(f.n_cells);
#pragma omp parallel
  {
    std::vector<double> M(grid.size());
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(f.n_cells); ++i) {
      const auto c = f.cell(static_cast<std::size_t>(i));
      match_maxwellian(moments(c, grid), grid, M);
      per[i] = weighted_l2_error(c, M, mstar_slice, grid);
    }
  }
  double s = 0.0;
  for (double v : per) s += v;
  return s * f.dx;
}

struct KineticStepper::HardSphereCache {
  struct Cell {
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
    double k = -1.0;
    int age = 0;
  };
  HardSphereOperator op;
  std::vector<Cell> cells;
  HardSphereCache(GridPtr grid, const CollisionModel& m, std::size_t n)
      : op(std::move(grid), m.n_polar, m.n_azimuth), cells(n) {}
};

KineticStepper::KineticStepper(const KineticConfig& config, const KineticBoundary& boundary)
    : cfg_(config) {
  cfg_.validate();
  const auto& grid = *cfg_.grid;
  const std::size_t nv = grid.size();
  std::vector<double> M(nv);
  ghost_left_.resize(2 * nv);
  ghost_right_.resize(2 * nv);
  match_maxwellian(conserved_from_primitive(boundary.left), grid, M);
  std::copy(M.begin(), M.end(), ghost_left_.begin());
  std::copy(M.begin(), M.end(), ghost_left_.begin() + static_cast<std::ptrdiff_t>(nv));
  match_maxwellian(conserved_from_primitive(boundary.right), grid, M);
  std::copy(M.begin(), M.end(), ghost_right_.begin());
  std::copy(M.begin(), M.end(), ghost_right_.begin() + static_cast<std::ptrdiff_t>(nv));
  flux_left_.resize(nv);
  flux_right_.resize(nv);
  if (cfg_.model.kind == CollisionKind::HardSphere)
    hs_ = std::make_unique<HardSphereCache>(cfg_.grid, cfg_.model, cfg_.n_cells);
}

KineticStepper::~KineticStepper() = default;
KineticStepper::KineticStepper(KineticStepper&&) noexcept = default;

double KineticStepper::max_dt() const {
  return cfg_.cfl * cfg_.dx() / cfg_.grid->max_abs_xi1();
}

void KineticStepper::step(DistributionField& f, double dt) {
  require(f.grid == cfg_.grid && f.n_cells == cfg_.n_cells,
          "kinetic.field: distribution does not match the configured grids");
  if (!(dt > 0.0) || dt > max_dt() * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "kinetic.dt: " << dt << " violates the CFL limit " << max_dt();
    throw PreconditionError(os.str());
  }
  transport(f, 0.5 * dt);
  collide(f, dt);
  transport(f, 0.5 * dt);
}

void KineticStepper::transport(DistributionField& f, double tau) {
  const auto& grid = *cfg_.grid;
  const std::size_t nv = grid.size();
  kernels::TransportArgs a;
  a.n_cells = f.n_cells;
  a.n_vel = nv;
  a.xi1 = grid.xi1();
  a.nu = tau / f.dx;
  a.limiter = cfg_.limiter;
  a.ghost_left = ghost_left_;
  a.ghost_right = ghost_right_;
  buffer_.resize(f.values.size());
  if (cfg_.parallel)
    kernels::omp::transport(a, f.values, buffer_, flux_left_, flux_right_);
  else
    kernels::serial::transport(a, f.values, buffer_, flux_left_, flux_right_);
  f.values.swap(buffer_);
  const auto w = grid.weights();
  const auto x1 = grid.xi1(), x2 = grid.xi2(), x3 = grid.xi3();
  for (std::size_t k = 0; k < nv; ++k) {
    left_mass_inflow_ += w[k] * flux_left_[k] * f.dx;
    const double net = w[k] * (flux_left_[k] - flux_right_[k]) * f.dx;
    inflow_[0] += net;
    inflow_[1] += net * x1[k];
    inflow_[2] += net * 0.5 * (x1[k] * x1[k] + x2[k] * x2[k] + x3[k] * x3[k]);
  }
}

void KineticStepper::collide(DistributionField& f, double dt) {
  const auto& grid = *cfg_.grid;
  std::vector<std::array<double, 5>> before;
  if (cfg_.audit) {
    before.resize(f.n_cells);
    for (std::size_t i = 0; i < f.n_cells; ++i) before[i] = moment_vector(f.cell(i), grid);
  }
  if (cfg_.model.kind == CollisionKind::BGK) {
    const double decay = std::exp(-cfg_.model.nu0 * dt / cfg_.epsilon);
    if (cfg_.parallel)
      kernels::omp::bgk_relax(grid, f.n_cells, decay, f.values);
    else
      kernels::serial::bgk_relax(grid, f.n_cells, decay, f.values);
  } else {
    collide_hard_sphere(f, dt / cfg_.epsilon);
  }
  if (cfg_.audit) {
    for (std::size_t i = 0; i < f.n_cells; ++i) {
      const auto after = moment_vector(f.cell(i), grid);
      double scale = 0.0, d = 0.0;
      for (int q = 0; q < 5; ++q) {
        scale = std::max(scale, std::abs(before[i][q]));
        d = std::max(d, std::abs(after[q] - before[i][q]));
      }
      audit_.max_relative_defect = std::max(audit_.max_relative_defect, d / scale);
    }
    audit_.cells += f.n_cells;
  }
}

// Backward Euler on the frozen linearization plus the explicit quadratic
// remainder: (I - k L) G_new = G + k Q(G, G), then the macroscopic part of
// G_new is removed so the cell moments are untouched.
void KineticStepper::collide_hard_sphere(DistributionField& f, double k) {
  const auto& grid = *cfg_.grid;
  const std::size_t nv = grid.size();
  std::vector<double> M(nv), G(nv);
  Eigen::VectorXd rhs(nv);
  for (std::size_t i = 0; i < f.n_cells; ++i) {
    auto s = f.cell(i);
    const auto mm = match_maxwellian(moments(s, grid), grid, M);
    for (std::size_t q = 0; q < nv; ++q) G[q] = s[q] - M[q];
    auto& cell = hs_->cells[i];
    if (cell.k != k || cell.age <= 0) {
      const auto L = build_linearized(mm.physical, cfg_.grid, cfg_.model);
      const auto dense = L.dense();
      Eigen::MatrixXd A = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(nv),
                                                    static_cast<Eigen::Index>(nv));
      for (std::size_t r = 0; r < nv; ++r)
        for (std::size_t c = 0; c < nv; ++c) A(r, c) -= k * dense[r * nv + c];
      cell.lu.compute(A);
      cell.k = k;
      cell.age = cfg_.hs_refresh;
    }
    --cell.age;
    kernels::CollisionTally t;
    const auto Q2 = hs_->op.collide(G, G, M, &t);
    tally_.kept += t.kept;
    tally_.dropped += t.dropped;
    tally_.kept_loss += t.kept_loss;
    tally_.total_loss += t.total_loss;
    for (std::size_t q = 0; q < nv; ++q) rhs[static_cast<Eigen::Index>(q)] = G[q] + k * Q2[q];
    const Eigen::VectorXd g = cell.lu.solve(rhs);
    std::vector<double> Gn(g.data(), g.data() + nv);
    const auto basis = build_basis_from_weight(mm.params, mm.physical, M, grid);
    conservation_correction(Gn, basis);
    for (std::size_t q = 0; q < nv; ++q) s[q] = M[q] + Gn[q];
  }
}

void kinetic_step(DistributionField& f, double dt, const KineticConfig& config,
                  const KineticBoundary& boundary) {
  KineticStepper(config, boundary).step(f, dt);
}

nlohmann::json KineticTrajectory::ledger_json() const {
  nlohmann::json j;
  j["steps"] = steps;
  j["dt"] = dt;
  j["quantities"] = {"mass", "momentum_1", "energy"};
  auto& arr = j["entries"] = nlohmann::json::array();
  for (const auto& e : ledger)
    arr.push_back({{"t", e.t},
                   {"totals", e.totals},
                   {"inflow", e.inflow},
                   {"drift", e.drift},
                   {"left_mass_inflow", e.left_mass_inflow}});
  auto& tr = j["micro_trace"] = nlohmann::json::array();
  for (const auto& m : micro_trace) tr.push_back({{"t", m.t}, {"micro_norm", m.micro_norm}});
  j["collision_audit"] = {{"max_relative_defect", audit.max_relative_defect},
                          {"cells", audit.cells}};
  j["gain_tally"] = {{"kept", tally.kept},
                     {"dropped", tally.dropped},
                     {"dropped_fraction", tally.dropped_fraction()}};
  j["max_negative_entries"] = max_negative;
  j["seconds"] = seconds;
  return j;
}

KineticTrajectory kinetic_run(const KineticConfig& config, const DistributionField& initial,
                              const KineticBoundary& boundary) {
  const auto t0 = std::chrono::steady_clock::now();
  config.validate();
  require(initial.grid == config.grid && initial.n_cells == config.n_cells &&
              std::abs(initial.dx - config.dx()) <= 1e-12 * config.dx(),
          "kinetic.initial: field does not match the configured grids");
  KineticStepper stepper(config, boundary);
  std::vector<double> mstar(config.grid->size());
  maxwellian_into(config.mstar, *config.grid, mstar);

  std::vector<double> targets(config.snapshots);
  targets.push_back(config.t_final);
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());

  KineticTrajectory out;
  out.dt = stepper.max_dt();
  DistributionField f = initial;
  double t = 0.0;
  const auto totals0 = kinetic_totals(f);
  auto trace = [&]() { out.micro_trace.push_back({t, micro_norm(f, mstar)}); };
  trace();
  for (double target : targets) {
    const double tol = 1e-12 * std::max(1.0, target);
    while (t < target - tol) {
      double dt = out.dt;
      if (t + dt > target - tol) dt = target - t;
      stepper.step(f, dt);
      t += dt;
      ++out.steps;
      out.max_negative = std::max(out.max_negative, f.negative_count());
      if (out.steps % static_cast<std::uint64_t>(config.trace_every) == 0) trace();
    }
    t = std::max(t, target);
    if (out.micro_trace.back().t != t) trace();
    KineticLedgerEntry e;
    e.t = t;
    e.totals = kinetic_totals(f);
    e.inflow = stepper.inflow();
    e.left_mass_inflow = stepper.left_mass_inflow();
    for (int q = 0; q < 3; ++q) e.drift[q] = e.totals[q] - totals0[q] - e.inflow[q];
    out.ledger.push_back(e);
    out.snapshots.push_back({t, f, moment_fields(f), stepper.left_mass_inflow()});
  }
  out.audit = stepper.audit();
  out.tally = stepper.tally();
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace kinlim
