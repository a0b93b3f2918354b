#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "kinlim/collision.hpp"
#include "kinlim/diagnostics.hpp"
#include "kinlim/scenario.hpp"

namespace kinlim {

struct GridSpec {
  std::array<int, 3> counts{16, 12, 12};
  double extent = 6.0;
  double theta_max = 1.2;
  GridPtr build() const;
};

struct WaveBlock {
  double epsilon = 0.01;
  std::vector<double> times{0.0, 0.5, 1.0};
  double x_half = 3.0;  // Lagrangian window
  std::size_t n_x = 601;
};

struct CertifyBlock {
  Primitive state{1.0, {0.0, 0.0, 0.0}, 1.0};
  double rho_star = 1.0, theta_star = 0.85;
  int trials = 100;
  int q_trials = 4;
  GridSpec grid;
};

struct KineticBlock {
  double epsilon = 0.05;
  std::size_t n_cells = 400;
  double x_half = 6.5;
  double t_final = 1.0;
  std::vector<double> snapshots{0.0, 0.25, 0.5, 1.0};
  double cfl = 0.9;
  kernels::Limiter limiter = kernels::Limiter::Minmod;
  double h = 0.5;
  bool write_snapshots = true;
  bool energy = true;
};

struct FluidBlock {
  double epsilon = 0.01;
  std::size_t n_cells = 800;
  double x_half = 4.0;
  double t_final = 1.0;
  std::vector<double> snapshots{0.25, 0.5, 1.0};
  double cfl = 0.9;
};

// Fully resolved, validated configuration of one CLI run.
struct RunConfig {
  std::string subcommand;
  std::uint64_t seed = 20240611;
  ScenarioOptions scenario;
  bool explicit_mstar = false;
  Primitive mstar;  // used when explicit_mstar
  CollisionModel model;
  GridSpec grid;
  WaveBlock wave;
  CertifyBlock certify;
  KineticBlock kinetic;
  FluidBlock fluid;
  SweepOptions sweep;  // grid and model filled from the shared blocks
  double energy_delta_low = 0.1;  // second jump size for the E6(0) scaling check

  nlohmann::json resolved;  // every key with its value, defaults included

  std::string hash() const;  // FNV-1a of the resolved document
  ContactScenario make_scenario(GridPtr grid = nullptr) const;
};

// Complete document of defaults; a config file may only use these keys.
nlohmann::json default_config();

// Merge `file` over the defaults, apply `overrides` (dotted key -> JSON value),
// validate every block and materialize the typed view. Errors name the key.
RunConfig resolve_config(const std::string& subcommand, const nlohmann::json& file,
                         const std::vector<std::pair<std::string, nlohmann::json>>& overrides = {},
                         std::uint64_t seed = 20240611);

}  // namespace kinlim
