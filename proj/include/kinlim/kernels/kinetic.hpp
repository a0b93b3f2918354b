#pragma once

#include <span>
#include <vector>

#include "kinlim/velocity_space.hpp"

// Per-substep kernels of the kinetic solver. Data is cell-major, f[cell][k].
namespace kinlim::kernels {

enum class Limiter { Upwind, Minmod };

struct TransportArgs {
  std::size_t n_cells = 0;
  std::size_t n_vel = 0;
  std::span<const double> xi1;          // n_vel
  double nu = 0.0;                      // dt / dx
  Limiter limiter = Limiter::Minmod;
  std::span<const double> ghost_left;   // cells -2, -1 (2 * n_vel)
  std::span<const double> ghost_right;  // cells n, n+1 (2 * n_vel)
};

// Flux-form update f_out = f_in - (F_{i+1/2} - F_{i-1/2}). The face fluxes
// at the two domain boundaries (per velocity, in units of f) are returned for
// the conservation ledger.
namespace serial {
void transport(const TransportArgs& a, std::span<const double> f_in, std::span<double> f_out,
               std::span<double> flux_left, std::span<double> flux_right);
// f <- M + (f - M) * decay per cell, M the moment-matched discrete Maxwellian.
void bgk_relax(const VelocityGrid& grid, std::size_t n_cells, double decay, std::span<double> f);
}  // namespace serial

namespace omp {
void transport(const TransportArgs& a, std::span<const double> f_in, std::span<double> f_out,
               std::span<double> flux_left, std::span<double> flux_right);
void bgk_relax(const VelocityGrid& grid, std::size_t n_cells, double decay, std::span<double> f);
}  // namespace omp

}  // namespace kinlim::kernels
