#pragma once

#include <array>
#include <span>
#include <vector>

#include "kinlim/velocity_space.hpp"

namespace kinlim {

// Five-dimensional macroscopic basis, orthonormal in <h,g>_M = sum w h g / M.
struct MacroBasis {
  const VelocityGrid* grid = nullptr;
  Primitive state;                  // fluid state the basis represents
  std::vector<double> weight;       // M
  std::vector<double> w_over_m;     // quadrature weight / M
  std::array<std::vector<double>, 5> chi;
  double gram_defect_raw = 0.0;     // max |G - I| of the analytic chi before Gram-Schmidt

  double inner(std::span<const double> h, std::span<const double> g) const;
  std::array<double, 5> coefficients(std::span<const double> f) const;
};

// Basis around the analytic Maxwellian of `state`.
MacroBasis build_basis(const Primitive& state, const VelocityGrid& grid);
// Basis around a caller-supplied weight; `params` are the Maxwellian
// parameters used for the chi formulas.
MacroBasis build_basis_from_weight(const Primitive& params, const Primitive& physical,
                                   std::vector<double> weight, const VelocityGrid& grid);
// Basis around the discrete Maxwellian whose moments match those of f.
MacroBasis build_local_basis(std::span<const double> f, const VelocityGrid& grid);

struct MicroMacroSplit {
  std::vector<double> macro;
  std::vector<double> micro;
};

MicroMacroSplit project(std::span<const double> f, const MacroBasis& basis);

// Raw projections with no state check (for arbitrary h, not a distribution).
void apply_p0(std::span<const double> h, const MacroBasis& basis, std::span<double> out);
void apply_p1(std::span<const double> h, const MacroBasis& basis, std::span<double> out);
std::vector<double> apply_p0(std::span<const double> h, const MacroBasis& basis);
std::vector<double> apply_p1(std::span<const double> h, const MacroBasis& basis);

double weighted_inner(std::span<const double> h, std::span<const double> g,
                      std::span<const double> weight, const VelocityGrid& grid);
double weighted_l2_error(std::span<const double> f, std::span<const double> ref,
                         std::span<const double> mstar, const VelocityGrid& grid);

// Run-wide global Maxwellian used in the weighted error norms.
Primitive default_mstar(double rho_minus, double rho_plus, double theta_minus, double theta_plus);
// theta/2 < theta_star < theta for every theta in [theta_lo, theta_hi].
bool mstar_window_ok(double theta_star, double theta_lo, double theta_hi);
void check_mstar_window(double theta_star, double theta_lo, double theta_hi,
                        const std::string& key);

}  // namespace kinlim
