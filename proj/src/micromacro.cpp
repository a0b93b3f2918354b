#include "kinlim/micromacro.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kinlim/error.hpp"

namespace kinlim {

double MacroBasis::inner(std::span<const double> h, std::span<const double> g) const {
  double s = 0.0;
  for (std::size_t k = 0; k < h.size(); ++k) s += w_over_m[k] * h[k] * g[k];
  return s;
}

std::array<double, 5> MacroBasis::coefficients(std::span<const double> f) const {
  std::array<double, 5> c{};
  for (int j = 0; j < 5; ++j) c[j] = inner(f, chi[j]);
  return c;
}

MacroBasis build_basis_from_weight(const Primitive& params, const Primitive& physical,
                                   std::vector<double> weight, const VelocityGrid& grid) {
  require(params.rho > 0.0 && params.theta > 0.0, "build_basis: degenerate state");
  require(weight.size() == grid.size(), "build_basis: weight size mismatch");
  MacroBasis b;
  b.grid = &grid;
  b.state = physical;
  b.weight = std::move(weight);
  const std::size_t n = grid.size();
  b.w_over_m.resize(n);
  const auto w = grid.weights();
  for (std::size_t k = 0; k < n; ++k) {
    if (!(b.weight[k] > 0.0)) throw NumericalError("build_basis: weight underflows on the grid");
    b.w_over_m[k] = w[k] / b.weight[k];
  }

  const double rt = kGasConstant * params.theta;
  const double c0 = 1.0 / std::sqrt(params.rho);
  const double c1 = 1.0 / std::sqrt(rt * params.rho);
  const double c4 = 1.0 / std::sqrt(6.0 * params.rho);
  const auto x1 = grid.xi1(), x2 = grid.xi2(), x3 = grid.xi3();
  for (auto& v : b.chi) v.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double d1 = x1[k] - params.u[0], d2 = x2[k] - params.u[1], d3 = x3[k] - params.u[2];
    const double M = b.weight[k];
    b.chi[0][k] = c0 * M;
    b.chi[1][k] = c1 * d1 * M;
    b.chi[2][k] = c1 * d2 * M;
    b.chi[3][k] = c1 * d3 * M;
    b.chi[4][k] = c4 * ((d1 * d1 + d2 * d2 + d3 * d3) / rt - 3.0) * M;
  }

  double defect = 0.0;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      defect = std::max(defect, std::abs(b.inner(b.chi[i], b.chi[j]) - (i == j ? 1.0 : 0.0)));
  b.gram_defect_raw = defect;

  // Modified Gram-Schmidt, two sweeps.
  for (int sweep = 0; sweep < 2; ++sweep) {
    for (int j = 0; j < 5; ++j) {
      for (int i = 0; i < j; ++i) {
        const double c = b.inner(b.chi[j], b.chi[i]);
        for (std::size_t k = 0; k < n; ++k) b.chi[j][k] -= c * b.chi[i][k];
      }
      const double nrm = std::sqrt(b.inner(b.chi[j], b.chi[j]));
      if (!(nrm > 1e-8)) throw NumericalError("build_basis: basis is degenerate on this grid");
      for (std::size_t k = 0; k < n; ++k) b.chi[j][k] /= nrm;
    }
  }
  return b;
}

MacroBasis build_basis(const Primitive& state, const VelocityGrid& grid) {
  require(state.rho > 0.0 && state.theta > 0.0, "build_basis: rho and theta must be positive");
  return build_basis_from_weight(state, state, maxwellian(state, grid), grid);
}

MacroBasis build_local_basis(std::span<const double> f, const VelocityGrid& grid) {
  const FluidMoments m = moments(f, grid);
  std::vector<double> w(grid.size());
  const MatchedMaxwellian mm = match_maxwellian(m, grid, w);
  return build_basis_from_weight(mm.params, mm.physical, std::move(w), grid);
}

void apply_p0(std::span<const double> h, const MacroBasis& basis, std::span<double> out) {
  const auto c = basis.coefficients(h);
  const std::size_t n = h.size();
  for (std::size_t k = 0; k < n; ++k) {
    double s = 0.0;
    for (int j = 0; j < 5; ++j) s += c[j] * basis.chi[j][k];
    out[k] = s;
  }
}

void apply_p1(std::span<const double> h, const MacroBasis& basis, std::span<double> out) {
  const auto c = basis.coefficients(h);
  const std::size_t n = h.size();
  for (std::size_t k = 0; k < n; ++k) {
    double s = 0.0;
    for (int j = 0; j < 5; ++j) s += c[j] * basis.chi[j][k];
    out[k] = h[k] - s;
  }
}

std::vector<double> apply_p0(std::span<const double> h, const MacroBasis& basis) {
  std::vector<double> out(h.size());
  apply_p0(h, basis, out);
  return out;
}

std::vector<double> apply_p1(std::span<const double> h, const MacroBasis& basis) {
  std::vector<double> out(h.size());
  apply_p1(h, basis, out);
  return out;
}

MicroMacroSplit project(std::span<const double> f, const MacroBasis& basis) {
  require(f.size() == basis.weight.size(), "project: slice size mismatch");
  const Primitive s = primitive_from_conserved(moments(f, *basis.grid));
  const Primitive& b = basis.state;
  const double sc = std::sqrt(b.theta);
  const double mis = std::max({std::abs(s.rho - b.rho) / b.rho, std::abs(s.u[0] - b.u[0]) / sc,
                               std::abs(s.u[1] - b.u[1]) / sc, std::abs(s.u[2] - b.u[2]) / sc,
                               std::abs(s.theta - b.theta) / b.theta});
  if (mis > 1e-6) {
    std::ostringstream os;
    os << "project: basis state differs from slice moments (relative mismatch " << mis << ")";
    throw PreconditionError(os.str());
  }
  MicroMacroSplit out;
  out.macro = apply_p0(f, basis);
  out.micro.resize(f.size());
  for (std::size_t k = 0; k < f.size(); ++k) out.micro[k] = f[k] - out.macro[k];
  return out;
}

double weighted_inner(std::span<const double> h, std::span<const double> g,
                      std::span<const double> weight, const VelocityGrid& grid) {
  require(h.size() == grid.size() && g.size() == grid.size() && weight.size() == grid.size(),
          "weighted_inner: shape mismatch");
  const auto w = grid.weights();
  double s = 0.0;
  for (std::size_t k = 0; k < h.size(); ++k) {
    if (!(weight[k] > 0.0)) throw PreconditionError("weighted_inner: weight must be positive");
    s += w[k] * h[k] * g[k] / weight[k];
  }
  return s;
}

double weighted_l2_error(std::span<const double> f, std::span<const double> ref,
                         std::span<const double> mstar, const VelocityGrid& grid) {
  require(f.size() == grid.size() && ref.size() == grid.size() && mstar.size() == grid.size(),
          "weighted_l2_error: shape mismatch");
  const auto w = grid.weights();
  double s = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (!(mstar[k] > 0.0)) throw PreconditionError("weighted_l2_error: M* must be positive");
    const double d = f[k] - ref[k];
    s += w[k] * d * d / mstar[k];
  }
  return s;
}

Primitive default_mstar(double rho_minus, double rho_plus, double theta_minus,
                        double theta_plus) {
  Primitive p;
  p.rho = 0.5 * (rho_minus + rho_plus);
  p.u = {0.0, 0.0, 0.0};
  p.theta = 0.9 * std::min(theta_minus, theta_plus);
  return p;
}

bool mstar_window_ok(double theta_star, double theta_lo, double theta_hi) {
  return theta_star < theta_lo && theta_star > 0.5 * theta_hi;
}

void check_mstar_window(double theta_star, double theta_lo, double theta_hi,
                        const std::string& key) {
  if (!mstar_window_ok(theta_star, theta_lo, theta_hi)) {
    std::ostringstream os;
    os << key << ": global Maxwellian temperature window violated: need theta/2 < theta* < theta"
       << " for every theta in [" << theta_lo << ", " << theta_hi << "], got theta* = "
       << theta_star;
    throw PreconditionError(os.str());
  }
}

}  // namespace kinlim
