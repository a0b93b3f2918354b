#include "kinlim/velocity_space.hpp"

#include <cmath>
#include <numbers>

#include "kinlim/error.hpp"

namespace kinlim {

std::shared_ptr<const VelocityGrid> VelocityGrid::build(std::array<int, 3> counts,
                                                        double extent_multiplier,
                                                        double theta_max) {
  for (int a = 0; a < 3; ++a)
    require(counts[a] >= 8, "velocity grid: counts[" + std::to_string(a) + "] must be >= 8");
  require(theta_max > 0.0, "velocity grid: theta_max must be positive");
  require(extent_multiplier >= 4.0, "velocity grid: extent_multiplier must be >= 4");

  auto g = std::make_shared<VelocityGrid>();
  g->counts_ = counts;
  g->extent_multiplier_ = extent_multiplier;
  g->theta_max_ = theta_max;
  const double half = extent_multiplier * std::sqrt(kGasConstant * theta_max);
  for (int a = 0; a < 3; ++a) {
    g->half_width_[a] = half;
    g->spacing_[a] = 2.0 * half / (counts[a] - 1);
  }

  std::array<std::vector<double>, 3> wa;
  for (int a = 0; a < 3; ++a) {
    wa[a].assign(counts[a], g->spacing_[a]);
    wa[a].front() *= 0.5;
    wa[a].back() *= 0.5;
  }
  const std::size_t n = static_cast<std::size_t>(counts[0]) * counts[1] * counts[2];
  g->xi1_.resize(n);
  g->xi2_.resize(n);
  g->xi3_.resize(n);
  g->w_.resize(n);
  for (int i = 0; i < counts[0]; ++i)
    for (int j = 0; j < counts[1]; ++j)
      for (int k = 0; k < counts[2]; ++k) {
        const std::size_t idx = g->index(i, j, k);
        g->xi1_[idx] = g->axis_node(0, i);
        g->xi2_[idx] = g->axis_node(1, j);
        g->xi3_[idx] = g->axis_node(2, k);
        g->w_[idx] = wa[0][i] * wa[1][j] * wa[2][k];
      }
  // Exact symmetry: the midpoint of an odd axis is 0, and mirrored nodes are
  // negatives of each other bit-for-bit.
  for (std::size_t idx = 0; idx < n; ++idx) {
    for (auto* v : {&g->xi1_, &g->xi2_, &g->xi3_})
      if (std::abs((*v)[idx]) < 1e-14 * half) (*v)[idx] = 0.0;
  }
  const auto& c = g->counts_;
  for (int i = 0; i < c[0]; ++i)
    for (int j = 0; j < c[1]; ++j)
      for (int k = 0; k < c[2]; ++k) {
        const std::size_t a = g->index(i, j, k);
        const std::size_t b = g->index(c[0] - 1 - i, c[1] - 1 - j, c[2] - 1 - k);
        if (a < b) {
          g->xi1_[b] = -g->xi1_[a];
          g->xi2_[b] = -g->xi2_[a];
          g->xi3_[b] = -g->xi3_[a];
        }
      }
  return g;
}

double VelocityGrid::volume() const {
  return 8.0 * half_width_[0] * half_width_[1] * half_width_[2];
}

nlohmann::json VelocityGrid::metadata() const {
  return {{"counts", counts_},
          {"half_width", half_width_},
          {"spacing", spacing_},
          {"extent_multiplier", extent_multiplier_},
          {"theta_max", theta_max_},
          {"rule", rule_name()},
          {"gas_constant", kGasConstant}};
}

void maxwellian_into(const Primitive& s, const VelocityGrid& grid, std::span<double> out) {
  require(s.rho > 0.0, "maxwellian: rho must be positive");
  require(s.theta > 0.0, "maxwellian: theta must be positive");
  require(out.size() == grid.size(), "maxwellian: output size mismatch");
  const double rt = kGasConstant * s.theta;
  const double pref = s.rho / std::sqrt(std::pow(2.0 * std::numbers::pi * rt, 3));
  const double inv = 1.0 / (2.0 * rt);
  const auto x1 = grid.xi1(), x2 = grid.xi2(), x3 = grid.xi3();
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double a = x1[k] - s.u[0], b = x2[k] - s.u[1], c = x3[k] - s.u[2];
    out[k] = pref * std::exp(-(a * a + b * b + c * c) * inv);
  }
}

std::vector<double> maxwellian(const Primitive& s, const VelocityGrid& grid) {
  std::vector<double> out(grid.size());
  maxwellian_into(s, grid, out);
  return out;
}

FluidMoments moments(std::span<const double> f, const VelocityGrid& grid) {
  require(f.size() == grid.size(), "moments: slice size does not match velocity grid");
  const auto x1 = grid.xi1(), x2 = grid.xi2(), x3 = grid.xi3(), w = grid.weights();
  double r = 0, m1 = 0, m2 = 0, m3 = 0, e = 0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double wf = w[k] * f[k];
    r += wf;
    m1 += wf * x1[k];
    m2 += wf * x2[k];
    m3 += wf * x3[k];
    e += wf * 0.5 * (x1[k] * x1[k] + x2[k] * x2[k] + x3[k] * x3[k]);
  }
  return {r, {m1, m2, m3}, e};
}

Primitive primitive_from_conserved(const FluidMoments& m) {
  if (!(m.rho > 0.0)) throw PreconditionError("primitive_from_conserved: rho must be positive");
  Primitive p;
  p.rho = m.rho;
  double u2 = 0.0;
  for (int a = 0; a < 3; ++a) {
    p.u[a] = m.m[a] / m.rho;
    u2 += p.u[a] * p.u[a];
  }
  p.theta = m.energy / m.rho - 0.5 * u2;
  if (!(p.theta > 0.0))
    throw PreconditionError("primitive_from_conserved: internal energy is not positive");
  return p;
}

FluidMoments conserved_from_primitive(const Primitive& p) {
  FluidMoments m;
  m.rho = p.rho;
  double u2 = 0.0;
  for (int a = 0; a < 3; ++a) {
    m.m[a] = p.rho * p.u[a];
    u2 += p.u[a] * p.u[a];
  }
  m.energy = p.rho * (p.theta + 0.5 * u2);
  return m;
}

MatchedMaxwellian match_maxwellian(const FluidMoments& target, const VelocityGrid& grid,
                                   std::span<double> out) {
  MatchedMaxwellian r;
  r.physical = primitive_from_conserved(target);
  r.params = r.physical;
  const double scale =
      std::abs(target.rho) + std::abs(target.m[0]) + std::abs(target.m[1]) +
      std::abs(target.m[2]) + std::abs(target.energy);
  // Fixed point on the quadrature defect: the discrete moment map differs from
  // the analytic one by a smooth O(tol_quad) perturbation, so each pass gains
  // roughly -log10(tol_quad) digits (six on the default grids, fewer on coarse ones).
  Primitive best = r.params;
  double best_err = INFINITY;
  for (int it = 0; it < 30; ++it) {
    maxwellian_into(r.params, grid, out);
    const FluidMoments d = moments(out, grid);
    const FluidMoments err{d.rho - target.rho,
                           {d.m[0] - target.m[0], d.m[1] - target.m[1], d.m[2] - target.m[2]},
                           d.energy - target.energy};
    const double e = std::abs(err.rho) + std::abs(err.m[0]) + std::abs(err.m[1]) +
                     std::abs(err.m[2]) + std::abs(err.energy);
    r.iterations = it + 1;
    if (e < best_err) {
      best_err = e;
      best = r.params;
    }
    if (e <= 2e-15 * scale) return r;
    FluidMoments c = conserved_from_primitive(r.params);
    c.rho -= err.rho;
    for (int a = 0; a < 3; ++a) c.m[a] -= err.m[a];
    c.energy -= err.energy;
    r.params = primitive_from_conserved(c);
  }
  // Rounding floor: keep the best iterate if it is at machine level.
  if (best_err <= 1e-13 * scale) {
    r.params = best;
    maxwellian_into(r.params, grid, out);
    return r;
  }
  throw NumericalError("match_maxwellian: quadrature defect did not converge");
}

std::string to_string(Frame f) { return f == Frame::Eulerian ? "eulerian" : "lagrangian"; }

DistributionField::DistributionField(GridPtr g, double x0_, double dx_, std::size_t n, Frame fr)
    : grid(std::move(g)), x0(x0_), dx(dx_), n_cells(n), frame(fr) {
  values.assign(n * grid->size(), 0.0);
}

std::size_t DistributionField::negative_count() const {
  std::size_t c = 0;
  for (double v : values) c += (v < 0.0);
  return c;
}

}  // namespace kinlim
