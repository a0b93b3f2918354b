#include "kinlim/collision.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "kinlim/error.hpp"
#include "kinlim/numerics.hpp"

namespace kinlim {

std::string to_string(CollisionKind k) { return k == CollisionKind::BGK ? "bgk" : "hard_sphere"; }

CollisionKind parse_collision_kind(const std::string& s) {
  if (s == "bgk" || s == "BGK") return CollisionKind::BGK;
  if (s == "hard_sphere" || s == "hardsphere" || s == "HardSphere") return CollisionKind::HardSphere;
  throw PreconditionError("collision.model: unknown collision model '" + s +
                          "' (expected bgk or hard_sphere)");
}

nlohmann::json FrequencyEnvelope::to_json() const {
  return {{"nu_lower", nu_lower}, {"c", c}, {"kappa", kappa}, {"fitted", fitted}};
}

void CollisionModel::validate() const {
  if (kind == CollisionKind::BGK) {
    require(nu0 > 0.0, "collision.nu0: must be positive for BGK");
  } else {
    require(n_polar >= kMinPolar, "collision.n_polar: angular grid too coarse (minimum 8)");
    require(n_azimuth >= kMinAzimuth, "collision.n_azimuth: angular grid too coarse (minimum 8)");
  }
}

nlohmann::json CollisionModel::to_json() const {
  nlohmann::json j{{"model", to_string(kind)}, {"nu0", nu0}, {"n_polar", n_polar},
                   {"n_azimuth", n_azimuth}};
  if (envelope.fitted) j["envelope"] = envelope.to_json();
  return j;
}

double InvariantResidual::max_relative() const {
  double r = 0.0;
  for (int i = 0; i < 5; ++i) {
    const double s = scale[i] > 0.0 ? scale[i] : 1.0;
    r = std::max(r, std::abs(moment[i]) / s);
  }
  return r;
}

InvariantResidual invariant_moments(std::span<const double> q, const VelocityGrid& grid) {
  require(q.size() == grid.size(), "invariant_moments: size mismatch");
  const auto x1 = grid.xi1(), x2 = grid.xi2(), x3 = grid.xi3(), w = grid.weights();
  InvariantResidual r;
  for (std::size_t k = 0; k < q.size(); ++k) {
    const double phi[5] = {1.0, x1[k], x2[k], x3[k],
                           0.5 * (x1[k] * x1[k] + x2[k] * x2[k] + x3[k] * x3[k])};
    for (int i = 0; i < 5; ++i) {
      r.moment[i] += w[k] * q[k] * phi[i];
      r.scale[i] += w[k] * std::abs(q[k] * phi[i]);
    }
  }
  return r;
}

void conservation_correction(std::span<double> q, const MacroBasis& basis) {
  // Two passes: the second removes the rounding left by the first.
  for (int pass = 0; pass < 2; ++pass) {
    const auto c = basis.coefficients(q);
    for (std::size_t k = 0; k < q.size(); ++k) {
      double s = 0.0;
      for (int j = 0; j < 5; ++j) s += c[j] * basis.chi[j][k];
      q[k] -= s;
    }
  }
}

std::vector<double> bgk_collision(std::span<const double> f, const VelocityGrid& grid, double nu0) {
  require(nu0 > 0.0, "bgk_collision: nu0 must be positive");
  const FluidMoments m = moments(f, grid);
  if (!(m.rho > 0.0)) throw PreconditionError("bgk_collision: nonpositive density");
  std::vector<double> M(grid.size());
  const MatchedMaxwellian mm = match_maxwellian(m, grid, M);
  std::vector<double> out(grid.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = nu0 * (M[k] - f[k]);
  const MacroBasis basis = build_basis_from_weight(mm.params, mm.physical, M, grid);
  conservation_correction(out, basis);
  return out;
}

HardSphereOperator::HardSphereOperator(GridPtr grid, int n_polar, int n_azimuth)
    : grid_(std::move(grid)), rule_(kernels::AngularRule::make(n_polar, n_azimuth)) {
  require(n_polar >= CollisionModel::kMinPolar && n_azimuth >= CollisionModel::kMinAzimuth,
          "hard-sphere: angular grid too coarse (minimum 8 x 8)");
  table_ = std::make_unique<kernels::HsTable>(*grid_, rule_);
}

namespace {

std::vector<double> default_weight(std::span<const double> f, const VelocityGrid& grid) {
  Primitive ref{1.0, {0, 0, 0}, grid.theta_max()};
  try {
    const Primitive p = primitive_from_conserved(moments(f, grid));
    auto w = maxwellian(p, grid);
    if (*std::min_element(w.begin(), w.end()) > 1e-250) return w;
  } catch (const PreconditionError&) {
  }
  return maxwellian(ref, grid);
}

Primitive weight_state(std::span<const double> W, const VelocityGrid& grid) {
  return primitive_from_conserved(moments(W, grid));
}

}  // namespace

std::vector<double> HardSphereOperator::collide_raw(std::span<const double> f,
                                                    std::span<const double> g,
                                                    std::span<const double> weight,
                                                    kernels::CollisionTally* tally) const {
  std::vector<double> out(grid_->size());
  kernels::omp::collision(*table_, weight, f, g, out, tally);
  return out;
}

std::vector<double> HardSphereOperator::collide(std::span<const double> f,
                                                std::span<const double> g,
                                                std::span<const double> weight,
                                                kernels::CollisionTally* tally) const {
  std::vector<double> W;
  if (weight.empty()) {
    W = default_weight(f, *grid_);
    weight = W;
  }
  auto out = collide_raw(f, g, weight, tally);
  const Primitive ws = weight_state(weight, *grid_);
  const MacroBasis basis =
      build_basis_from_weight(ws, ws, std::vector<double>(weight.begin(), weight.end()), *grid_);
  conservation_correction(out, basis);
  return out;
}

std::vector<double> hard_sphere_Q(std::span<const double> f, std::span<const double> g,
                                  GridPtr grid, int n_polar, int n_azimuth) {
  HardSphereOperator op(std::move(grid), n_polar, n_azimuth);
  return op.collide(f, g);
}

std::vector<double> collision_frequency(const VelocityGrid& grid,
                                        std::span<const double> M, const CollisionModel& model) {
  require(M.size() == grid.size(), "collision_frequency: size mismatch");
  const std::size_t n = grid.size();
  if (model.kind == CollisionKind::BGK) return std::vector<double>(n, model.nu0);
  // Angular factor sum_q w_q mu_q for B = |g| mu; the g-dependence factors out.
  const auto rule = kernels::AngularRule::make(model.n_polar, model.n_azimuth);
  double ang = 0.0;
  for (int p = 0; p < rule.n_polar; ++p)
    ang += rule.mu_weight[p] * rule.mu[p] * 2.0 * std::numbers::pi;
  const auto x1 = grid.xi1(), x2 = grid.xi2(), x3 = grid.xi3(), w = grid.weights();
  std::vector<double> nu(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double a = x1[i] - x1[j], b = x2[i] - x2[j], c = x3[i] - x3[j];
      s += w[j] * M[j] * std::sqrt(a * a + b * b + c * c);
    }
    nu[i] = ang * s;
  }
  return nu;
}

FrequencyEnvelope fit_frequency_envelope(const VelocityGrid& grid, std::span<const double> nu) {
  FrequencyEnvelope e;
  const auto x1 = grid.xi1(), x2 = grid.xi2(), x3 = grid.xi3();
  std::vector<double> lx, ly;
  double mn = INFINITY;
  for (std::size_t k = 0; k < nu.size(); ++k) {
    mn = std::min(mn, nu[k]);
    const double r = std::sqrt(x1[k] * x1[k] + x2[k] * x2[k] + x3[k] * x3[k]);
    if (r >= 2.0) {
      lx.push_back(std::log(r));
      ly.push_back(std::log(nu[k]));
    }
  }
  double kappa = 0.0;
  if (lx.size() >= 2) {
    const double spread = *std::max_element(ly.begin(), ly.end()) -
                          *std::min_element(ly.begin(), ly.end());
    if (spread > 1e-12) kappa = num::fit_line(lx, ly).slope;
  }
  e.kappa = std::clamp(kappa, 0.0, 1.0);
  double c = 0.0;
  for (std::size_t k = 0; k < nu.size(); ++k) {
    const double r = std::sqrt(x1[k] * x1[k] + x2[k] * x2[k] + x3[k] * x3[k]);
    c = std::max(c, nu[k] / std::pow(1.0 + r, e.kappa));
  }
  e.c = c;
  e.nu_lower = mn;
  e.fitted = true;
  return e;
}

}  // namespace kinlim
