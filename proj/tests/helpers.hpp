#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "kinlim/velocity_space.hpp"

namespace testutil {

inline double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double l2(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

// Positive, non-Maxwellian slice: a Maxwellian with random state times a
// random smooth-ish modulation, plus a second bump.
inline std::vector<double> random_slice(std::mt19937_64& rng, const kinlim::VelocityGrid& grid) {
  std::uniform_real_distribution<double> rho(0.6, 1.6), u(-0.25, 0.25), th(0.8, 1.2),
      amp(0.0, 0.4), ph(0.0, 2.0 * std::numbers::pi);
  const kinlim::Primitive a{rho(rng), {u(rng), u(rng), u(rng)}, th(rng)};
  const kinlim::Primitive b{0.3 * rho(rng), {2 * u(rng), u(rng), u(rng)}, 0.7 * th(rng)};
  auto f = kinlim::maxwellian(a, grid);
  const auto g = kinlim::maxwellian(b, grid);
  const double c1 = amp(rng), p1 = ph(rng), c2 = amp(rng), p2 = ph(rng);
  const auto x1 = grid.xi1(), x2 = grid.xi2();
  for (std::size_t k = 0; k < f.size(); ++k)
    f[k] = f[k] * (1.0 + c1 * std::sin(1.3 * x1[k] + p1) * std::cos(0.7 * x2[k] + p2) +
                   c2 * std::sin(0.9 * x2[k] + p2)) +
           g[k];
  return f;
}

// Closed-form integral of prod M_a M_b / M_c for centred Maxwellians (rho = 1).
inline double gaussian_ratio_integral(double ta, double tb, double tc) {
  constexpr double R = kinlim::kGasConstant;
  const double s = 1.0 / (1.0 / ta + 1.0 / tb - 1.0 / tc);
  const double two_pi_r = 2.0 * std::numbers::pi * R;
  return std::pow(two_pi_r * ta, -1.5) * std::pow(two_pi_r * tb, -1.5) *
         std::pow(two_pi_r * tc, 1.5) * std::pow(two_pi_r * s, 1.5);
}

}  // namespace testutil
