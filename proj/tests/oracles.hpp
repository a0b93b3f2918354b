#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "kinlim/contact_wave.hpp"

namespace testutil {

// Relaxation oracle: explicit conservative time stepping of
// theta_s = (a(theta) theta_x)_x from a step; at s = T the solution is the
// self-similar profile evaluated at x / sqrt(T).
inline std::vector<double> relax_step(const kinlim::SelfSimilarProfile& p, double X, double dx,
                                      double T, std::vector<double>& x) {
  const std::size_t n = static_cast<std::size_t>(std::lround(2 * X / dx)) + 1;
  x.resize(n);
  std::vector<double> th(n), flux(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = -X + dx * static_cast<double>(i);
    th[i] = x[i] < 0 ? p.theta_minus : (x[i] > 0 ? p.theta_plus : 0.5 * (p.theta_minus + p.theta_plus));
  }
  double amax = 0.0;
  for (int k = 0; k <= 20; ++k) {
    const double t = p.theta_minus + (p.theta_plus - p.theta_minus) * k / 20.0;
    amax = std::max(amax, p.a(t));
  }
  const int steps = static_cast<int>(std::ceil(T / (0.4 * dx * dx / amax)));
  const double dt = T / steps;
  for (int s = 0; s < steps; ++s) {
    for (std::size_t i = 0; i + 1 < n; ++i)
      flux[i] = p.a(0.5 * (th[i] + th[i + 1])) * (th[i + 1] - th[i]) / dx;
    for (std::size_t i = 1; i + 1 < n; ++i) th[i] += dt * (flux[i] - flux[i - 1]) / dx;
  }
  return th;
}

}  // namespace testutil
