#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace kinlim::num {

// Gauss-Legendre nodes and weights on [0, 1].
std::pair<std::vector<double>, std::vector<double>> gauss_legendre01(int n);

// Thomas algorithm: a (sub), b (diag), c (super), d (rhs). Overwrites d with x.
void solve_tridiagonal(std::span<const double> a, std::span<const double> b,
                       std::span<const double> c, std::span<double> d);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // RMS residual
  std::size_t n = 0;
};
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

// Uniform-grid cubic Hermite interpolation of (values, derivatives).
double hermite(std::span<const double> f, std::span<const double> df, double x0, double h,
               double x);

std::vector<double> cumulative_trapezoid(std::span<const double> f, double h);
std::vector<double> cumulative_trapezoid(std::span<const double> x, std::span<const double> f);
double trapezoid(std::span<const double> x, std::span<const double> f);

// Second-order three-point first derivative on a nonuniform grid:
// f'(x_i) ~ sum_k c[k] f[first + k] (central inside, one-sided at the ends).
struct Stencil3 {
  std::size_t first = 0;
  double c[3] = {0.0, 0.0, 0.0};
};
Stencil3 derivative_stencil(std::span<const double> x, std::size_t i);
std::vector<double> derivative(std::span<const double> x, std::span<const double> f);

// Monotone-preserving piecewise cubic (Fritsch-Carlson) on a nonuniform grid.
class Pchip {
 public:
  Pchip() = default;
  Pchip(std::vector<double> x, std::vector<double> y);
  double operator()(double t) const;
  double derivative(double t) const;

 private:
  std::vector<double> x_, y_, d_;
  std::size_t locate(double t) const;
};

// Natural cubic spline on a uniform grid (smooth tables).
class UniformCubic {
 public:
  UniformCubic() = default;
  UniformCubic(double x0, double h, std::vector<double> y);
  double operator()(double t) const;
  double derivative(double t) const;
  double lo() const { return x0_; }
  double hi() const { return x0_ + h_ * static_cast<double>(y_.size() - 1); }

 private:
  double x0_ = 0.0, h_ = 1.0;
  std::vector<double> y_, m_;  // m_: second derivatives
};

}  // namespace kinlim::num
