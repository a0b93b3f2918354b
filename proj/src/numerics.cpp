#include "kinlim/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "kinlim/error.hpp"

namespace kinlim::num {

std::pair<std::vector<double>, std::vector<double>> gauss_legendre01(int n) {
  require(n >= 1, "gauss_legendre01: n must be >= 1");
  std::vector<double> x(n), w(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // map [-1,1] -> [0,1]
    x[n - 1 - i] = 0.5 * (z + 1.0);
    w[n - 1 - i] = 1.0 / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

void solve_tridiagonal(std::span<const double> a, std::span<const double> b,
                       std::span<const double> c, std::span<double> d) {
  const std::size_t n = d.size();
  if (n == 0) return;
  std::vector<double> cp(n);
  double beta = b[0];
  if (beta == 0.0) throw NumericalError("solve_tridiagonal: zero pivot");
  cp[0] = c[0] / beta;
  d[0] /= beta;
  for (std::size_t i = 1; i < n; ++i) {
    beta = b[i] - a[i] * cp[i - 1];
    if (beta == 0.0) throw NumericalError("solve_tridiagonal: zero pivot");
    cp[i] = (i + 1 < n) ? c[i] / beta : 0.0;
    d[i] = (d[i] - a[i] * d[i - 1]) / beta;
  }
  for (std::size_t i = n - 1; i-- > 0;) d[i] -= cp[i] * d[i + 1];
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, "fit_line: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  require(sxx > 0.0, "fit_line: abscissae are identical");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double r = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (f.intercept + f.slope * x[i]);
    r += e * e;
  }
  f.residual = std::sqrt(r / n);
  f.n = x.size();
  return f;
}

double hermite(std::span<const double> f, std::span<const double> df, double x0, double h,
               double x) {
  const std::size_t n = f.size();
  double s = (x - x0) / h;
  if (s <= 0.0) return f.front();
  if (s >= static_cast<double>(n - 1)) return f.back();
  std::size_t i = static_cast<std::size_t>(s);
  if (i >= n - 1) i = n - 2;
  const double t = s - static_cast<double>(i);
  const double t2 = t * t, t3 = t2 * t;
  const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
  const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
  return h00 * f[i] + h10 * h * df[i] + h01 * f[i + 1] + h11 * h * df[i + 1];
}

std::vector<double> cumulative_trapezoid(std::span<const double> f, double h) {
  std::vector<double> out(f.size(), 0.0);
  for (std::size_t i = 1; i < f.size(); ++i) out[i] = out[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
  return out;
}

std::vector<double> cumulative_trapezoid(std::span<const double> x, std::span<const double> f) {
  require(x.size() == f.size(), "cumulative_trapezoid: size mismatch");
  std::vector<double> out(f.size(), 0.0);
  for (std::size_t i = 1; i < f.size(); ++i)
    out[i] = out[i - 1] + 0.5 * (x[i] - x[i - 1]) * (f[i - 1] + f[i]);
  return out;
}

double trapezoid(std::span<const double> x, std::span<const double> f) {
  require(x.size() == f.size(), "trapezoid: size mismatch");
  double s = 0.0;
  for (std::size_t i = 1; i < f.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (f[i - 1] + f[i]);
  return s;
}

Stencil3 derivative_stencil(std::span<const double> x, std::size_t i) {
  const std::size_t n = x.size();
  require(n >= 3 && i < n, "derivative_stencil: need at least 3 nodes");
  Stencil3 s;
  s.first = i == 0 ? 0 : (i == n - 1 ? n - 3 : i - 1);
  const double x0 = x[s.first], x1 = x[s.first + 1], x2 = x[s.first + 2], t = x[i];
  // Derivatives of the Lagrange basis through (x0, x1, x2) evaluated at t.
  s.c[0] = ((t - x1) + (t - x2)) / ((x0 - x1) * (x0 - x2));
  s.c[1] = ((t - x0) + (t - x2)) / ((x1 - x0) * (x1 - x2));
  s.c[2] = ((t - x0) + (t - x1)) / ((x2 - x0) * (x2 - x1));
  return s;
}

std::vector<double> derivative(std::span<const double> x, std::span<const double> f) {
  require(x.size() == f.size(), "derivative: size mismatch");
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto s = derivative_stencil(x, i);
    out[i] = s.c[0] * f[s.first] + s.c[1] * f[s.first + 1] + s.c[2] * f[s.first + 2];
  }
  return out;
}

Pchip::Pchip(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  require(n >= 2 && y_.size() == n, "Pchip: need matching arrays of length >= 2");
  for (std::size_t i = 1; i < n; ++i)
    require(x_[i] > x_[i - 1], "Pchip: abscissae must be strictly increasing");
  std::vector<double> h(n - 1), del(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = x_[i + 1] - x_[i];
    del[i] = (y_[i + 1] - y_[i]) / h[i];
  }
  d_.assign(n, 0.0);
  if (n == 2) {
    d_[0] = d_[1] = del[0];
    return;
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (del[i - 1] * del[i] <= 0.0) {
      d_[i] = 0.0;
    } else {
      const double w1 = 2 * h[i] + h[i - 1], w2 = h[i] + 2 * h[i - 1];
      d_[i] = (w1 + w2) / (w1 / del[i - 1] + w2 / del[i]);
    }
  }
  auto endpoint = [](double h0, double h1, double d0, double d1) {
    double d = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (d * d0 <= 0.0) d = 0.0;
    else if (d0 * d1 <= 0.0 && std::abs(d) > std::abs(3 * d0)) d = 3 * d0;
    return d;
  };
  d_[0] = endpoint(h[0], h[1], del[0], del[1]);
  d_[n - 1] = endpoint(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
}

std::size_t Pchip::locate(double t) const {
  auto it = std::upper_bound(x_.begin(), x_.end(), t);
  std::size_t i = static_cast<std::size_t>(std::distance(x_.begin(), it));
  if (i == 0) return 0;
  return std::min(i - 1, x_.size() - 2);
}

double Pchip::operator()(double t) const {
  if (t <= x_.front()) return y_.front();
  if (t >= x_.back()) return y_.back();
  const std::size_t i = locate(t);
  const double h = x_[i + 1] - x_[i];
  const double s = (t - x_[i]) / h;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * y_[i] + (s3 - 2 * s2 + s) * h * d_[i] +
         (-2 * s3 + 3 * s2) * y_[i + 1] + (s3 - s2) * h * d_[i + 1];
}

double Pchip::derivative(double t) const {
  if (t <= x_.front() || t >= x_.back()) return 0.0;
  const std::size_t i = locate(t);
  const double h = x_[i + 1] - x_[i];
  const double s = (t - x_[i]) / h;
  const double s2 = s * s;
  return ((6 * s2 - 6 * s) * y_[i] + (3 * s2 - 4 * s + 1) * h * d_[i] +
          (-6 * s2 + 6 * s) * y_[i + 1] + (3 * s2 - 2 * s) * h * d_[i + 1]) /
         h;
}

UniformCubic::UniformCubic(double x0, double h, std::vector<double> y)
    : x0_(x0), h_(h), y_(std::move(y)) {
  const std::size_t n = y_.size();
  require(n >= 2 && h > 0.0, "UniformCubic: need >= 2 nodes and positive spacing");
  m_.assign(n, 0.0);
  if (n < 3) return;
  const std::size_t k = n - 2;
  std::vector<double> a(k, 1.0), b(k, 4.0), c(k, 1.0), d(k);
  for (std::size_t i = 0; i < k; ++i)
    d[i] = 6.0 * (y_[i] - 2 * y_[i + 1] + y_[i + 2]) / (h * h);
  solve_tridiagonal(a, b, c, d);
  for (std::size_t i = 0; i < k; ++i) m_[i + 1] = d[i];
}

double UniformCubic::operator()(double t) const {
  const std::size_t n = y_.size();
  double s = (t - x0_) / h_;
  s = std::clamp(s, 0.0, static_cast<double>(n - 1));
  std::size_t i = std::min(static_cast<std::size_t>(s), n - 2);
  const double b = s - static_cast<double>(i), a = 1.0 - b;
  return a * y_[i] + b * y_[i + 1] +
         ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h_ * h_ / 6.0;
}

double UniformCubic::derivative(double t) const {
  const std::size_t n = y_.size();
  double s = (t - x0_) / h_;
  s = std::clamp(s, 0.0, static_cast<double>(n - 1));
  std::size_t i = std::min(static_cast<std::size_t>(s), n - 2);
  const double b = s - static_cast<double>(i), a = 1.0 - b;
  return (y_[i + 1] - y_[i]) / h_ +
         (-(3 * a * a - 1) * m_[i] + (3 * b * b - 1) * m_[i + 1]) * h_ / 6.0;
}

}  // namespace kinlim::num
