#include <cmath>
#include <numbers>

#include "kinlim/error.hpp"
#include "kinlim/kernels/hard_sphere.hpp"
#include "kinlim/numerics.hpp"

namespace kinlim::kernels {

AngularRule AngularRule::make(int n_polar, int n_azimuth) {
  require(n_polar >= 1 && n_azimuth >= 1, "angular rule: counts must be positive");
  AngularRule r;
  r.n_polar = n_polar;
  r.n_azimuth = n_azimuth;
  auto [x, w] = num::gauss_legendre01(n_polar);
  r.mu = std::move(x);
  r.mu_weight = std::move(w);
  return r;
}

void aligned_directions(const Vec3& g, const AngularRule& rule, std::vector<Vec3>& omega,
                        std::vector<double>& weight) {
  const double gn = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
  omega.resize(rule.size());
  weight.resize(rule.size());
  if (gn == 0.0) {
    for (std::size_t q = 0; q < rule.size(); ++q) omega[q] = {0, 0, 0}, weight[q] = 0.0;
    return;
  }
  const Vec3 e{g[0] / gn, g[1] / gn, g[2] / gn};
  int a = 0;
  for (int k = 1; k < 3; ++k)
    if (std::abs(e[k]) < std::abs(e[a])) a = k;
  Vec3 ax{0, 0, 0};
  ax[a] = 1.0;
  Vec3 e1{e[1] * ax[2] - e[2] * ax[1], e[2] * ax[0] - e[0] * ax[2], e[0] * ax[1] - e[1] * ax[0]};
  const double n1 = std::sqrt(e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]);
  for (double& v : e1) v /= n1;
  const Vec3 e2{e[1] * e1[2] - e[2] * e1[1], e[2] * e1[0] - e[0] * e1[2],
                e[0] * e1[1] - e[1] * e1[0]};
  const double dphi = 2.0 * std::numbers::pi / rule.n_azimuth;
  std::size_t q = 0;
  for (int p = 0; p < rule.n_polar; ++p) {
    const double mu = rule.mu[p];
    const double s = std::sqrt(std::max(0.0, 1.0 - mu * mu));
    for (int t = 0; t < rule.n_azimuth; ++t, ++q) {
      const double phi = (t + 0.5) * dphi;
      const double c = std::cos(phi), sn = std::sin(phi);
      for (int k = 0; k < 3; ++k) omega[q][k] = mu * e[k] + s * (c * e1[k] + sn * e2[k]);
      weight[q] = rule.mu_weight[p] * dphi;
    }
  }
}

double total_loss_rate(const VelocityGrid& grid, std::span<const double> f,
                       std::span<const double> g) {
  const auto x1 = grid.xi1(), x2 = grid.xi2(), x3 = grid.xi3(), w = grid.weights();
  const std::size_t n = grid.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double a = x1[i] - x1[j], b = x2[i] - x2[j], c = x3[i] - x3[j];
      row += w[j] * 0.5 * std::numbers::pi * std::sqrt(a * a + b * b + c * c) *
             (f[i] * g[j] + f[j] * g[i]);
    }
    total += w[i] * row;
  }
  return total;
}

namespace {

struct Stencil {
  int base[3];
  int st[3];
  double fr[3];
};

// Locate xi_node(i) + offset (index units) on the grid; false if the
// interpolation stencil would leave it.
bool locate(const std::array<int, 3>& n, const int idx[3], const double off[3], Stencil& s) {
  for (int a = 0; a < 3; ++a) {
    int fl;
    double fr;
    split_offset(off[a], fl, fr);
    s.base[a] = idx[a] + fl;
    s.st[a] = fr > 0.0 ? 1 : 0;
    s.fr[a] = fr;
    if (s.base[a] < 0 || s.base[a] + s.st[a] > n[a] - 1) return false;
  }
  return true;
}

template <typename Fn>
void for_corners(const VelocityGrid& grid, const Stencil& s, Fn&& fn) {
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c) {
        const double wt = (a ? s.fr[0] : 1.0 - s.fr[0]) * (b ? s.fr[1] : 1.0 - s.fr[1]) *
                          (c ? s.fr[2] : 1.0 - s.fr[2]);
        fn(grid.index(s.base[0] + a * s.st[0], s.base[1] + b * s.st[1], s.base[2] + c * s.st[2]),
           wt);
      }
}

double interp(const VelocityGrid& grid, const Stencil& s, std::span<const double> v) {
  double acc = 0.0;
  for_corners(grid, s, [&](std::size_t k, double wt) { acc += wt * v[k]; });
  return acc;
}

void decode(const VelocityGrid& grid, std::size_t k, int idx[3]) {
  const auto& n = grid.counts();
  idx[2] = static_cast<int>(k % n[2]);
  idx[1] = static_cast<int>((k / n[2]) % n[1]);
  idx[0] = static_cast<int>(k / (static_cast<std::size_t>(n[1]) * n[2]));
}

// Visit every (i, j, Omega) triple of row i; the stencil pointer is null
// when the gain term leaves the grid. The relative velocity is
// taken from the index displacement and the xi*' stencil is the mirror of
// the xi' one, so the geometry is bitwise identical to the tabulated kernel.
template <typename Fn>
void visit_row(const VelocityGrid& grid, const AngularRule& rule, std::size_t i,
               std::vector<Vec3>& om, std::vector<double>& ow, std::uint64_t* dropped, Fn&& fn) {
  const auto& h = grid.spacing();
  const auto& n = grid.counts();
  int ii[3], jj[3];
  decode(grid, i, ii);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    if (j == i) continue;
    decode(grid, j, jj);
    const int d[3] = {ii[0] - jj[0], ii[1] - jj[1], ii[2] - jj[2]};
    const Vec3 g{d[0] * h[0], d[1] * h[1], d[2] * h[2]};
    aligned_directions(g, rule, om, ow);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double gdo = g[0] * om[q][0] + g[1] * om[q][1] + g[2] * om[q][2];
      double o1[3];
      for (int a = 0; a < 3; ++a) o1[a] = -gdo * om[q][a] / h[a];
      Stencil s1, s2;
      bool inside = locate(n, ii, o1, s1);
      for (int a = 0; a < 3 && inside; ++a) {
        // xi*' = xi + xi* - xi'
        s2.st[a] = s1.st[a];
        s2.fr[a] = s1.st[a] ? 1.0 - s1.fr[a] : 0.0;
        s2.base[a] = ii[a] + jj[a] - s1.base[a] - s1.st[a];
        if (s2.base[a] < 0 || s2.base[a] + s2.st[a] > n[a] - 1) inside = false;
      }
      if (!inside && dropped) ++*dropped;
      fn(j, inside ? &s1 : nullptr, &s2, 0.5 * gdo * ow[q]);
    }
  }
}

}  // namespace

namespace serial {

void collision(const VelocityGrid& grid, const AngularRule& rule, std::span<const double> W,
               std::span<const double> f, std::span<const double> g, std::span<double> out,
               CollisionTally* tally) {
  const std::size_t n = grid.size();
  require(W.size() == n && f.size() == n && g.size() == n && out.size() == n,
          "hard-sphere collision: slice size mismatch");
  std::vector<double> ft(n), gt(n);
  for (std::size_t k = 0; k < n; ++k) {
    ft[k] = f[k] / W[k];
    gt[k] = g[k] / W[k];
  }
  const auto w = grid.weights();
  std::vector<Vec3> om;
  std::vector<double> ow;
  std::uint64_t dropped = 0, kept = 0;
  double kept_loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0, loss_i = 0.0;
    visit_row(grid, rule, i, om, ow, &dropped,
              [&](std::size_t j, const Stencil* s1, const Stencil* s2, double coef) {
                const double loss = f[i] * g[j] + f[j] * g[i];
                acc -= coef * w[j] * loss;
                if (!s1) return;
                const double F1 = interp(grid, *s1, ft), G1 = interp(grid, *s1, gt);
                const double F2 = interp(grid, *s2, ft), G2 = interp(grid, *s2, gt);
                acc += coef * w[j] * W[i] * W[j] * (F1 * G2 + F2 * G1);
                loss_i += coef * w[j] * loss;
                ++kept;
              });
    out[i] = acc;
    kept_loss += w[i] * loss_i;
  }
  if (tally) {
    tally->kept = kept;
    tally->dropped = dropped;
    tally->kept_loss = kept_loss;
    tally->total_loss = total_loss_rate(grid, f, g);
  }
}

void linearized(const VelocityGrid& grid, const AngularRule& rule, std::span<const double> M,
                std::span<double> matrix) {
  const std::size_t n = grid.size();
  require(M.size() == n && matrix.size() == n * n, "hard-sphere linearization: size mismatch");
  const auto w = grid.weights();
  std::vector<Vec3> om;
  std::vector<double> ow;
  for (std::size_t i = 0; i < n; ++i) {
    double* row = matrix.data() + i * n;
    for (std::size_t k = 0; k < n; ++k) row[k] = 0.0;
    visit_row(grid, rule, i, om, ow, nullptr,
              [&](std::size_t j, const Stencil* s1, const Stencil* s2, double coef) {
                const double c = 2.0 * coef * w[j];
                row[j] -= c * M[i];
                row[i] -= c * M[j];
                if (!s1) return;
                const double mm = c * M[i] * M[j];
                for_corners(grid, *s1, [&](std::size_t k, double wt) { row[k] += mm * wt / M[k]; });
                for_corners(grid, *s2, [&](std::size_t k, double wt) { row[k] += mm * wt / M[k]; });
              });
  }
}

}  // namespace serial
}  // namespace kinlim::kernels
