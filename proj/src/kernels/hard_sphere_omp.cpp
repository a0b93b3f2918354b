#include <algorithm>
#include <cmath>
#include <numbers>

#include "kinlim/error.hpp"
#include "kinlim/kernels/hard_sphere.hpp"

namespace kinlim::kernels {

HsTable::HsTable(const VelocityGrid& grid, const AngularRule& rule)
    : grid_(&grid), rule_(rule), n_(grid.counts()) {
  const std::size_t nd = static_cast<std::size_t>(2 * n_[0] - 1) * (2 * n_[1] - 1) * (2 * n_[2] - 1);
  entries_.resize(nd * rule_.size());
  const auto& h = grid.spacing();
  std::vector<Vec3> om;
  std::vector<double> ow;
  for (int d1 = -(n_[0] - 1); d1 <= n_[0] - 1; ++d1)
    for (int d2 = -(n_[1] - 1); d2 <= n_[1] - 1; ++d2)
      for (int d3 = -(n_[2] - 1); d3 <= n_[2] - 1; ++d3) {
        const Vec3 g{d1 * h[0], d2 * h[1], d3 * h[2]};
        aligned_directions(g, rule_, om, ow);
        Entry* e = entries_.data() + displacement_index(d1, d2, d3) * rule_.size();
        for (std::size_t q = 0; q < rule_.size(); ++q) {
          const double gdo = g[0] * om[q][0] + g[1] * om[q][1] + g[2] * om[q][2];
          for (int a = 0; a < 3; ++a) {
            int fl;
            double fr;
            split_offset(-gdo * om[q][a] / h[a], fl, fr);
            e[q].fl[a] = static_cast<std::int16_t>(fl);
            e[q].st[a] = static_cast<std::int16_t>(fr > 0.0 ? 1 : 0);
            e[q].fr[a] = fr;
          }
          e[q].coef = 0.5 * gdo * ow[q];
        }
      }
}

namespace omp {

namespace {

struct Box {
  int lo[3], hi[3];
  bool empty() const {
    return lo[0] > hi[0] || lo[1] > hi[1] || lo[2] > hi[2];
  }
};

// Rows i (per axis) whose partner j = i - d lies on the grid and whose two
// post-collision stencils stay inside it.
inline Box kept_box(const std::array<int, 3>& n, const int d[3], const HsTable::Entry& e) {
  Box b;
  for (int a = 0; a < 3; ++a) {
    const int fl1 = e.fl[a], st = e.st[a];
    const int fl2 = -d[a] - fl1 - st;
    b.lo[a] = std::max({0, d[a], -fl1, -fl2});
    b.hi[a] = std::min({n[a] - 1, n[a] - 1 + d[a], n[a] - 1 - fl1 - st, n[a] - 1 - fl2 - st});
  }
  return b;
}

// Linear offsets and weights of the 8 interpolation corners of both
// post-collision points, relative to row i.
inline void corners(const std::array<int, 3>& n, const int d[3], const HsTable::Entry& e,
                    std::ptrdiff_t o1[8], double w1[8], std::ptrdiff_t o2[8], double w2[8]) {
  const std::ptrdiff_t S0 = static_cast<std::ptrdiff_t>(n[1]) * n[2], S1 = n[2];
  const std::ptrdiff_t S[3] = {S0, S1, 1};
  int c = 0;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int k = 0; k < 2; ++k, ++c) {
        const int sel[3] = {a, b, k};
        std::ptrdiff_t p1 = 0, p2 = 0;
        double q1 = 1.0, q2 = 1.0;
        for (int ax = 0; ax < 3; ++ax) {
          const int st = e.st[ax];
          const int fl1 = e.fl[ax];
          const int fl2 = -d[ax] - fl1 - st;
          const double fr1 = e.fr[ax];
          const double fr2 = st ? 1.0 - fr1 : 0.0;
          p1 += (fl1 + sel[ax] * st) * S[ax];
          p2 += (fl2 + sel[ax] * st) * S[ax];
          q1 *= sel[ax] ? fr1 : 1.0 - fr1;
          q2 *= sel[ax] ? fr2 : 1.0 - fr2;
        }
        o1[c] = p1;
        o2[c] = p2;
        w1[c] = q1;
        w2[c] = q2;
      }
}

template <bool kSelf, bool kTally>
void collision_impl(const HsTable& table, std::span<const double> W, std::span<const double> f,
                    std::span<const double> g, std::span<double> out, CollisionTally* tally) {
  const VelocityGrid& grid = table.grid();
  const auto& n = grid.counts();
  const std::size_t N = grid.size();
  const std::ptrdiff_t S0 = static_cast<std::ptrdiff_t>(n[1]) * n[2], S1 = n[2];
  const double* w = grid.weights().data();
  std::vector<double> ft(N), gt(N);
  for (std::size_t k = 0; k < N; ++k) {
    ft[k] = f[k] / W[k];
    gt[k] = g[k] / W[k];
  }
  std::fill(out.begin(), out.end(), 0.0);
  double* acc = out.data();
  const double* F = ft.data();
  const double* G = gt.data();
  const double* Wp = W.data();
  const double* fp = f.data();
  const double* gp = g.data();
  const std::size_t nq = table.rule().size();

  std::vector<std::uint64_t> kept_s(n[0], 0), dropped_s(n[0], 0);
  std::vector<double> loss_s(n[0], 0.0);

#pragma omp parallel for schedule(dynamic, 1)
  for (int i1 = 0; i1 < n[0]; ++i1) {
    std::uint64_t kept = 0, dropped = 0;
    double loss_acc = 0.0;
    for (int d1 = i1 - n[0] + 1; d1 <= i1; ++d1)
      for (int d2 = -(n[1] - 1); d2 <= n[1] - 1; ++d2)
        for (int d3 = -(n[2] - 1); d3 <= n[2] - 1; ++d3) {
          if (d1 == 0 && d2 == 0 && d3 == 0) continue;
          const int d[3] = {d1, d2, d3};
          const std::ptrdiff_t D = d1 * S0 + d2 * S1 + d3;
          const auto es = table.entries(d1, d2, d3);
          const int j2 = std::min(n[1] - 1, n[1] - 1 + d2) - std::max(0, d2) + 1;
          const int j3 = std::min(n[2] - 1, n[2] - 1 + d3) - std::max(0, d3) + 1;
          for (std::size_t q = 0; q < nq; ++q) {
            const auto& e = es[q];
            Box b = kept_box(n, d, e);
            const bool row_ok = i1 >= b.lo[0] && i1 <= b.hi[0];
            const bool any = row_ok && b.lo[1] <= b.hi[1] && b.lo[2] <= b.hi[2];
            if constexpr (kTally) {
              const std::uint64_t k =
                  any ? static_cast<std::uint64_t>(b.hi[1] - b.lo[1] + 1) * (b.hi[2] - b.lo[2] + 1)
                      : 0;
              kept += k;
              dropped += static_cast<std::uint64_t>(j2) * j3 - k;
            }
            if (!any) continue;
            std::ptrdiff_t o1[8], o2[8];
            double w1[8], w2[8];
            corners(n, d, e, o1, w1, o2, w2);
            const double coef = e.coef;
            for (int i2 = b.lo[1]; i2 <= b.hi[1]; ++i2) {
              const std::ptrdiff_t base = i1 * S0 + i2 * S1;
              double lsum = 0.0;
#pragma omp simd reduction(+ : lsum)
              for (int i3 = b.lo[2]; i3 <= b.hi[2]; ++i3) {
                const std::ptrdiff_t i = base + i3;
                const std::ptrdiff_t j = i - D;
                double F1 = 0, F2 = 0;
                for (int c = 0; c < 8; ++c) {
                  F1 += w1[c] * F[i + o1[c]];
                  F2 += w2[c] * F[i + o2[c]];
                }
                double gain;
                if constexpr (kSelf) {
                  gain = 2.0 * F1 * F2;
                } else {
                  double G1 = 0, G2 = 0;
                  for (int c = 0; c < 8; ++c) {
                    G1 += w1[c] * G[i + o1[c]];
                    G2 += w2[c] * G[i + o2[c]];
                  }
                  gain = F1 * G2 + F2 * G1;
                }
                const double cw = coef * w[j];
                acc[i] += cw * Wp[i] * Wp[j] * gain;
                if constexpr (kTally) lsum += w[i] * cw * (fp[i] * gp[j] + fp[j] * gp[i]);
              }
              if constexpr (kTally) loss_acc += lsum;
            }
          }
        }
    kept_s[i1] = kept;
    dropped_s[i1] = dropped;
    loss_s[i1] = loss_acc;
  }

  // Loss term over the full grid; the aligned rule integrates |g.Omega| exactly.
  const double* x1 = grid.xi1().data();
  const double* x2 = grid.xi2().data();
  const double* x3 = grid.xi3().data();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(N); ++i) {
    double l = 0.0;
#pragma omp simd reduction(+ : l)
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(N); ++j) {
      const double a = x1[i] - x1[j], b = x2[i] - x2[j], c = x3[i] - x3[j];
      l += w[j] * std::sqrt(a * a + b * b + c * c) * (fp[i] * gp[j] + fp[j] * gp[i]);
    }
    acc[i] -= 0.5 * std::numbers::pi * l;
  }

  if constexpr (kTally) {
    CollisionTally t;
    for (int i1 = 0; i1 < n[0]; ++i1) {
      t.kept += kept_s[i1];
      t.dropped += dropped_s[i1];
      t.kept_loss += loss_s[i1];
    }
    t.total_loss = total_loss_rate(grid, f, g);
    *tally = t;
  }
}

}  // namespace

void collision(const HsTable& table, std::span<const double> W, std::span<const double> f,
               std::span<const double> g, std::span<double> out, CollisionTally* tally) {
  const std::size_t N = table.grid().size();
  require(W.size() == N && f.size() == N && g.size() == N && out.size() == N,
          "hard-sphere collision: slice size mismatch");
  const bool self = f.data() == g.data();
  if (tally) {
    if (self) collision_impl<true, true>(table, W, f, g, out, tally);
    else collision_impl<false, true>(table, W, f, g, out, tally);
  } else {
    if (self) collision_impl<true, false>(table, W, f, g, out, nullptr);
    else collision_impl<false, false>(table, W, f, g, out, nullptr);
  }
}

void linearized(const HsTable& table, std::span<const double> M, std::span<double> matrix) {
  const VelocityGrid& grid = table.grid();
  const auto& n = grid.counts();
  const std::size_t N = grid.size();
  require(M.size() == N && matrix.size() == N * N, "hard-sphere linearization: size mismatch");
  const std::ptrdiff_t S0 = static_cast<std::ptrdiff_t>(n[1]) * n[2], S1 = n[2];
  const double* w = grid.weights().data();
  const auto& h = grid.spacing();
  std::vector<double> inv_m(N);
  for (std::size_t k = 0; k < N; ++k) inv_m[k] = 1.0 / M[k];
  const std::size_t nq = table.rule().size();

#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(N); ++i) {
    double* row = matrix.data() + i * static_cast<std::ptrdiff_t>(N);
    std::fill(row, row + N, 0.0);
    const int ii[3] = {static_cast<int>(i / S0), static_cast<int>((i / S1) % n[1]),
                       static_cast<int>(i % n[2])};
    double diag = 0.0;
    for (int j1 = 0; j1 < n[0]; ++j1)
      for (int j2 = 0; j2 < n[1]; ++j2)
        for (int j3 = 0; j3 < n[2]; ++j3) {
          const int d[3] = {ii[0] - j1, ii[1] - j2, ii[2] - j3};
          if (d[0] == 0 && d[1] == 0 && d[2] == 0) continue;
          const std::ptrdiff_t j = j1 * S0 + j2 * S1 + j3;
          const auto es = table.entries(d[0], d[1], d[2]);
          for (std::size_t q = 0; q < nq; ++q) {
            const auto& e = es[q];
            const Box b = kept_box(n, d, e);
            if (ii[0] < b.lo[0] || ii[0] > b.hi[0] || ii[1] < b.lo[1] || ii[1] > b.hi[1] ||
                ii[2] < b.lo[2] || ii[2] > b.hi[2])
              continue;
            std::ptrdiff_t o1[8], o2[8];
            double w1[8], w2[8];
            corners(n, d, e, o1, w1, o2, w2);
            const double mm = 2.0 * e.coef * w[j] * M[i] * M[j];
            for (int k = 0; k < 8; ++k) {
              row[i + o1[k]] += mm * w1[k] * inv_m[i + o1[k]];
              row[i + o2[k]] += mm * w2[k] * inv_m[i + o2[k]];
            }
          }
          const double gx = d[0] * h[0], gy = d[1] * h[1], gz = d[2] * h[2];
          const double c = std::numbers::pi * std::sqrt(gx * gx + gy * gy + gz * gz) * w[j];
          row[j] -= c * M[i];
          diag += c * M[j];
        }
    row[i] -= diag;
  }
}

}  // namespace omp
}  // namespace kinlim::kernels
