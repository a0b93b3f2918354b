#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "kinlim/velocity_space.hpp"

// Direct quadrature of the hard-sphere collision integral on a product grid.
//
// For each pre-collision pair (xi, xi*) the hemisphere {Omega : g.Omega >= 0},
// g = xi - xi*, is sampled in a frame aligned with g: Gauss-Legendre in
// cos(angle to g) times uniform azimuth, so the loss integral of |g.Omega| is
// exact. Post-collision values are trilinear interpolants of f/W, with W a
// positive Maxwellian, and multiplied back by W(xi)W(xi*), which equals
// W(xi')W(xi*') by energy conservation. When a post-collision stencil
// leaves the grid the gain of that collision is dropped; the loss term is
// always kept, so the collision frequency stays bounded below at the box edge.
namespace kinlim::kernels {

struct AngularRule {
  int n_polar = 8;
  int n_azimuth = 8;
  std::vector<double> mu, mu_weight;

  static AngularRule make(int n_polar, int n_azimuth);
  std::size_t size() const { return static_cast<std::size_t>(n_polar) * n_azimuth; }
};

// Hemisphere directions aligned with g, in (polar, azimuth) order, with the
// product weights mu_weight * 2pi / n_azimuth.
void aligned_directions(const Vec3& g, const AngularRule& rule, std::vector<Vec3>& omega,
                        std::vector<double>& weight);

// Split an index-space offset into floor and fraction, snapping fractions
// within 1e-12 of an integer so both kernels agree on stencil membership.
inline void split_offset(double o, int& fl, double& fr) {
  double f = std::floor(o);
  double r = o - f;
  if (r > 1.0 - 1e-12) {
    f += 1.0;
    r = 0.0;
  } else if (r < 1e-12) {
    r = 0.0;
  }
  fl = static_cast<int>(f);
  fr = r;
}

struct CollisionTally {
  std::uint64_t kept = 0;     // triples with gain evaluated
  std::uint64_t dropped = 0;  // triples whose gain left the grid
  double kept_loss = 0.0;     // sum w_i * loss rate of the kept triples
  double total_loss = 0.0;    // same over all triples
  double dropped_fraction() const {
    return total_loss > 0.0 ? (total_loss - kept_loss) / total_loss : 0.0;
  }
};

// Geometry shared by every pair with the same index displacement d = i - j.
class HsTable {
 public:
  HsTable(const VelocityGrid& grid, const AngularRule& rule);

  struct Entry {
    std::int16_t fl[3];  // floor of the xi' offset
    std::int16_t st[3];  // 1 if the fraction is nonzero
    double fr[3];
    double coef;         // 1/2 |g| mu w_mu w_phi
  };

  const VelocityGrid& grid() const { return *grid_; }
  const AngularRule& rule() const { return rule_; }
  std::size_t displacement_index(int d1, int d2, int d3) const {
    return (static_cast<std::size_t>(d1 + n_[0] - 1) * (2 * n_[1] - 1) + (d2 + n_[1] - 1)) *
               (2 * n_[2] - 1) +
           (d3 + n_[2] - 1);
  }
  std::span<const Entry> entries(int d1, int d2, int d3) const {
    const std::size_t q = rule_.size();
    return {entries_.data() + displacement_index(d1, d2, d3) * q, q};
  }
  std::size_t memory_bytes() const { return entries_.size() * sizeof(Entry); }

 private:
  const VelocityGrid* grid_;
  AngularRule rule_;
  std::array<int, 3> n_{};
  std::vector<Entry> entries_;
};

namespace serial {
// Raw Q(f, g) (no conservation correction); naive per-triple geometry.
void collision(const VelocityGrid& grid, const AngularRule& rule, std::span<const double> W,
               std::span<const double> f, std::span<const double> g, std::span<double> out,
               CollisionTally* tally = nullptr);
// Dense rows of h -> Q(M,h) + Q(h,M), row-major N x N, interpolation weight W = M.
void linearized(const VelocityGrid& grid, const AngularRule& rule, std::span<const double> M,
                std::span<double> matrix);
}  // namespace serial

namespace omp {
void collision(const HsTable& table, std::span<const double> W, std::span<const double> f,
               std::span<const double> g, std::span<double> out, CollisionTally* tally = nullptr);
void linearized(const HsTable& table, std::span<const double> M, std::span<double> matrix);
}  // namespace omp

// Loss-rate total with no collisions dropped: sum_i w_i sum_j w_j pi|g| (f_i g_j + f_j g_i)/2.
double total_loss_rate(const VelocityGrid& grid, std::span<const double> f,
                       std::span<const double> g);

}  // namespace kinlim::kernels
