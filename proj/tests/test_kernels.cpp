#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "kinlim/kernels/hard_sphere.hpp"
#include "kinlim/kernels/kinetic.hpp"

using namespace kinlim;

TEST_CASE("hard-sphere collision: serial reference and OpenMP kernel agree") {
  const auto g = VelocityGrid::build({8, 8, 8}, 4.5, 1.0);
  const auto rule = kernels::AngularRule::make(8, 8);
  const kernels::HsTable table(*g, rule);
  std::mt19937_64 rng(5);
  const auto f = testutil::random_slice(rng, *g);
  const auto h = testutil::random_slice(rng, *g);
  const auto W = maxwellian({1, {0, 0, 0}, 1}, *g);
  std::vector<double> a(g->size()), b(g->size());
  kernels::CollisionTally ta, tb;
  kernels::serial::collision(*g, rule, W, f, h, a, &ta);
  kernels::omp::collision(table, W, f, h, b, &tb);
  CHECK(testutil::max_abs_diff(a, b) <= 1e-12 * testutil::max_abs(a));
  CHECK(ta.kept == tb.kept);
  CHECK(ta.dropped == tb.dropped);
  CHECK(ta.kept_loss == doctest::Approx(tb.kept_loss).epsilon(1e-12));
  CHECK(ta.total_loss == doctest::Approx(kernels::total_loss_rate(*g, f, h)).epsilon(1e-12));

  // The self-collision fast path matches the general one.
  kernels::omp::collision(table, W, f, f, b);
  kernels::serial::collision(*g, rule, W, f, f, a);
  CHECK(testutil::max_abs_diff(a, b) <= 1e-12 * testutil::max_abs(a));
}

TEST_CASE("linearized rows: serial and OpenMP agree and match collision columns") {
  const auto g = VelocityGrid::build({8, 8, 8}, 4.5, 1.0);
  const auto rule = kernels::AngularRule::make(8, 8);
  const kernels::HsTable table(*g, rule);
  const auto M = maxwellian({1, {0, 0, 0}, 1}, *g);
  const std::size_t n = g->size();
  std::vector<double> A(n * n), B(n * n);
  kernels::serial::linearized(*g, rule, M, A);
  kernels::omp::linearized(table, M, B);
  CHECK(testutil::max_abs_diff(A, B) <= 1e-12 * testutil::max_abs(A));

  // Column k equals Q(M, e_k) + Q(e_k, M).
  for (std::size_t k : {std::size_t{0}, n / 3, n / 2 + 4, n - 1}) {
    std::vector<double> e(n, 0.0), q1(n), q2(n);
    e[k] = 1.0;
    kernels::serial::collision(*g, rule, M, M, e, q1);
    kernels::serial::collision(*g, rule, M, e, M, q2);
    double err = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      err = std::max(err, std::abs(q1[i] + q2[i] - B[i * n + k]));
      scale = std::max(scale, std::abs(B[i * n + k]));
    }
    CHECK(err <= 1e-12 * scale);
  }
}

TEST_CASE("aligned hemisphere rule integrates |g.Omega| exactly") {
  const auto rule = kernels::AngularRule::make(8, 8);
  std::vector<Vec3> om;
  std::vector<double> w;
  const Vec3 gv{0.3, -1.1, 0.4};
  const double gn = std::sqrt(0.09 + 1.21 + 0.16);
  kernels::aligned_directions(gv, rule, om, w);
  double s = 0.0, area = 0.0;
  for (std::size_t q = 0; q < om.size(); ++q) {
    const double dot = gv[0] * om[q][0] + gv[1] * om[q][1] + gv[2] * om[q][2];
    CHECK(dot >= 0.0);
    s += w[q] * dot;
    area += w[q];
  }
  CHECK(s == doctest::Approx(std::numbers::pi * gn).epsilon(1e-14));
  CHECK(area == doctest::Approx(2.0 * std::numbers::pi).epsilon(1e-14));
}

namespace {

struct TransportCase {
  GridPtr g;
  std::size_t nc = 37;
  std::vector<double> f, gl, gr;
};

TransportCase transport_case() {
  TransportCase c;
  c.g = VelocityGrid::build({8, 8, 8}, 4.5, 1.0);
  std::mt19937_64 rng(9);
  const std::size_t nv = c.g->size();
  c.f.resize(c.nc * nv);
  for (std::size_t i = 0; i < c.nc; ++i) {
    const auto s = testutil::random_slice(rng, *c.g);
    std::copy(s.begin(), s.end(), c.f.begin() + i * nv);
  }
  c.gl = std::vector<double>(2 * nv);
  c.gr = std::vector<double>(2 * nv);
  for (auto* v : {&c.gl, &c.gr}) {
    const auto s = testutil::random_slice(rng, *c.g);
    std::copy(s.begin(), s.end(), v->begin());
    std::copy(s.begin(), s.end(), v->begin() + nv);
  }
  return c;
}

}  // namespace

TEST_CASE("transport: serial and OpenMP agree and the update is conservative") {
  auto c = transport_case();
  const std::size_t nv = c.g->size();
  for (auto lim : {kernels::Limiter::Upwind, kernels::Limiter::Minmod}) {
    kernels::TransportArgs a{c.nc, nv, c.g->xi1(), 0.9 / c.g->max_abs_xi1(), lim, c.gl, c.gr};
    std::vector<double> o1(c.f.size()), o2(c.f.size()), fl1(nv), fr1(nv), fl2(nv), fr2(nv);
    kernels::serial::transport(a, c.f, o1, fl1, fr1);
    kernels::omp::transport(a, c.f, o2, fl2, fr2);
    CHECK(testutil::max_abs_diff(o1, o2) <= 1e-15 * testutil::max_abs(o1));
    CHECK(testutil::max_abs_diff(fl1, fl2) == 0.0);
    // Total per velocity changes only by the boundary fluxes.
    for (std::size_t k = 0; k < nv; k += 17) {
      double before = 0.0, after = 0.0;
      for (std::size_t i = 0; i < c.nc; ++i) {
        before += c.f[i * nv + k];
        after += o1[i * nv + k];
      }
      CHECK(after - before == doctest::Approx(fl1[k] - fr1[k]).epsilon(1e-12).scale(before));
    }
  }
}

TEST_CASE("upwind transport of a uniform state is exact") {
  const auto g = VelocityGrid::build({8, 8, 8}, 4.5, 1.0);
  const auto M = maxwellian({1, {0, 0, 0}, 1}, *g);
  const std::size_t nv = g->size(), nc = 10;
  std::vector<double> f(nc * nv), gl(2 * nv), gr(2 * nv);
  for (std::size_t i = 0; i < nc; ++i) std::copy(M.begin(), M.end(), f.begin() + i * nv);
  for (std::size_t i = 0; i < 2; ++i) {
    std::copy(M.begin(), M.end(), gl.begin() + i * nv);
    std::copy(M.begin(), M.end(), gr.begin() + i * nv);
  }
  kernels::TransportArgs a{nc, nv, g->xi1(), 0.5 / g->max_abs_xi1(), kernels::Limiter::Minmod, gl,
                           gr};
  std::vector<double> o(f.size()), fl(nv), fr(nv);
  kernels::omp::transport(a, f, o, fl, fr);
  CHECK(testutil::max_abs_diff(o, f) == 0.0);
}

TEST_CASE("BGK relaxation kernels agree and conserve moments") {
  auto c = transport_case();
  const std::size_t nv = c.g->size();
  auto a = c.f, b = c.f;
  kernels::serial::bgk_relax(*c.g, c.nc, 0.3, a);
  kernels::omp::bgk_relax(*c.g, c.nc, 0.3, b);
  CHECK(testutil::max_abs_diff(a, b) == 0.0);
  for (std::size_t i = 0; i < c.nc; ++i) {
    const auto m0 = moments(std::span<const double>(c.f).subspan(i * nv, nv), *c.g);
    const auto m1 = moments(std::span<const double>(a).subspan(i * nv, nv), *c.g);
    CHECK(std::abs(m1.rho - m0.rho) <= 1e-13 * m0.rho);
    CHECK(std::abs(m1.energy - m0.energy) <= 1e-13 * m0.energy);
    for (int d = 0; d < 3; ++d) CHECK(std::abs(m1.m[d] - m0.m[d]) <= 1e-13 * m0.rho);
  }
}
