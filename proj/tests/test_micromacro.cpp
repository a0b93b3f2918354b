#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "kinlim/error.hpp"
#include "kinlim/micromacro.hpp"

using namespace kinlim;

namespace {
GridPtr ref_grid() { return VelocityGrid::build({16, 12, 12}, 6, 1.2); }
}  // namespace

TEST_CASE("basis is orthonormal; analytic chi are orthonormal to quadrature accuracy") {
  const auto g = VelocityGrid::build({24, 24, 24}, 6, 1.8);
  const auto b = build_basis({1, {0, 0, 0}, 1}, *g);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      CHECK(std::abs(b.inner(b.chi[i], b.chi[j]) - (i == j ? 1.0 : 0.0)) <= 1e-13);
  CHECK(b.gram_defect_raw <= 1e-8);

  const auto x1 = g->xi1(), x2 = g->xi2(), x3 = g->xi3();
  std::vector<double> q(g->size());
  for (std::size_t k = 0; k < q.size(); ++k)
    q[k] = ((x1[k] * x1[k] + x2[k] * x2[k] + x3[k] * x3[k]) / kGasConstant - 3.0) * b.weight[k];
  CHECK(b.inner(b.chi[4], q) > 0.0);
}

TEST_CASE("projection of a Maxwellian and of a Maxwellian plus a micro bump") {
  const auto g = ref_grid();
  const Primitive s{1.1, {0.1, 0, 0}, 1.05};
  const auto b = build_local_basis(maxwellian(s, *g), *g);
  const auto split = project(b.weight, b);
  CHECK(testutil::max_abs(split.micro) <= 1e-12 * testutil::max_abs(b.weight));

  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  std::vector<double> r(g->size());
  for (std::size_t k = 0; k < r.size(); ++k) r[k] = n(rng) * b.weight[k];
  const auto bump = apply_p1(r, b);
  std::vector<double> f(g->size());
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = b.weight[k] + 0.01 * bump[k];
  const auto s2 = project(f, b);
  CHECK(testutil::max_abs_diff(s2.macro, b.weight) <= 1e-12 * testutil::max_abs(b.weight));
}

TEST_CASE("project rejects a basis built for a different state") {
  const auto g = ref_grid();
  const auto b = build_basis({1, {0, 0, 0}, 1}, *g);
  CHECK_THROWS_AS(project(maxwellian({1.2, {0, 0, 0}, 1}, *g), b), PreconditionError);
}

TEST_CASE("property: projection algebra on random slices") {
  const auto g = ref_grid();
  std::mt19937_64 rng(11);
  for (int t = 0; t < 30; ++t) {
    const auto f = testutil::random_slice(rng, *g);
    const auto b = build_local_basis(f, *g);
    const double nf = std::sqrt(b.inner(f, f));
    const auto p0 = apply_p0(f, b);
    const auto p1 = apply_p1(f, b);
    const auto p00 = apply_p0(p0, b);
    const auto p01 = apply_p0(p1, b);
    const auto p10 = apply_p1(p0, b);
    std::vector<double> d(f.size()), s(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) {
      d[k] = p00[k] - p0[k];
      s[k] = p0[k] + p1[k] - f[k];
    }
    CHECK(std::sqrt(b.inner(d, d)) <= 1e-12 * nf);
    CHECK(std::sqrt(b.inner(p01, p01)) <= 1e-12 * nf);
    CHECK(std::sqrt(b.inner(p10, p10)) <= 1e-12 * nf);
    CHECK(std::sqrt(b.inner(s, s)) <= 1e-12 * nf);
    for (int j = 0; j < 5; ++j) CHECK(std::abs(b.inner(p1, b.chi[j])) <= 1e-12 * nf);
    // Microscopic functions carry no conserved moments.
    const auto m = moments(p1, *g);
    const double scale = moments(f, *g).rho;
    CHECK(std::abs(m.rho) <= 1e-10 * scale);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(m.m[i]) <= 1e-10 * scale);
    CHECK(std::abs(m.energy) <= 1e-10 * scale);
  }
}

TEST_CASE("weighted inner product against closed-form Gaussian integrals") {
  const auto g = VelocityGrid::build({24, 20, 20}, 6, 2.0);
  const auto M1 = maxwellian({1, {0, 0, 0}, 1}, *g);
  const auto M11 = maxwellian({1, {0, 0, 0}, 1.1}, *g);
  const auto b = build_basis({1, {0, 0, 0}, 1}, *g);
  CHECK(weighted_inner(b.chi[0], b.chi[0], M1, *g) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(weighted_inner(b.chi[0], b.chi[1], M1, *g)) <= 1e-13);
  const double want = testutil::gaussian_ratio_integral(1.1, 1.1, 1.0);
  CHECK(weighted_inner(M11, M11, M1, *g) == doctest::Approx(want).epsilon(1e-8));
  auto bad = M1;
  bad[0] = 0.0;
  CHECK_THROWS_AS(weighted_inner(M11, M11, bad, *g), PreconditionError);
}

TEST_CASE("weighted error norm: identities and three-Gaussian oracle") {
  const auto g = VelocityGrid::build({24, 20, 20}, 6, 2.0);
  const auto Mr = maxwellian({1, {0, 0, 0}, 1}, *g);
  const auto Ms = maxwellian({1, {0, 0, 0}, 0.85}, *g);
  const auto Mf = maxwellian({1, {0, 0, 0}, 1.05}, *g);
  CHECK(weighted_l2_error(Mr, Mr, Ms, *g) == 0.0);
  std::vector<double> f(Mr.size());
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = Mr[k] + 0.3 * Ms[k];
  double mass = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) mass += g->weights()[k] * Ms[k];
  CHECK(weighted_l2_error(f, Mr, Ms, *g) == doctest::Approx(0.09 * mass).epsilon(1e-12));
  using testutil::gaussian_ratio_integral;
  const double want = gaussian_ratio_integral(1.05, 1.05, 0.85) +
                      gaussian_ratio_integral(1.0, 1.0, 0.85) -
                      2.0 * gaussian_ratio_integral(1.05, 1.0, 0.85);
  CHECK(weighted_l2_error(Mf, Mr, Ms, *g) == doctest::Approx(want).epsilon(1e-6));
  CHECK(weighted_l2_error(Mf, Mr, Ms, *g) > 0.0);
}

TEST_CASE("global Maxwellian window") {
  CHECK(mstar_window_ok(0.85, 1.0, 1.0));
  CHECK_FALSE(mstar_window_ok(1.0, 1.0, 1.0));
  CHECK_FALSE(mstar_window_ok(1.3, 1.0, 1.2));
  CHECK_FALSE(mstar_window_ok(0.55, 1.0, 1.2));
  CHECK_THROWS_WITH_AS(check_mstar_window(1.3, 1.0, 1.2, "mstar.theta"),
                       doctest::Contains("mstar.theta"), PreconditionError);
  const auto d = default_mstar(1.0, 1.0 / 1.2, 1.0, 1.2);
  CHECK(d.theta == doctest::Approx(0.9));
  CHECK(d.u[0] == 0.0);
}
