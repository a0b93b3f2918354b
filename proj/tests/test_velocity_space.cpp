#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "helpers.hpp"
#include "kinlim/error.hpp"
#include "kinlim/velocity_space.hpp"

using namespace kinlim;

TEST_CASE("grid construction rejects bad parameters") {
  CHECK_THROWS_AS(VelocityGrid::build({7, 8, 8}, 6, 1.0), PreconditionError);
  CHECK_THROWS_AS(VelocityGrid::build({8, 8, 8}, 3.5, 1.0), PreconditionError);
  CHECK_THROWS_AS(VelocityGrid::build({8, 8, 8}, 6, 0.0), PreconditionError);
}

TEST_CASE("grid weights sum to the box volume and nodes are symmetric") {
  const auto g = VelocityGrid::build({16, 12, 12}, 6, 1.2);
  double s = 0.0;
  for (double w : g->weights()) {
    CHECK(w > 0.0);
    s += w;
  }
  CHECK(s == doctest::Approx(g->volume()).epsilon(1e-13));
  const auto [n1, n2, n3] = g->counts();
  for (int i = 0; i < n1; ++i) CHECK(g->axis_node(0, i) == -g->axis_node(0, n1 - 1 - i));
  (void)n2;
  (void)n3;
  CHECK(g->metadata()["rule"] == "product-trapezoid");
}

TEST_CASE("odd moment of a centred Maxwellian vanishes") {
  const auto g = VelocityGrid::build({16, 12, 12}, 6, 1.2);
  const auto M = maxwellian({1, {0, 0, 0}, 1}, *g);
  double s = 0.0, scale = 0.0;
  const auto x1 = g->xi1(), w = g->weights();
  for (std::size_t k = 0; k < M.size(); ++k) {
    s += w[k] * x1[k] * M[k];
    scale += w[k] * std::abs(x1[k]) * M[k];
  }
  CHECK(std::abs(s) <= 1e-15 * scale);
}

TEST_CASE("Maxwellian peak and closed-form moments") {
  // Reference grid for the rest state; trapezoid error is spectral in sigma/spacing.
  const auto g = VelocityGrid::build({24, 16, 16}, 6, 1.2);
  const auto M = maxwellian({1, {0, 0, 0}, 1}, *g);
  double peak = 0.0;
  for (double v : M) peak = std::max(peak, v);
  // The origin is not a node on an even grid; evaluate the formula there directly.
  const double expected = 1.0 / std::sqrt(std::pow(4.0 * std::numbers::pi / 3.0, 3));
  CHECK(peak < expected);
  const auto m1 = moments(M, *g);
  CHECK(m1.rho == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(m1.energy == doctest::Approx(1.0).epsilon(1e-8));

  // A hotter state needs the box sized for its temperature.
  const auto g2 = VelocityGrid::build({24, 16, 16}, 6, 1.8);
  const Primitive s{2.0, {0.1, 0.0, 0.0}, 1.5};
  const auto m = moments(maxwellian(s, *g2), *g2);
  CHECK(std::abs(m.rho - 2.0) <= 1e-8 * 2.0);
  CHECK(std::abs(m.m[0] - 0.2) <= 1e-8 * 2.0);
  CHECK(std::abs(m.m[1]) <= 1e-12);
  CHECK(std::abs(m.energy - 2.0 * (1.5 + 0.005)) <= 1e-8 * 3.01);
}

TEST_CASE("Maxwellian formula at an explicit node") {
  const auto g = VelocityGrid::build({9, 9, 9}, 6, 1.0);  // odd counts put 0 on a node
  const auto M = maxwellian({1, {0, 0, 0}, 1}, *g);
  const double expected = 1.0 / std::sqrt(std::pow(4.0 * std::numbers::pi / 3.0, 3));
  CHECK(M[g->index(4, 4, 4)] == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("moments are linear") {
  const auto g = VelocityGrid::build({24, 24, 24}, 6, 1.8);
  const auto a = maxwellian({1, {0, 0, 0}, 1}, *g);
  auto b = maxwellian({1, {0, 0, 0}, 1.2}, *g);
  const auto ma = moments(a, *g), mb = moments(b, *g);
  for (std::size_t k = 0; k < b.size(); ++k) b[k] += a[k];
  const auto ms = moments(b, *g);
  CHECK(ms.rho == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(ms.energy == doctest::Approx(2.2).epsilon(1e-8));
  CHECK(ms.rho == doctest::Approx(ma.rho + mb.rho).epsilon(1e-14));
  CHECK(moments(std::vector<double>(g->size(), 0.0), *g).rho == 0.0);
}

TEST_CASE("primitive inversion") {
  const auto p = primitive_from_conserved({2, {2, 0, 0}, 2 * (1.5 + 0.5)});
  CHECK(p.rho == 2.0);
  CHECK(p.u[0] == 1.0);
  CHECK(p.theta == doctest::Approx(1.5));
  CHECK_THROWS_AS(primitive_from_conserved({0, {0, 0, 0}, 1}), PreconditionError);
  CHECK_THROWS_AS(primitive_from_conserved({1, {2, 0, 0}, 1}), PreconditionError);
}

TEST_CASE("property: moment round trip over random states") {
  const auto g = VelocityGrid::build({24, 24, 24}, 6, 2.0);
  std::mt19937_64 rng(20260101);
  std::uniform_real_distribution<double> rho(0.5, 2.0), u(-0.3, 0.3), th(0.8, 1.5);
  for (int t = 0; t < 25; ++t) {
    const Primitive s{rho(rng), {u(rng), u(rng), u(rng)}, th(rng)};
    const auto M = maxwellian(s, *g);
    for (double v : M) REQUIRE(v > 0.0);
    const auto p = primitive_from_conserved(moments(M, *g));
    CHECK(std::abs(p.rho - s.rho) <= 1e-8);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(p.u[i] - s.u[i]) <= 1e-8);
    CHECK(std::abs(p.theta - s.theta) <= 1e-8);
  }
}

TEST_CASE("matched Maxwellian reproduces target moments to rounding") {
  const auto g = VelocityGrid::build({12, 10, 10}, 4.5, 1.2);
  std::mt19937_64 rng(7);
  for (int t = 0; t < 10; ++t) {
    const auto f = testutil::random_slice(rng, *g);
    const auto target = moments(f, *g);
    std::vector<double> M(g->size());
    match_maxwellian(target, *g, M);
    const auto m = moments(M, *g);
    CHECK(std::abs(m.rho - target.rho) <= 1e-13 * target.rho);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(m.m[i] - target.m[i]) <= 1e-13 * target.rho);
    CHECK(std::abs(m.energy - target.energy) <= 1e-13 * target.energy);
  }
}

TEST_CASE("distribution field negativity count") {
  const auto g = VelocityGrid::build({8, 8, 8}, 4, 1.0);
  DistributionField d(g, -1.0, 0.5, 3, Frame::Eulerian);
  CHECK(d.values.size() == 3 * g->size());
  d.cell(1)[5] = -1e-3;
  CHECK(d.negative_count() == 1);
  CHECK(d.x(2) == 0.0);
}
