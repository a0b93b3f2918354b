#include <doctest.h>

#include "kinlim/config.hpp"
#include "kinlim/error.hpp"

using namespace kinlim;
using json = nlohmann::json;

TEST_CASE("defaults are materialized in the resolved document") {
  const auto rc = resolve_config("kinetic", json());
  CHECK(rc.resolved.at("profile").at("L") == 10.0);
  CHECK(rc.resolved.at("profile").at("n_eta") == 2001);
  CHECK(rc.resolved.at("profile").at("tol") == 1e-10);
  CHECK(rc.resolved.at("mstar").at("theta").is_null());
  CHECK(rc.scenario.L == 10.0);
  CHECK(rc.model.kind == CollisionKind::BGK);
  CHECK(rc.kinetic.snapshots == std::vector<double>{0.0, 0.25, 0.5, 1.0});
  CHECK(rc.sweep.epsilons == std::vector<double>{0.1, 0.05, 0.025, 0.0125});
  CHECK_FALSE(rc.explicit_mstar);
}

TEST_CASE("file values and overrides are applied") {
  const json file = {{"kinetic", {{"epsilon", 0.02}}}, {"model", {{"kind", "hard_sphere"}}}};
  const auto rc = resolve_config("kinetic", file, {{"kinetic.n_cells", 120}, {"mstar.theta", 0.9}});
  CHECK(rc.kinetic.epsilon == 0.02);
  CHECK(rc.kinetic.n_cells == 120);
  CHECK(rc.model.kind == CollisionKind::HardSphere);
  CHECK(rc.explicit_mstar);
  CHECK(rc.mstar.theta == 0.9);
  CHECK(rc.resolved.at("kinetic").at("n_cells") == 120);
}

TEST_CASE("invalid values are rejected with the key name") {
  CHECK_THROWS_WITH_AS(resolve_config("kinetic", json(), {{"mstar.theta", 1.3}}),
                       doctest::Contains("mstar.theta"), PreconditionError);
  CHECK_THROWS_WITH_AS(resolve_config("sweep", json(), {{"sweep.epsilons", json{0.1, 0.1}}}),
                       doctest::Contains("sweep.epsilons"), PreconditionError);
  CHECK_THROWS_WITH_AS(resolve_config("kinetic", json{{"kinetic", {{"epsilonn", 0.1}}}}),
                       doctest::Contains("kinetic.epsilonn"), PreconditionError);
  CHECK_THROWS_WITH_AS(resolve_config("kinetic", json(), {{"fluid.cfl", 1.5}}),
                       doctest::Contains("fluid.cfl"), PreconditionError);
  CHECK_THROWS_WITH_AS(resolve_config("kinetic", json(), {{"model.kind", "maxwell"}}),
                       doctest::Contains("model.kind"), PreconditionError);
  CHECK_THROWS_WITH_AS(resolve_config("kinetic", json(), {{"kinetic.snapshots", json{0.5, 3.0}}}),
                       doctest::Contains("kinetic.snapshots"), PreconditionError);
  CHECK_THROWS_WITH_AS(resolve_config("kinetic", json(), {{"velocity_grid.theta_max", 1.0}}),
                       doctest::Contains("velocity_grid.theta_max"), PreconditionError);
  CHECK_THROWS_AS(resolve_config("plot", json()), PreconditionError);
}

TEST_CASE("config hash depends only on the resolved values") {
  const auto a = resolve_config("kinetic", json());
  const auto b = resolve_config("kinetic", json{{"kinetic", {{"epsilon", 0.05}}}});
  const auto c = resolve_config("kinetic", json(), {{"kinetic.epsilon", 0.04}});
  CHECK(a.hash() == b.hash());
  CHECK(a.hash() != c.hash());
  CHECK(a.hash().size() == 16);
}
