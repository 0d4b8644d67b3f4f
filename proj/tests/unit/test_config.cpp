#include "doctest.h"

#include "spdens/config.hpp"

using namespace spdens;
using nlohmann::json;

namespace {

json base() {
  return json::parse(R"({
    "model": {"kernel": "wave", "measure": {"type": "riesz", "beta": 1.0}, "d": 2, "T": 1.0,
              "sigma": "sin1p:1", "b": "const:0", "sigma0": 0.5},
    "simulation": {"N": 64, "L": 8, "dt": 0.03125, "replicas": 10, "seed": 4}
  })");
}

}  // namespace

TEST_CASE("valid config fills defaults") {
  const auto c = parse_config(base());
  CHECK(c.model.d == 2);
  CHECK(c.model.measure.beta() == doctest::Approx(1.0));
  CHECK(c.model.lipschitz_sigma == doctest::Approx(c.model.sigma.lipschitz));
  CHECK(c.simulation.t == doctest::Approx(1.0));
  CHECK(c.simulation.grid.d == 2);
  CHECK(c.simulation.seed == 4);
  CHECK(c.analysis.n == 2);
  CHECK(c.analysis.fraction == doctest::Approx(0.8));
  CHECK(c.output_dir == "out");
}

TEST_CASE("physical constraints are rejected with ConfigError") {
  auto bad = [](auto edit) {
    json j = base();
    edit(j);
    return j;
  };
  CHECK_THROWS_AS(parse_config(bad([](json& j) { j["model"]["measure"]["beta"] = 2.5; })), ConfigError);
  CHECK_THROWS_AS(parse_config(bad([](json& j) { j["model"]["measure"]["beta"] = 2.0; })), ConfigError);
  CHECK_THROWS_AS(parse_config(bad([](json& j) { j["model"]["kernel"] = "schrodinger"; })), ConfigError);
  CHECK_THROWS_AS(parse_config(bad([](json& j) { j["model"]["sigma"] = "exp:1"; })), ConfigError);
  CHECK_THROWS_AS(parse_config(bad([](json& j) { j["model"]["sigma0"] = 0.6; })), ConfigError);
  CHECK_THROWS_AS(parse_config(bad([](json& j) { j["model"]["lipschitz_sigma"] = 0.1; })), ConfigError);
  CHECK_THROWS_AS(parse_config(bad([](json& j) { j["simulation"]["dt"] = 0.03; })), ConfigError);
  CHECK_THROWS_AS(parse_config(bad([](json& j) { j["simulation"]["N"] = 48; })), ConfigError);
  CHECK_THROWS_AS(parse_config(bad([](json& j) { j["simulation"]["eps"] = 0.1; })), ConfigError);
  CHECK_THROWS_AS(parse_config(bad([](json& j) { j["simulation"]["replicas"] = -1; })), ConfigError);
  CHECK_THROWS_AS(parse_config(bad([](json& j) { j["simulation"]["typo"] = 1; })), ConfigError);
  CHECK_THROWS_AS(parse_config(bad([](json& j) { j["analysis"]["alpha"] = 1.0; })), ConfigError);
  CHECK_THROWS_AS(parse_config(bad([](json& j) { j["analysis"]["s_grid"] = {0.5, 2.0}; })), ConfigError);
  CHECK_THROWS_AS(parse_config(bad([](json& j) { j["analysis"]["master_replicas"] = 10; })), ConfigError);
  CHECK_THROWS_AS(parse_config(bad([](json& j) {
                    j["simulation"]["increments"] = {{"s", 0.5}, {"lags", {0.25, 0.75}}};
                  })),
                  ConfigError);
}

TEST_CASE("atom measures and eps on the time grid") {
  json j = base();
  j["model"]["measure"] = {{"type", "atoms"}, {"atoms", {{{"xi", {1.0, 0.0}}, {"mass", 2.0}}}}};
  j["simulation"]["eps"] = 0.25;
  const auto c = parse_config(j);
  CHECK(c.model.measure.kind() == MeasureKind::FiniteAtoms);
  CHECK(c.model.measure.total_mass() == doctest::Approx(2.0));
  REQUIRE(c.simulation.eps);
  CHECK(*c.simulation.eps == doctest::Approx(0.25));

  j["model"]["measure"]["atoms"][0]["xi"] = {1.0};
  CHECK_THROWS_AS(parse_config(j), ConfigError);
}

TEST_CASE("version info names the numeric dependencies") {
  const auto v = version_info();
  CHECK(v.contains("fftw"));
  CHECK(v.contains("boost"));
  CHECK(v.contains("gsl"));
}
