#include <doctest.h>

#include "driftguard/config.hpp"
#include "driftguard/errors.hpp"

using namespace driftguard;

TEST_SUITE("config") {

TEST_CASE("defaults match the documented engine configuration") {
    const EngineConfig c;
    CHECK(c.forest.n_trees == 100);
    CHECK(c.forest.subsample_size == 256);
    CHECK(c.manifold.components == 1);
    CHECK(c.pipeline.trigger_threshold == 0.6);
    CHECK(c.pipeline.hazard_threshold == 1.0);
    CHECK(c.pipeline.survival_threshold == 0.5);
    CHECK(c.pipeline.audit_probability == 0.05);
    CHECK(c.pipeline.require_positive_acceleration);
    CHECK(c.survival.cox.ridge == 1e-4);
    CHECK(c.survival.hazard_floor == 1e-4);
    CHECK_FALSE(c.survival.cox.include_belief);  // matches the bare alert predicate
    CHECK_FALSE(c.survival.use_aft);
    CHECK(c.belief.prior_malicious == 0.01);
    CHECK(c.belief.persist_malicious == 0.98);
}

TEST_CASE("sections, comments, strings, and scalars parse") {
    const auto table = ConfigTable::parse_string(R"(
# engine tuning
[forest]
n_trees = 64          # fewer trees
subsample = 128

[pipeline]
trigger_threshold = 0.55
require_positive_acceleration = false

[misc]
label = "some text # with a hash"
)");
    CHECK(table.get_int("forest.n_trees", 0) == 64);
    CHECK(table.get_double("pipeline.trigger_threshold", 0) == 0.55);
    CHECK_FALSE(table.get_bool("pipeline.require_positive_acceleration", true));
    CHECK(table.get_string("misc.label", "") == "some text # with a hash");
    // Integers widen where a float is expected.
    CHECK(table.get_double("forest.subsample", 0) == 128.0);
}

TEST_CASE("engine config picks up file values") {
    const auto config = EngineConfig::from_string(R"(
[forest]
n_trees = 32
subsample = 64
seed = 7

[survival]
include_belief = true
use_aft = true
ridge = 0.01

[pipeline]
trigger_threshold = 0.52
audit_probability = 0.2
auto_hazard_threshold = true
)");
    CHECK(config.forest.n_trees == 32);
    CHECK(config.forest.seed == 7);
    CHECK(config.survival.cox.include_belief);
    CHECK(config.survival.aft.include_belief);
    CHECK(config.survival.use_aft);
    CHECK(config.survival.cox.ridge == 0.01);
    CHECK(config.pipeline.trigger_threshold == 0.52);
    CHECK(config.auto_hazard_threshold);
}

TEST_CASE("unknown keys are rejected by name") {
    CHECK_THROWS_WITH_AS(EngineConfig::from_string("[forest]\ntrees = 10\n"),
                         doctest::Contains("forest.trees"), ConfigError);
}

TEST_CASE("syntax errors carry line context") {
    CHECK_THROWS_WITH_AS(ConfigTable::parse_string("[forest\nx = 1\n"),
                         doctest::Contains(":1"), ConfigError);
    CHECK_THROWS_WITH_AS(ConfigTable::parse_string("[a]\njust words\n"),
                         doctest::Contains(":2"), ConfigError);
    CHECK_THROWS_WITH_AS(ConfigTable::parse_string("[a]\nx = @@\n"),
                         doctest::Contains("@@"), ConfigError);
    CHECK_THROWS_WITH_AS(ConfigTable::parse_string("x = 1\nx = 2\n"),
                         doctest::Contains("duplicate"), ConfigError);
}

TEST_CASE("type mismatches are reported") {
    const auto table = ConfigTable::parse_string("[a]\nx = 1.5\ny = \"s\"\n");
    CHECK_THROWS_AS(table.get_int("a.x", 0), ConfigError);
    CHECK_THROWS_AS(table.get_bool("a.y", false), ConfigError);
}

TEST_CASE("invalid pipeline values fail validation on load") {
    CHECK_THROWS_AS(EngineConfig::from_string("[pipeline]\ntrigger_threshold = 1.5\n"),
                    ConfigError);
    CHECK_THROWS_AS(EngineConfig::from_string("[survival]\nhazard_floor = -1.0\n"),
                    ConfigError);
}

TEST_CASE("seed override reaches every seeded component") {
    EngineConfig config;
    config.override_seeds(99);
    CHECK(config.forest.seed == 99);
    CHECK(config.manifold.seed == 100);
    CHECK(config.pipeline.audit_seed == 101);
}

}  // TEST_SUITE
