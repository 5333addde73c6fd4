#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <variant>

#include "driftguard/belief.hpp"
#include "driftguard/covariance.hpp"
#include "driftguard/isolation_forest.hpp"
#include "driftguard/pipeline.hpp"
#include "driftguard/simulator.hpp"
#include "driftguard/survival.hpp"

namespace driftguard {

/// Minimal TOML-compatible key/value document: [section] headers, scalar
/// values (integer, float, boolean, quoted string), # comments. Flat keys are
/// exposed as "section.key".
class ConfigTable {
public:
    using Value = std::variant<std::int64_t, double, bool, std::string>;

    static ConfigTable parse(std::istream& in, const std::string& origin = "<config>");
    static ConfigTable parse_string(const std::string& text);
    static ConfigTable parse_file(const std::string& path);

    bool contains(const std::string& key) const { return values_.count(key) > 0; }

    // Typed getters; consume marks keys as recognized so unknown keys can be
    // reported afterwards. Integers widen to double where a float is expected.
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
    double get_double(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    std::optional<double> get_optional_double(const std::string& key) const;

    /// Keys never touched by any getter; nonempty means a typo in the file.
    std::vector<std::string> unrecognized_keys() const;

private:
    const Value* find(const std::string& key) const;
    std::map<std::string, Value> values_;
    mutable std::map<std::string, bool> consumed_;
    std::string origin_;
};

/// Full engine configuration with the documented defaults.
struct EngineConfig {
    ForestParams forest;
    MixtureFitParams manifold;
    BeliefConfig belief;

    struct SurvivalConfig {
        CoxFitOptions cox;
        AftFitOptions aft;
        bool use_aft = false;
        double hazard_floor = 1e-4;
    } survival;

    PipelineConfig pipeline;
    /// Replace the hazard threshold with the training-time suggestion stored
    /// in the survival artifact, when one is present.
    bool auto_hazard_threshold = false;

    struct EvaluationConfig {
        AccelerationCheckOptions acceleration;
        std::optional<double> snapshot_threshold;
    } evaluation;

    EngineConfig();

    static EngineConfig from_table(const ConfigTable& table);
    static EngineConfig from_file(const std::string& path);
    static EngineConfig from_string(const std::string& text);

    /// Applies a command-line seed override to every seeded component.
    void override_seeds(std::uint64_t seed);
};

}  // namespace driftguard
