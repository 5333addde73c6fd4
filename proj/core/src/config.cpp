#include "driftguard/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "driftguard/errors.hpp"

namespace driftguard {

namespace {

std::string trim(std::string_view s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string_view::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return std::string(s.substr(begin, end - begin + 1));
}

// Strips a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

bool valid_key(const std::string& s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '_' || c == '-' || c == '.';
    });
}

ConfigTable::Value parse_value(const std::string& raw, const std::string& origin,
                               std::size_t line_no) {
    if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"') {
        return raw.substr(1, raw.size() - 2);
    }
    if (raw == "true") return true;
    if (raw == "false") return false;

    // Integer first, then float.
    {
        std::int64_t value{};
        const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), value);
        if (ec == std::errc() && ptr == raw.data() + raw.size()) return value;
    }
    {
        double value{};
        const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), value);
        if (ec == std::errc() && ptr == raw.data() + raw.size()) return value;
    }
    throw ConfigError(origin + ":" + std::to_string(line_no) + ": cannot parse value '" +
                      raw + "'");
}

}  // namespace

ConfigTable ConfigTable::parse(std::istream& in, const std::string& origin) {
    ConfigTable table;
    table.origin_ = origin;
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string content = trim(strip_comment(line));
        if (content.empty()) continue;
        if (content.front() == '[') {
            if (content.back() != ']') {
                throw ConfigError(origin + ":" + std::to_string(line_no) +
                                  ": unterminated section header");
            }
            section = trim(content.substr(1, content.size() - 2));
            if (!valid_key(section)) {
                throw ConfigError(origin + ":" + std::to_string(line_no) +
                                  ": invalid section name '" + section + "'");
            }
            continue;
        }
        const auto eq = content.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(line_no) +
                              ": expected key = value");
        }
        const std::string key = trim(content.substr(0, eq));
        if (!valid_key(key)) {
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": invalid key '" +
                              key + "'");
        }
        const std::string full = section.empty() ? key : section + "." + key;
        if (table.values_.count(full)) {
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key '" +
                              full + "'");
        }
        table.values_[full] =
            parse_value(trim(content.substr(eq + 1)), origin, line_no);
        table.consumed_[full] = false;
    }
    return table;
}

ConfigTable ConfigTable::parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
}

ConfigTable ConfigTable::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    return parse(in, path);
}

const ConfigTable::Value* ConfigTable::find(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return nullptr;
    consumed_[key] = true;
    return &it->second;
}

std::int64_t ConfigTable::get_int(const std::string& key, std::int64_t fallback) const {
    const Value* v = find(key);
    if (!v) return fallback;
    if (const auto* i = std::get_if<std::int64_t>(v)) return *i;
    throw ConfigError(origin_ + ": key '" + key + "' must be an integer");
}

double ConfigTable::get_double(const std::string& key, double fallback) const {
    const Value* v = find(key);
    if (!v) return fallback;
    if (const auto* d = std::get_if<double>(v)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(v)) return static_cast<double>(*i);
    throw ConfigError(origin_ + ": key '" + key + "' must be a number");
}

bool ConfigTable::get_bool(const std::string& key, bool fallback) const {
    const Value* v = find(key);
    if (!v) return fallback;
    if (const auto* b = std::get_if<bool>(v)) return *b;
    throw ConfigError(origin_ + ": key '" + key + "' must be true or false");
}

std::string ConfigTable::get_string(const std::string& key,
                                    const std::string& fallback) const {
    const Value* v = find(key);
    if (!v) return fallback;
    if (const auto* s = std::get_if<std::string>(v)) return *s;
    throw ConfigError(origin_ + ": key '" + key + "' must be a quoted string");
}

std::optional<double> ConfigTable::get_optional_double(const std::string& key) const {
    if (!contains(key)) return std::nullopt;
    return get_double(key, 0.0);
}

std::vector<std::string> ConfigTable::unrecognized_keys() const {
    std::vector<std::string> out;
    for (const auto& [key, used] : consumed_) {
        if (!used) out.push_back(key);
    }
    return out;
}

EngineConfig::EngineConfig() {
    // Engine-level defaults that differ from the bare fit options: the alert
    // predicate of the default configuration uses only the three covariates
    // of the per-turn hazard; the belief slot stays pinned at zero.
    survival.cox.include_belief = false;
    survival.aft.include_belief = false;
}

EngineConfig EngineConfig::from_table(const ConfigTable& table) {
    EngineConfig c;

    c.forest.n_trees = static_cast<int>(table.get_int("forest.n_trees", c.forest.n_trees));
    c.forest.subsample_size =
        static_cast<int>(table.get_int("forest.subsample", c.forest.subsample_size));
    c.forest.seed = static_cast<std::uint64_t>(table.get_int("forest.seed", 1));

    c.manifold.components =
        static_cast<int>(table.get_int("manifold.components", c.manifold.components));
    c.manifold.seed = static_cast<std::uint64_t>(table.get_int("manifold.seed", 1));
    c.manifold.max_iters =
        static_cast<int>(table.get_int("manifold.max_iters", c.manifold.max_iters));
    c.manifold.tol = table.get_double("manifold.tol", c.manifold.tol);
    c.manifold.forced_shrinkage = table.get_optional_double("manifold.forced_shrinkage");

    c.belief.persist_safe = table.get_double("belief.persist_safe", c.belief.persist_safe);
    c.belief.persist_malicious =
        table.get_double("belief.persist_malicious", c.belief.persist_malicious);
    c.belief.prior_malicious =
        table.get_double("belief.prior_malicious", c.belief.prior_malicious);
    c.belief.malicious_distance_offset = table.get_double(
        "belief.malicious_distance_offset", c.belief.malicious_distance_offset);
    c.belief.malicious_accel_offset =
        table.get_double("belief.malicious_accel_offset", c.belief.malicious_accel_offset);

    c.survival.cox.max_iters =
        static_cast<int>(table.get_int("survival.max_iters", c.survival.cox.max_iters));
    c.survival.cox.tol = table.get_double("survival.tol", c.survival.cox.tol);
    c.survival.cox.ridge = table.get_double("survival.ridge", c.survival.cox.ridge);
    c.survival.cox.include_belief =
        table.get_bool("survival.include_belief", c.survival.cox.include_belief);
    c.survival.aft.include_belief = c.survival.cox.include_belief;
    c.survival.aft.max_iters =
        static_cast<int>(table.get_int("survival.aft_max_iters", c.survival.aft.max_iters));
    c.survival.aft.tol = table.get_double("survival.aft_tol", c.survival.aft.tol);
    c.survival.use_aft = table.get_bool("survival.use_aft", c.survival.use_aft);
    c.survival.hazard_floor =
        table.get_double("survival.hazard_floor", c.survival.hazard_floor);

    c.pipeline.trigger_threshold =
        table.get_double("pipeline.trigger_threshold", c.pipeline.trigger_threshold);
    c.pipeline.hazard_threshold =
        table.get_double("pipeline.hazard_threshold", c.pipeline.hazard_threshold);
    c.pipeline.survival_threshold =
        table.get_double("pipeline.survival_threshold", c.pipeline.survival_threshold);
    c.pipeline.audit_probability =
        table.get_double("pipeline.audit_probability", c.pipeline.audit_probability);
    c.pipeline.audit_seed = static_cast<std::uint64_t>(table.get_int("pipeline.audit_seed", 1));
    c.pipeline.require_positive_acceleration = table.get_bool(
        "pipeline.require_positive_acceleration", c.pipeline.require_positive_acceleration);
    c.pipeline.trace_capacity =
        static_cast<int>(table.get_int("pipeline.trace_capacity", c.pipeline.trace_capacity));
    c.auto_hazard_threshold =
        table.get_bool("pipeline.auto_hazard_threshold", c.auto_hazard_threshold);

    c.evaluation.acceleration.warm_up_turns = static_cast<int>(
        table.get_int("evaluation.warm_up_turns", c.evaluation.acceleration.warm_up_turns));
    c.evaluation.acceleration.benign_tolerance_factor =
        table.get_double("evaluation.benign_tolerance_factor",
                         c.evaluation.acceleration.benign_tolerance_factor);
    c.evaluation.snapshot_threshold =
        table.get_optional_double("evaluation.snapshot_threshold");

    if (const auto unknown = table.unrecognized_keys(); !unknown.empty()) {
        std::string joined;
        for (const auto& k : unknown) {
            if (!joined.empty()) joined += ", ";
            joined += k;
        }
        throw ConfigError("unrecognized config keys: " + joined);
    }

    c.pipeline.validate();
    if (c.survival.hazard_floor < 0.0) {
        throw ConfigError("survival.hazard_floor must be >= 0");
    }
    return c;
}

EngineConfig EngineConfig::from_file(const std::string& path) {
    return from_table(ConfigTable::parse_file(path));
}

EngineConfig EngineConfig::from_string(const std::string& text) {
    return from_table(ConfigTable::parse_string(text));
}

void EngineConfig::override_seeds(std::uint64_t seed) {
    forest.seed = seed;
    manifold.seed = seed + 1;
    pipeline.audit_seed = seed + 2;
}

}  // namespace driftguard
