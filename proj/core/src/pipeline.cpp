#include "driftguard/pipeline.hpp"

#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "driftguard/errors.hpp"
#include "driftguard/rng.hpp"

namespace driftguard {

void PipelineConfig::validate() const {
    if (!(trigger_threshold > 0.0) || !(trigger_threshold < 1.0)) {
        throw ConfigError("pipeline: trigger threshold must lie in (0, 1)");
    }
    if (!(hazard_threshold > 0.0)) {
        throw ConfigError("pipeline: hazard threshold must be > 0");
    }
    if (!(survival_threshold > 0.0) || !(survival_threshold < 1.0)) {
        throw ConfigError("pipeline: survival threshold must lie in (0, 1)");
    }
    if (audit_probability < 0.0 || audit_probability > 1.0) {
        throw ConfigError("pipeline: audit probability must lie in [0, 1]");
    }
    if (trace_capacity < 3) {
        throw ConfigError("pipeline: trace capacity must be >= 3");
    }
}

void ModelBundle::require_ready_for_monitoring() const {
    if (!forest.fitted()) throw ConfigError("pipeline: isolation forest not loaded");
    if (manifold.size() == 0) throw ConfigError("pipeline: baseline model not loaded");
    if (!cox) throw ConfigError("pipeline: survival model not loaded");
    if (forest.dimension() != manifold.dimension()) {
        throw ConfigError("pipeline: forest and baseline dimensions disagree");
    }
}

bool schedule_audit(const PipelineConfig& config, std::string_view session_id,
                    int turn_index) {
    return keyed_unit_draw(config.audit_seed, session_id,
                           static_cast<std::uint64_t>(turn_index)) <
           config.audit_probability;
}

SessionMonitor::SessionMonitor(std::string session_id, const ModelBundle& models,
                               const PipelineConfig& config)
    : session_id_(std::move(session_id)),
      models_(models),
      config_(config),
      trace_(config.trace_capacity),
      belief_(init_belief(models.hmm)) {
    config.validate();
    models.require_ready_for_monitoring();
}

TurnAssessment SessionMonitor::assess_turn(const StateVector& v) {
    if (v.turn_index() != last_turn_ + 1) {
        throw ValidationError("session " + session_id_ + ": expected turn " +
                              std::to_string(last_turn_ + 1) + ", got " +
                              std::to_string(v.turn_index()));
    }
    last_turn_ = v.turn_index();

    TurnAssessment a;
    a.turn = v.turn_index();
    a.s_iso = models_.forest.score(v);
    a.audited = schedule_audit(config_, session_id_, a.turn);
    a.triggered = a.s_iso > config_.trigger_threshold;

    if (a.triggered || a.audited) {
        a.d_m = models_.manifold.mahalanobis(v.values());
        trace_.push(a.turn, a.d_m);
        carried_distance_ = a.d_m;
        has_distance_ = true;

        const auto accel = trace_.acceleration();
        a.warm_up = !accel.has_value();
        a.a_t = accel.value_or(0.0);

        belief_ = update_belief(models_.hmm, belief_, a.d_m, a.a_t);
        a.p_malicious = belief_.p_malicious;

        const CovariateVector z(a.d_m, a.s_iso, a.a_t, a.p_malicious);
        a.hazard = ensemble_hazard(models_.cox->hazard(a.turn, z), models_.aft, a.turn, z);

        if (a.hazard > config_.hazard_threshold &&
            (a.a_t > 0.0 || !config_.require_positive_acceleration)) {
            a.verdict = Verdict::kAlert;
            alerted_ = true;
        }
    } else {
        // Skip branch: carry tier-2 state forward, accrue only the floor.
        a.d_m = carried_distance_;
        a.d_m_carried = true;
        a.warm_up = trace_.size() < 3;
        a.p_malicious = belief_.p_malicious;
        a.hazard = models_.cox->hazard_floor;
    }

    cumulative_hazard_ += a.hazard;
    a.survival = std::exp(-cumulative_hazard_);
    a.survival_breached = a.survival < config_.survival_threshold;
    return a;
}

std::vector<TurnAssessment> run_session(const SessionTrajectory& trajectory,
                                        const ModelBundle& models,
                                        const PipelineConfig& config, bool early_stop) {
    std::vector<TurnAssessment> out;
    if (trajectory.empty()) return out;
    SessionMonitor monitor(trajectory.session_id, models, config);
    out.reserve(trajectory.turns.size());
    for (const auto& turn : trajectory.turns) {
        out.push_back(monitor.assess_turn(turn));
        if (early_stop && out.back().verdict == Verdict::kAlert) break;
    }
    return out;
}

std::vector<CovariateRow> extract_covariates(const SessionTrajectory& trajectory,
                                             const ModelBundle& models,
                                             const PipelineConfig& config) {
    if (!models.forest.fitted() || models.manifold.size() == 0) {
        throw ConfigError("covariate extraction: baseline models not loaded");
    }
    const int last_turn = trajectory.outcome && trajectory.outcome->has_event()
                              ? trajectory.outcome->event_turn
                              : trajectory.length();

    std::vector<CovariateRow> rows;
    rows.reserve(last_turn);
    DistanceTrace trace(config.trace_capacity);
    BeliefState belief = init_belief(models.hmm);
    for (const auto& turn : trajectory.turns) {
        if (turn.turn_index() > last_turn) break;
        CovariateRow row;
        row.session_id = trajectory.session_id;
        row.turn = turn.turn_index();
        const double s_iso = models.forest.score(turn);
        const double d_m = models.manifold.mahalanobis(turn.values());
        trace.push(row.turn, d_m);
        const double a_t = trace.acceleration().value_or(0.0);
        belief = update_belief(models.hmm, belief, d_m, a_t);
        row.z = CovariateVector(d_m, s_iso, a_t, belief.p_malicious);
        row.event = trajectory.outcome && trajectory.outcome->has_event() &&
                    row.turn == trajectory.outcome->event_turn;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string assessment_json_line(const std::string& session_id, const TurnAssessment& a) {
    nlohmann::json j;
    j["session_id"] = session_id;
    j["turn"] = a.turn;
    j["s_iso"] = a.s_iso;
    j["triggered"] = a.triggered;
    j["audited"] = a.audited;
    j["d_m"] = a.d_m;
    j["d_m_carried"] = a.d_m_carried;
    j["a_t"] = a.a_t;
    j["warm_up"] = a.warm_up;
    j["p_malicious"] = a.p_malicious;
    j["hazard"] = a.hazard;
    j["survival"] = a.survival;
    j["survival_breached"] = a.survival_breached;
    j["verdict"] = a.verdict == Verdict::kAlert ? "alert" : "continue";
    return j.dump();
}

}  // namespace driftguard
