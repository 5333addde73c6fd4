#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "driftguard/belief.hpp"
#include "driftguard/covariance.hpp"
#include "driftguard/isolation_forest.hpp"
#include "driftguard/kinematics.hpp"
#include "driftguard/state.hpp"
#include "driftguard/survival.hpp"

namespace driftguard {

struct PipelineConfig {
    double trigger_threshold = 0.6;   // scout score above this runs tier 2
    double hazard_threshold = 1.0;    // alert when the hazard exceeds this
    double survival_threshold = 0.5;  // advisory crossing reported per turn
    double audit_probability = 0.05;  // forced tier-2 rate, independent of the scout
    std::uint64_t audit_seed = 0;
    bool require_positive_acceleration = true;
    int trace_capacity = 8;

    void validate() const;
};

enum class Verdict { kContinue, kAlert };

/// Per-turn outputs of the cascade, mirrored one-to-one onto the monitor's
/// JSON lines.
struct TurnAssessment {
    int turn = 0;
    double s_iso = 0.0;
    bool triggered = false;
    bool audited = false;
    double d_m = 0.0;
    bool d_m_carried = false;  // tier 2 skipped; value carried from the last computation
    double a_t = 0.0;
    bool warm_up = false;  // fewer than three distance samples so far
    double p_malicious = 0.0;
    double hazard = 0.0;
    double survival = 1.0;
    bool survival_breached = false;
    Verdict verdict = Verdict::kContinue;
};

/// Immutable models shared across sessions. The AFT partner is optional; when
/// present the per-turn hazard is the ensemble maximum.
struct ModelBundle {
    IsolationForest forest;
    ManifoldModel manifold;
    HmmParams hmm;
    std::optional<CoxModel> cox;
    std::optional<AftModel> aft;

    /// Throws ConfigError when a required model is missing or unfitted.
    void require_ready_for_monitoring() const;
};

/// Deterministic Bernoulli(p_audit) draw keyed by (audit_seed, session_id,
/// turn_index); independent of the scout score by construction.
bool schedule_audit(const PipelineConfig& config, std::string_view session_id,
                    int turn_index);

/// Single-session runtime state: distance trace, belief, and cumulative hazard.
/// One writer per session; distinct sessions are independent.
class SessionMonitor {
public:
    SessionMonitor(std::string session_id, const ModelBundle& models,
                   const PipelineConfig& config);

    /// Runs one turn through the cascade. Turns must arrive consecutively.
    TurnAssessment assess_turn(const StateVector& v);

    bool alerted() const { return alerted_; }
    double cumulative_hazard() const { return cumulative_hazard_; }
    const std::string& session_id() const { return session_id_; }

private:
    std::string session_id_;
    const ModelBundle& models_;
    const PipelineConfig& config_;
    DistanceTrace trace_;
    BeliefState belief_;
    double cumulative_hazard_ = 0.0;
    double carried_distance_ = 0.0;
    bool has_distance_ = false;
    int last_turn_ = 0;
    bool alerted_ = false;
};

/// Assesses a whole trajectory; stops after the first alert unless early_stop
/// is disabled (the property-check harness needs the full path).
std::vector<TurnAssessment> run_session(const SessionTrajectory& trajectory,
                                        const ModelBundle& models,
                                        const PipelineConfig& config,
                                        bool early_stop = true);

/// Training-time feature extraction: full tier-2 on every turn, no cascade
/// gating and no survival model required. Rows stop at the event turn when an
/// outcome is given.
std::vector<CovariateRow> extract_covariates(const SessionTrajectory& trajectory,
                                             const ModelBundle& models,
                                             const PipelineConfig& config);

/// One JSON object per assessment, as emitted by the monitor.
std::string assessment_json_line(const std::string& session_id, const TurnAssessment& a);

}  // namespace driftguard
