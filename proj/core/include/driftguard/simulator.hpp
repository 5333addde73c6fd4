#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "driftguard/pipeline.hpp"
#include "driftguard/state.hpp"

namespace driftguard {

enum class Profile { kBenign, kCrescendo, kShock, kBoilingFrog };

std::string_view to_string(Profile p);
Profile profile_from_string(std::string_view s);

/// High entropy mimics human variability (i.i.d. draws at baseline spread);
/// low entropy mimics automated dispatch (near-constant covariates, variance
/// at most 1% of baseline).
enum class BehavioralEntropy { kHigh, kLow };

struct ScenarioSpec {
    Profile profile = Profile::kBenign;
    int dimension = 64;
    int d_behavioral = 8;
    int n_turns = 40;
    double step_norm = 0.5;         // crescendo: constant per-turn drift norm
    double convergence_rate = 0.8;  // benign: geometric approach rate
    double payload_norm = 12.0;     // shock: single final injection
    double margin = 0.1;            // boiling frog: score band below alpha
    double alpha = 0.6;             // boiling frog: scout threshold to stay under
    BehavioralEntropy entropy = BehavioralEntropy::kHigh;
    double noise_scale = 0.01;      // benign semantic jitter
    double event_threshold = 10.0;  // cumulative injected deviation that marks failure
    /// Scales the opening deviation from the baseline mean; below 1 the
    /// session starts innocuously close to typical states.
    double start_scale = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

/// One generated session plus its generator-side ground truth.
struct GeneratedSession {
    SessionTrajectory trajectory;
    Profile profile = Profile::kBenign;
    std::optional<int> event_turn;               // absent = censored
    std::vector<Eigen::VectorXd> injected_steps; // semantic drift actually applied
    Eigen::VectorXd local_target;                // benign convergence target
};

struct GeneratedCorpus {
    std::vector<GeneratedSession> sessions;
    std::vector<StateVector> baseline_sample;
};

/// Draws a baseline from a seeded K-component Gaussian mixture; components are
/// separated along the first semantic coordinate. Behavioral coordinates are
/// standard normal (pre z-scored). The semantic block carries a geometrically
/// decaying eigenvalue spectrum (max/min ratio = anisotropy, unit average
/// variance) under a seeded random rotation, so the baseline has an actual
/// covariance structure to anchor to; anisotropy = 1 gives unit covariance.
std::vector<StateVector> generate_baseline(int dimension, int n, int k_true,
                                           std::uint64_t seed, double separation = 10.0,
                                           int d_behavioral = 8, double anisotropy = 16.0);

/// Generates one session against the calibrated baseline. Crescendo, shock,
/// and boiling-frog drift directions live in the orthogonal complement of the
/// principal subspace covering 90% of the baseline's semantic variance. The
/// boiling-frog profile needs the fitted forest and sizes each step by
/// bisection so the scout score stays within `margin` below `alpha`.
GeneratedSession generate_session(const ScenarioSpec& spec, const ModelBundle& models,
                                  const std::string& session_id);

// ---------------------------------------------------------------------------
// Property checks and the snapshot comparison.

struct SessionCheck {
    std::string session_id;
    Profile profile = Profile::kBenign;
    bool passed = true;
    std::optional<int> crossing_turn;  // first S(t) < tau (failure-bound check)
    double mean_acceleration = 0.0;    // post-warm-up (acceleration check)
    std::string detail;
};

struct PropertyReport {
    std::string name;
    int sessions_checked = 0;
    int failures = 0;
    std::vector<SessionCheck> sessions;

    bool all_passed() const { return failures == 0; }
};

/// Bounded time-to-failure: on every crescendo session the cumulative hazard
/// is nondecreasing, survival is nonincreasing, the survival threshold is
/// crossed at a finite turn within the session, and the drift step satisfies
/// the quadratic lower bound at the baseline mean.
PropertyReport verify_failure_bound(const GeneratedCorpus& corpus, const ModelBundle& models,
                                    const PipelineConfig& config);

struct AccelerationCheckOptions {
    int warm_up_turns = 5;
    double benign_tolerance_factor = 0.05;  // of the session's initial distance
};

/// Acceleration sign separation: crescendo sessions keep a positive mean
/// post-warm-up acceleration; benign sessions end with final-quartile
/// accelerations at or below the decay tolerance.
PropertyReport verify_acceleration_sign(const GeneratedCorpus& corpus,
                                        const ModelBundle& models,
                                        const PipelineConfig& config,
                                        const AccelerationCheckOptions& options = {});

struct ComparisonRow {
    std::string session_id;
    Profile profile = Profile::kBenign;
    std::optional<int> event_turn;
    std::optional<int> cascade_turn;   // first cascade alert
    std::optional<int> snapshot_turn;  // first single-turn distance exceedance
};

struct ComparisonReport {
    double snapshot_threshold = 0.0;
    bool threshold_calibrated = false;
    int benign_sessions = 0;
    int attack_sessions = 0;
    double cascade_benign_alert_rate = 0.0;
    double snapshot_benign_alert_rate = 0.0;
    double cascade_detection_rate = 0.0;
    double snapshot_detection_rate = 0.0;
    std::vector<ComparisonRow> rows;
    // survival_curves[d][t] = fraction of attack sessions not yet detected by
    // detector d after turn t+1 (d: 0 = cascade, 1 = snapshot).
    std::vector<std::vector<double>> survival_curves;
};

/// Runs both detectors over the corpus. Without an explicit threshold the
/// memoryless snapshot baseline is calibrated on the benign sessions to match
/// the cascade's benign false-alert rate.
ComparisonReport comparative_evaluation(const GeneratedCorpus& corpus,
                                        const ModelBundle& models,
                                        const PipelineConfig& config,
                                        std::optional<double> snapshot_threshold = {});

}  // namespace driftguard
