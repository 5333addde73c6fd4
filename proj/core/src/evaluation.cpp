#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "driftguard/errors.hpp"
#include "driftguard/kinematics.hpp"
#include "driftguard/simulator.hpp"

namespace driftguard {

namespace {

// Drift step of a generated session in joint coordinates (zero behavioral
// block). Falls back to the semantic difference of the first two turns when
// the ground-truth steps were not kept (corpus reloaded from disk).
Eigen::VectorXd first_injected_step(const GeneratedSession& session, int d_semantic) {
    const int dim = session.trajectory.turns.front().dimension();
    Eigen::VectorXd step = Eigen::VectorXd::Zero(dim);
    if (!session.injected_steps.empty()) {
        step.head(d_semantic) = session.injected_steps.front();
    } else if (session.trajectory.length() >= 2) {
        step.head(d_semantic) = session.trajectory.turns[1].values().head(d_semantic) -
                                session.trajectory.turns[0].values().head(d_semantic);
    }
    return step;
}

// Full (ungated) per-turn distance signal of a trajectory.
std::vector<double> distance_signal(const SessionTrajectory& trajectory,
                                    const ManifoldModel& manifold) {
    std::vector<double> out;
    out.reserve(trajectory.turns.size());
    for (const auto& turn : trajectory.turns) {
        out.push_back(manifold.mahalanobis(turn.values()));
    }
    return out;
}

}  // namespace

PropertyReport verify_failure_bound(const GeneratedCorpus& corpus, const ModelBundle& models,
                                    const PipelineConfig& config) {
    models.require_ready_for_monitoring();
    PropertyReport report;
    report.name = "bounded-time-to-failure";

    int dominant = 0;
    models.manifold.weights().maxCoeff(&dominant);
    const ShrunkGaussian& baseline = models.manifold.components()[dominant];

    for (const auto& session : corpus.sessions) {
        if (session.profile != Profile::kCrescendo) continue;  // control arms unconstrained
        if (session.trajectory.empty()) continue;
        const int d_semantic = session.trajectory.turns.front().semantic_dimension();
        ++report.sessions_checked;
        SessionCheck check;
        check.session_id = session.trajectory.session_id;
        check.profile = session.profile;
        std::ostringstream detail;

        const auto assessments = run_session(session.trajectory, models, config, false);

        double cumulative = 0.0;
        double prev_survival = 1.0;
        for (const auto& a : assessments) {
            if (a.hazard < 0.0) {
                check.passed = false;
                detail << "negative hazard at turn " << a.turn << "; ";
            }
            cumulative += a.hazard;
            if (a.survival > prev_survival + 1e-12) {
                check.passed = false;
                detail << "survival increased at turn " << a.turn << "; ";
            }
            prev_survival = a.survival;
            if (!check.crossing_turn && a.survival < config.survival_threshold) {
                check.crossing_turn = a.turn;
            }
        }
        if (!check.crossing_turn) {
            check.passed = false;
            detail << "survival never crossed " << config.survival_threshold << " within "
                   << assessments.size() << " turns; ";
        }

        // Quadratic increment at the baseline mean for the session's drift step.
        const Eigen::VectorXd step = first_injected_step(session, d_semantic);
        const double d2 = baseline.squared_mahalanobis(baseline.mean() + step);
        const double bound = baseline.min_precision_eigenvalue() * step.squaredNorm();
        if (d2 < bound * (1.0 - 1e-9)) {
            check.passed = false;
            detail << "quadratic increment " << d2 << " below bound " << bound << "; ";
        }

        check.detail = detail.str();
        if (!check.passed) ++report.failures;
        report.sessions.push_back(std::move(check));
    }
    return report;
}

PropertyReport verify_acceleration_sign(const GeneratedCorpus& corpus,
                                        const ModelBundle& models,
                                        const PipelineConfig& config,
                                        const AccelerationCheckOptions& options) {
    if (models.manifold.size() == 0) {
        throw ConfigError("acceleration check: baseline model not loaded");
    }
    PropertyReport report;
    report.name = "acceleration-sign-separation";

    for (const auto& session : corpus.sessions) {
        if (session.profile != Profile::kCrescendo && session.profile != Profile::kBenign) {
            continue;
        }
        ++report.sessions_checked;
        SessionCheck check;
        check.session_id = session.trajectory.session_id;
        check.profile = session.profile;
        std::ostringstream detail;

        // The kinematic signal itself, independent of the trigger cascade.
        const std::vector<double> distances =
            distance_signal(session.trajectory, models.manifold);
        DistanceTrace trace(std::max(3, config.trace_capacity));
        std::vector<std::pair<int, double>> accelerations;  // (turn, a_t)
        for (std::size_t i = 0; i < distances.size(); ++i) {
            const int turn = session.trajectory.turns[i].turn_index();
            trace.push(turn, distances[i]);
            if (const auto a = trace.acceleration(); a && turn > options.warm_up_turns) {
                accelerations.emplace_back(turn, *a);
            }
        }
        if (accelerations.empty()) {
            check.passed = false;
            check.detail = "no post-warm-up acceleration samples";
            ++report.failures;
            report.sessions.push_back(std::move(check));
            continue;
        }

        if (session.profile == Profile::kCrescendo) {
            std::vector<double> values;
            values.reserve(accelerations.size());
            double mean = 0.0;
            for (const auto& [turn, a] : accelerations) {
                values.push_back(a);
                mean += a;
            }
            mean /= static_cast<double>(values.size());
            check.mean_acceleration = mean;
            std::nth_element(values.begin(), values.begin() + values.size() / 2,
                             values.end());
            const double median = values[values.size() / 2];
            if (median < 0.0) {
                check.passed = false;
                detail << "median post-warm-up acceleration " << median << " < 0; ";
            }
            if (!(mean > 0.0)) {
                check.passed = false;
                detail << "mean post-warm-up acceleration " << mean << " <= 0; ";
            }
        } else {
            // Benign: the final quartile must have decayed below tolerance.
            const double tolerance =
                options.benign_tolerance_factor * std::max(distances.front(), 1e-12);
            const std::size_t quartile = std::max<std::size_t>(1, accelerations.size() / 4);
            double mean = 0.0;
            for (std::size_t i = accelerations.size() - quartile; i < accelerations.size();
                 ++i) {
                const auto& [turn, a] = accelerations[i];
                mean += a;
                if (!(std::abs(a) <= tolerance || a < 0.0)) {
                    check.passed = false;
                    detail << "|a_t| = " << std::abs(a) << " above tolerance " << tolerance
                           << " at turn " << turn << "; ";
                }
            }
            check.mean_acceleration = mean / static_cast<double>(quartile);
        }

        check.detail = detail.str();
        if (!check.passed) ++report.failures;
        report.sessions.push_back(std::move(check));
    }
    return report;
}

ComparisonReport comparative_evaluation(const GeneratedCorpus& corpus,
                                        const ModelBundle& models,
                                        const PipelineConfig& config,
                                        std::optional<double> snapshot_threshold) {
    ComparisonReport report;
    if (corpus.sessions.empty()) {
        report.snapshot_threshold = snapshot_threshold.value_or(0.0);
        return report;
    }
    models.require_ready_for_monitoring();

    struct PerSession {
        const GeneratedSession* session;
        std::optional<int> cascade_turn;
        std::vector<double> distances;
    };
    std::vector<PerSession> evaluated;
    evaluated.reserve(corpus.sessions.size());

    int benign_count = 0;
    int cascade_benign_alerts = 0;
    std::vector<double> benign_max_distance;
    for (const auto& session : corpus.sessions) {
        PerSession per{&session, std::nullopt,
                       distance_signal(session.trajectory, models.manifold)};
        const auto assessments = run_session(session.trajectory, models, config, true);
        if (!assessments.empty() && assessments.back().verdict == Verdict::kAlert) {
            per.cascade_turn = assessments.back().turn;
        }
        if (session.profile == Profile::kBenign) {
            ++benign_count;
            if (per.cascade_turn) ++cascade_benign_alerts;
            benign_max_distance.push_back(
                *std::max_element(per.distances.begin(), per.distances.end()));
        }
        evaluated.push_back(std::move(per));
    }

    if (snapshot_threshold) {
        report.snapshot_threshold = *snapshot_threshold;
    } else {
        if (benign_count == 0) {
            throw ConfigError(
                "comparative evaluation: cannot calibrate the snapshot threshold without "
                "benign sessions; pass one explicitly");
        }
        // Place the threshold so exactly as many benign sessions exceed it as
        // the cascade alerted on.
        std::sort(benign_max_distance.begin(), benign_max_distance.end(),
                  std::greater<double>());
        const int k = cascade_benign_alerts;
        if (k == 0) {
            report.snapshot_threshold =
                benign_max_distance.front() * (1.0 + 1e-9) + 1e-12;
        } else if (k >= static_cast<int>(benign_max_distance.size())) {
            report.snapshot_threshold = 0.0;
        } else {
            report.snapshot_threshold =
                0.5 * (benign_max_distance[k - 1] + benign_max_distance[k]);
        }
        report.threshold_calibrated = true;
    }

    int snapshot_benign_alerts = 0;
    int attack_count = 0, cascade_detections = 0, snapshot_detections = 0;
    int max_attack_turns = 0;
    for (const auto& per : evaluated) {
        ComparisonRow row;
        row.session_id = per.session->trajectory.session_id;
        row.profile = per.session->profile;
        row.event_turn = per.session->event_turn;
        row.cascade_turn = per.cascade_turn;
        for (std::size_t i = 0; i < per.distances.size(); ++i) {
            if (per.distances[i] > report.snapshot_threshold) {
                row.snapshot_turn = per.session->trajectory.turns[i].turn_index();
                break;
            }
        }
        if (per.session->profile == Profile::kBenign) {
            if (row.snapshot_turn) ++snapshot_benign_alerts;
        } else {
            ++attack_count;
            if (row.cascade_turn) ++cascade_detections;
            if (row.snapshot_turn) ++snapshot_detections;
            max_attack_turns = std::max(max_attack_turns, per.session->trajectory.length());
        }
        report.rows.push_back(std::move(row));
    }

    report.benign_sessions = benign_count;
    report.attack_sessions = attack_count;
    if (benign_count > 0) {
        report.cascade_benign_alert_rate =
            static_cast<double>(cascade_benign_alerts) / benign_count;
        report.snapshot_benign_alert_rate =
            static_cast<double>(snapshot_benign_alerts) / benign_count;
    }
    if (attack_count > 0) {
        report.cascade_detection_rate = static_cast<double>(cascade_detections) / attack_count;
        report.snapshot_detection_rate =
            static_cast<double>(snapshot_detections) / attack_count;
    }

    // Detection-latency survival: fraction of attack sessions undetected by t.
    report.survival_curves.assign(2, std::vector<double>(max_attack_turns, 0.0));
    for (int t = 1; t <= max_attack_turns; ++t) {
        int undetected_cascade = 0, undetected_snapshot = 0;
        for (const auto& row : report.rows) {
            if (row.profile == Profile::kBenign) continue;
            if (!row.cascade_turn || *row.cascade_turn > t) ++undetected_cascade;
            if (!row.snapshot_turn || *row.snapshot_turn > t) ++undetected_snapshot;
        }
        if (attack_count > 0) {
            report.survival_curves[0][t - 1] =
                static_cast<double>(undetected_cascade) / attack_count;
            report.survival_curves[1][t - 1] =
                static_cast<double>(undetected_snapshot) / attack_count;
        }
    }
    return report;
}

}  // namespace driftguard
