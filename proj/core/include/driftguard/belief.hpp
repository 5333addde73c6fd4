#pragma once

#include <Eigen/Core>

namespace driftguard {

/// Diagonal bivariate Gaussian over the observation pair (distance, acceleration).
struct EmissionModel {
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    Eigen::Vector2d variance = Eigen::Vector2d::Ones();

    double log_density(double distance, double acceleration) const;
};

/// Two-state hidden Markov model over {Safe, Malicious}. State index 0 is Safe.
struct HmmParams {
    // Row-stochastic: transition(i, j) = P(next = j | current = i).
    Eigen::Matrix2d transition = (Eigen::Matrix2d() << 0.95, 0.05, 0.02, 0.98).finished();
    EmissionModel safe_emission;
    EmissionModel malicious_emission;
    double prior_malicious = 0.01;

    /// Throws ConfigError on invalid rows, variances, or prior.
    void validate() const;
};

struct BeliefState {
    double p_malicious = 0.0;
    int turn_index = 0;
    // Set if an update had to carry the belief forward because both emission
    // likelihoods vanished (unreachable with log-space evaluation).
    bool degenerate_update = false;
};

/// Initial belief; the prior is configured strictly above zero by default so
/// the filter stays responsive.
BeliefState init_belief(const HmmParams& params);

/// One forward-filter step given log emission likelihoods. Invariant under a
/// common additive shift of both log-likelihoods (i.e. under positive
/// rescaling of the likelihoods).
double forward_step(double prev_p_malicious, const Eigen::Matrix2d& transition,
                    double log_like_safe, double log_like_malicious,
                    bool* degenerate = nullptr);

/// Predict-correct update with the configured emissions over (d_m, a_t).
BeliefState update_belief(const HmmParams& params, const BeliefState& prev, double d_m,
                          double a_t);

/// Knobs for deriving emission models from baseline statistics: the Safe state
/// sits at the baseline distance mean, the Malicious state is offset by the
/// configured multiples of the baseline spread.
struct BeliefConfig {
    double persist_safe = 0.95;
    double persist_malicious = 0.98;  // attacks are stickier than safety
    double prior_malicious = 0.01;
    double malicious_distance_offset = 3.0;  // in units of the baseline d_m std
    double malicious_accel_offset = 1.0;     // in units of the baseline a_t std
};

HmmParams make_hmm_params(const BeliefConfig& config, double d_m_mean, double d_m_std,
                          double a_t_std);

}  // namespace driftguard
