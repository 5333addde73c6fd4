#include "driftguard/belief.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "driftguard/errors.hpp"

namespace driftguard {

double EmissionModel::log_density(double distance, double acceleration) const {
    const double d0 = distance - mean[0];
    const double d1 = acceleration - mean[1];
    return -0.5 * (d0 * d0 / variance[0] + d1 * d1 / variance[1] +
                   std::log(variance[0]) + std::log(variance[1]) +
                   2.0 * std::log(2.0 * std::numbers::pi));
}

void HmmParams::validate() const {
    for (int i = 0; i < 2; ++i) {
        if (transition(i, 0) < 0.0 || transition(i, 1) < 0.0) {
            throw ConfigError("hmm: transition entries must be nonnegative");
        }
        if (std::abs(transition.row(i).sum() - 1.0) > 1e-9) {
            throw ConfigError("hmm: transition row " + std::to_string(i) +
                              " does not sum to 1");
        }
    }
    if (!(safe_emission.variance.minCoeff() > 0.0) ||
        !(malicious_emission.variance.minCoeff() > 0.0)) {
        throw ConfigError("hmm: emission variances must be strictly positive");
    }
    if (prior_malicious < 0.0 || prior_malicious > 1.0) {
        throw ConfigError("hmm: prior_malicious must lie in [0, 1]");
    }
}

BeliefState init_belief(const HmmParams& params) {
    params.validate();
    return {params.prior_malicious, 0, false};
}

double forward_step(double prev_p_malicious, const Eigen::Matrix2d& transition,
                    double log_like_safe, double log_like_malicious, bool* degenerate) {
    const double p_prev_safe = 1.0 - prev_p_malicious;
    const double predicted_safe =
        p_prev_safe * transition(0, 0) + prev_p_malicious * transition(1, 0);
    const double predicted_malicious =
        p_prev_safe * transition(0, 1) + prev_p_malicious * transition(1, 1);

    // Correct in a shifted likelihood scale so one of the factors is exactly 1.
    const double shift = std::max(log_like_safe, log_like_malicious);
    const double safe_term = predicted_safe * std::exp(log_like_safe - shift);
    const double malicious_term =
        predicted_malicious * std::exp(log_like_malicious - shift);
    const double norm = safe_term + malicious_term;
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        if (degenerate) *degenerate = true;
        return prev_p_malicious;  // carry forward
    }
    if (degenerate) *degenerate = false;
    return std::clamp(malicious_term / norm, 0.0, 1.0);
}

BeliefState update_belief(const HmmParams& params, const BeliefState& prev, double d_m,
                          double a_t) {
    if (!std::isfinite(d_m) || !std::isfinite(a_t)) {
        throw ValidationError("belief update: observation must be finite");
    }
    BeliefState next;
    next.turn_index = prev.turn_index + 1;
    next.p_malicious = forward_step(prev.p_malicious, params.transition,
                                    params.safe_emission.log_density(d_m, a_t),
                                    params.malicious_emission.log_density(d_m, a_t),
                                    &next.degenerate_update);
    return next;
}

HmmParams make_hmm_params(const BeliefConfig& config, double d_m_mean, double d_m_std,
                          double a_t_std) {
    const double sd = std::max(d_m_std, 1e-6);
    const double sa = std::max(a_t_std, 1e-6);
    HmmParams params;
    params.transition << config.persist_safe, 1.0 - config.persist_safe,
        1.0 - config.persist_malicious, config.persist_malicious;
    params.safe_emission.mean << d_m_mean, 0.0;
    params.safe_emission.variance << sd * sd, sa * sa;
    params.malicious_emission.mean << d_m_mean + config.malicious_distance_offset * sd,
        config.malicious_accel_offset * sa;
    params.malicious_emission.variance = params.safe_emission.variance;
    params.prior_malicious = config.prior_malicious;
    params.validate();
    return params;
}

}  // namespace driftguard
