#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace driftguard {

inline constexpr int kCovariateCount = 4;

/// Covariate slot order inside z: distance, isolation score, acceleration,
/// belief. Fixed across fitting, artifacts, and the per-turn hazard.
enum class Covariate { distance = 0, isolation = 1, acceleration = 2, belief = 3 };

inline constexpr std::array<std::string_view, kCovariateCount> kCovariateNames = {
    "d_m", "s_iso", "a_t", "p_malicious"};

using CovariateVector = Eigen::Vector4d;

/// One observed turn of one session, as consumed by the survival fits.
struct CovariateRow {
    std::string session_id;
    int turn = 0;
    CovariateVector z = CovariateVector::Zero();
    bool event = false;
};

/// Per-session view of the rows: contiguous covariate paths plus the outcome.
/// Shared by the likelihood, the fit, and the finite-difference checks.
class CoxData {
public:
    /// Groups and validates rows: turns contiguous from 1, at most one event
    /// per session, event only at the final turn.
    static CoxData from_rows(const std::vector<CovariateRow>& rows);

    int session_count() const { return static_cast<int>(lengths_.size()); }
    int event_count() const { return n_events_; }
    const std::vector<std::string>& session_ids() const { return session_ids_; }
    const std::vector<int>& lengths() const { return lengths_; }
    const std::vector<int>& event_turns() const { return event_turns_; }  // 0 = censored
    const std::vector<int>& distinct_event_times() const { return distinct_event_times_; }
    /// Covariates of session s at turn t (1-based).
    CovariateVector z(int session, int turn) const {
        return paths_[session].row(turn - 1).transpose();
    }

private:
    std::vector<std::string> session_ids_;
    std::vector<Eigen::MatrixXd> paths_;  // length x kCovariateCount per session
    std::vector<int> lengths_;
    std::vector<int> event_turns_;
    std::vector<int> distinct_event_times_;
    int n_events_ = 0;
};

/// Log partial likelihood with the risk set at each event time built from all
/// sessions still observable at that turn; ties divide by the full risk-set
/// sum. Also the target of the finite-difference gradient oracle.
double cox_log_partial_likelihood(const CoxData& data, const CovariateVector& beta);
CovariateVector cox_gradient(const CoxData& data, const CovariateVector& beta);

struct CoxFitOptions {
    int max_iters = 100;
    double tol = 1e-8;     // gradient norm at convergence
    double ridge = 1e-4;   // guards against monotone-likelihood separation
    bool include_belief = true;  // fit the fourth slot; otherwise pinned to 0
};

struct FitDiagnostics {
    double log_likelihood = 0.0;  // unpenalized, at the fitted parameters
    int iterations = 0;
    double gradient_norm = 0.0;
    bool converged = false;
};

/// Proportional-hazards model with a step baseline hazard.
struct CoxModel {
    CovariateVector beta = CovariateVector::Zero();
    /// Nonparametric increments d H0 at event turns, ascending.
    std::vector<std::pair<int, double>> baseline_steps;
    /// Floor applied to zero increments at inference so every turn carries
    /// strictly positive hazard.
    double hazard_floor = 1e-4;
    FitDiagnostics diagnostics;

    /// Increment at turn t; past the training horizon the last observed
    /// increment carries forward.
    double baseline_increment(int t) const;

    /// h(t | z) = floor(dH0(t)) * exp(beta . z).
    double hazard(int t, const CovariateVector& z) const;

    /// S(t) = exp(-sum_{k<=t} h(k | z_path[k-1])) for t = 0..n; S(0) = 1.
    std::vector<double> survival_curve(const std::vector<CovariateVector>& z_path) const;
};

/// Newton fit with step halving of the ridge-penalized log partial likelihood.
/// Throws CalibrationError without events and ConvergenceError (naming the
/// suspect covariate) when the iteration stalls.
CoxModel fit_cox(const std::vector<CovariateRow>& rows, const CoxFitOptions& options = {});

struct AftFitOptions {
    int max_iters = 200;
    double tol = 1e-8;
    bool include_belief = true;
};

/// Weibull accelerated failure time model on each session's most recent
/// covariates: log T = log(scale) + theta . z + sigma W, shape = 1 / sigma.
struct AftModel {
    CovariateVector theta = CovariateVector::Zero();
    double shape = 1.0;
    double scale = 1.0;
    FitDiagnostics diagnostics;

    /// Instantaneous Weibull hazard at time t under the accelerated scale.
    double hazard(double t, const CovariateVector& z) const;
};

AftModel fit_aft(const std::vector<CovariateRow>& rows, const AftFitOptions& options = {});

/// Conservative ensemble: the larger of the two hazards; the proportional
/// model keeps long-horizon memory, the AFT partner reacts to the latest turn.
double ensemble_hazard(double cox_hazard, const std::optional<AftModel>& aft, int t,
                       const CovariateVector& z);

}  // namespace driftguard
