#include "driftguard/survival.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <Eigen/Cholesky>

#include "driftguard/errors.hpp"

namespace driftguard {

CoxData CoxData::from_rows(const std::vector<CovariateRow>& rows) {
    std::map<std::string, std::vector<const CovariateRow*>> by_session;
    std::vector<std::string> order;
    for (const auto& row : rows) {
        if (!row.z.allFinite()) {
            throw ValidationError("cox data: non-finite covariates in session " +
                                  row.session_id + " turn " + std::to_string(row.turn));
        }
        auto [it, inserted] = by_session.try_emplace(row.session_id);
        if (inserted) order.push_back(row.session_id);
        it->second.push_back(&row);
    }

    CoxData data;
    for (const auto& id : order) {
        auto& session_rows = by_session[id];
        std::sort(session_rows.begin(), session_rows.end(),
                  [](const CovariateRow* a, const CovariateRow* b) { return a->turn < b->turn; });
        const int length = static_cast<int>(session_rows.size());
        Eigen::MatrixXd path(length, kCovariateCount);
        int event_turn = 0;
        for (int i = 0; i < length; ++i) {
            const CovariateRow& row = *session_rows[i];
            if (row.turn != i + 1) {
                throw ValidationError("cox data: session " + id +
                                      " rows are not contiguous from turn 1 (saw turn " +
                                      std::to_string(row.turn) + " at position " +
                                      std::to_string(i + 1) + ")");
            }
            if (row.event) {
                if (event_turn != 0) {
                    throw ValidationError("cox data: session " + id + " has multiple events");
                }
                if (i + 1 != length) {
                    throw ValidationError("cox data: session " + id +
                                          " has covariate rows after its event turn");
                }
                event_turn = row.turn;
            }
            path.row(i) = row.z.transpose();
        }
        data.session_ids_.push_back(id);
        data.paths_.push_back(std::move(path));
        data.lengths_.push_back(length);
        data.event_turns_.push_back(event_turn);
        if (event_turn > 0) ++data.n_events_;
    }

    std::set<int> times;
    for (int t : data.event_turns_) {
        if (t > 0) times.insert(t);
    }
    data.distinct_event_times_.assign(times.begin(), times.end());
    return data;
}

namespace {

// Shared accumulation over event times: value, gradient, and optionally the
// negated Hessian of the log partial likelihood.
struct PartialLikelihoodTerms {
    double value = 0.0;
    CovariateVector gradient = CovariateVector::Zero();
    Eigen::Matrix4d neg_hessian = Eigen::Matrix4d::Zero();
};

PartialLikelihoodTerms accumulate(const CoxData& data, const CovariateVector& beta,
                                  bool with_hessian) {
    PartialLikelihoodTerms out;
    for (int t : data.distinct_event_times()) {
        double denom = 0.0;
        CovariateVector weighted_z = CovariateVector::Zero();
        Eigen::Matrix4d weighted_zz = Eigen::Matrix4d::Zero();
        for (int s = 0; s < data.session_count(); ++s) {
            if (data.lengths()[s] < t) continue;
            const CovariateVector z = data.z(s, t);
            const double w = std::exp(beta.dot(z));
            denom += w;
            weighted_z += w * z;
            if (with_hessian) weighted_zz += w * z * z.transpose();
        }
        const CovariateVector mean_z = weighted_z / denom;

        int d_t = 0;
        for (int s = 0; s < data.session_count(); ++s) {
            if (data.event_turns()[s] != t) continue;
            ++d_t;
            const CovariateVector z = data.z(s, t);
            out.value += beta.dot(z);
            out.gradient += z;
        }
        out.value -= d_t * std::log(denom);
        out.gradient -= d_t * mean_z;
        if (with_hessian) {
            out.neg_hessian += d_t * (weighted_zz / denom - mean_z * mean_z.transpose());
        }
    }
    return out;
}

}  // namespace

double cox_log_partial_likelihood(const CoxData& data, const CovariateVector& beta) {
    return accumulate(data, beta, false).value;
}

CovariateVector cox_gradient(const CoxData& data, const CovariateVector& beta) {
    return accumulate(data, beta, false).gradient;
}

double CoxModel::baseline_increment(int t) const {
    if (baseline_steps.empty()) return 0.0;
    if (t > baseline_steps.back().first) return baseline_steps.back().second;
    for (const auto& [turn, inc] : baseline_steps) {
        if (turn == t) return inc;
        if (turn > t) break;
    }
    return 0.0;
}

double CoxModel::hazard(int t, const CovariateVector& z) const {
    if (!z.allFinite()) throw ValidationError("hazard: non-finite covariates");
    const double inc = baseline_increment(t);
    return (inc > 0.0 ? inc : hazard_floor) * std::exp(beta.dot(z));
}

std::vector<double> CoxModel::survival_curve(const std::vector<CovariateVector>& z_path) const {
    std::vector<double> curve;
    curve.reserve(z_path.size() + 1);
    curve.push_back(1.0);
    double cumulative = 0.0;
    for (std::size_t k = 0; k < z_path.size(); ++k) {
        cumulative += hazard(static_cast<int>(k) + 1, z_path[k]);
        curve.push_back(std::exp(-cumulative));
    }
    return curve;
}

CoxModel fit_cox(const std::vector<CovariateRow>& rows, const CoxFitOptions& options) {
    const CoxData data = CoxData::from_rows(rows);
    if (data.event_count() == 0) {
        throw CalibrationError("cox fit: no events in the training rows");
    }

    Eigen::Vector4d mask = Eigen::Vector4d::Ones();
    if (!options.include_belief) mask[static_cast<int>(Covariate::belief)] = 0.0;

    const auto penalized = [&](const CovariateVector& beta) {
        return cox_log_partial_likelihood(data, beta) -
               0.5 * options.ridge * beta.squaredNorm();
    };

    CovariateVector beta = CovariateVector::Zero();
    double objective = penalized(beta);
    int iterations = 0;
    double grad_norm = 0.0;
    bool converged = false;

    for (; iterations < options.max_iters; ++iterations) {
        const PartialLikelihoodTerms terms = accumulate(data, beta, true);
        const CovariateVector grad =
            (terms.gradient - options.ridge * beta).cwiseProduct(mask);
        grad_norm = grad.norm();
        if (grad_norm < options.tol) {
            converged = true;
            break;
        }
        Eigen::Matrix4d hess = terms.neg_hessian;
        hess.diagonal().array() += options.ridge;
        // Pin masked coordinates by decoupling their rows and columns.
        for (int i = 0; i < kCovariateCount; ++i) {
            if (mask[i] == 0.0) {
                hess.row(i).setZero();
                hess.col(i).setZero();
                hess(i, i) = 1.0;
            }
        }
        CovariateVector direction = hess.ldlt().solve(grad);
        if (!direction.allFinite()) direction = grad;  // fall back to steepest ascent

        double step = 1.0;
        bool improved = false;
        for (int halving = 0; halving < 40; ++halving) {
            const CovariateVector candidate = beta + step * direction.cwiseProduct(mask);
            const double value = penalized(candidate);
            if (value > objective - 1e-12 * std::max(1.0, std::abs(objective))) {
                beta = candidate;
                objective = value;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if (!improved) break;
    }

    if (!converged) {
        // The loop may have exhausted max_iters right after an improving step;
        // check the gradient at the final coefficients.
        const CovariateVector grad =
            (cox_gradient(data, beta) - options.ridge * beta).cwiseProduct(mask);
        grad_norm = grad.norm();
        converged = grad_norm < options.tol;
    }
    if (!converged) {
        int worst;
        beta.cwiseAbs().maxCoeff(&worst);
        std::ostringstream msg;
        msg << "cox fit did not converge after " << iterations
            << " iterations (gradient norm " << grad_norm << "); covariate '"
            << kCovariateNames[worst]
            << "' may perfectly order the events (monotone-likelihood separation); "
               "increase the ridge penalty";
        throw ConvergenceError(msg.str());
    }

    // Monotone-likelihood separation drives a coefficient toward infinity while
    // the gradient saturates to zero, so the unridged "converged" point sits on
    // a numerically flat likelihood: a collapsed Hessian diagonal against the
    // raw covariate spread marks the offending covariate.
    if (options.ridge == 0.0 && beta.norm() > 1.0) {
        const Eigen::Matrix4d curvature = accumulate(data, beta, true).neg_hessian;
        Eigen::Vector4d second_moment = Eigen::Vector4d::Zero();
        for (int s = 0; s < data.session_count(); ++s) {
            for (int t = 1; t <= data.lengths()[s]; ++t) {
                second_moment += data.z(s, t).cwiseAbs2();
            }
        }
        for (int i = 0; i < kCovariateCount; ++i) {
            if (mask[i] == 0.0 || std::abs(beta[i]) <= 1.0) continue;
            if (curvature(i, i) < 1e-6 * std::max(1.0, second_moment[i])) {
                throw ConvergenceError(
                    std::string("cox fit: covariate '") +
                    std::string(kCovariateNames[i]) +
                    "' perfectly orders the events (monotone-likelihood separation); "
                    "the coefficient is unbounded. Use a ridge penalty > 0.");
            }
        }
    }

    CoxModel model;
    model.beta = beta;
    model.diagnostics = {cox_log_partial_likelihood(data, beta), iterations, grad_norm,
                         converged};

    // Breslow increments at the fitted coefficients.
    for (int t : data.distinct_event_times()) {
        double denom = 0.0;
        int d_t = 0;
        for (int s = 0; s < data.session_count(); ++s) {
            if (data.lengths()[s] >= t) denom += std::exp(beta.dot(data.z(s, t)));
            if (data.event_turns()[s] == t) ++d_t;
        }
        model.baseline_steps.emplace_back(t, d_t / denom);
    }
    return model;
}

double AftModel::hazard(double t, const CovariateVector& z) const {
    if (!z.allFinite()) throw ValidationError("aft hazard: non-finite covariates");
    const double accelerated_scale = scale * std::exp(theta.dot(z));
    const double u = std::max(t, 1e-12) / accelerated_scale;
    return (shape / accelerated_scale) * std::pow(u, shape - 1.0);
}

namespace {

struct AftObservation {
    double log_time = 0.0;
    CovariateVector z = CovariateVector::Zero();
    bool event = false;
};

// Parameters packed as (mu, theta[0..3], log sigma); scale = exp(mu) and
// shape = 1 / sigma.
double aft_log_likelihood(const std::vector<AftObservation>& obs,
                          const Eigen::Matrix<double, 6, 1>& p) {
    const double mu = p[0];
    const double log_sigma = p[5];
    const double sigma = std::exp(log_sigma);
    double ll = 0.0;
    for (const auto& o : obs) {
        const double eta = mu + p.segment<4>(1).dot(o.z);
        const double w = (o.log_time - eta) / sigma;
        const double ew = std::exp(w);
        if (o.event) {
            ll += -log_sigma - o.log_time + w - ew;
        } else {
            ll += -ew;
        }
    }
    return ll;
}

Eigen::Matrix<double, 6, 1> aft_gradient(const std::vector<AftObservation>& obs,
                                         const Eigen::Matrix<double, 6, 1>& p) {
    const double mu = p[0];
    const double sigma = std::exp(p[5]);
    Eigen::Matrix<double, 6, 1> g = Eigen::Matrix<double, 6, 1>::Zero();
    for (const auto& o : obs) {
        const double eta = mu + p.segment<4>(1).dot(o.z);
        const double w = (o.log_time - eta) / sigma;
        const double ew = std::exp(w);
        const double d_eta = (ew - (o.event ? 1.0 : 0.0)) / sigma;
        g[0] += d_eta;
        g.segment<4>(1) += d_eta * o.z;
        g[5] += o.event ? (-1.0 - w + w * ew) : (w * ew);
    }
    return g;
}

}  // namespace

AftModel fit_aft(const std::vector<CovariateRow>& rows, const AftFitOptions& options) {
    // Each session contributes its most recent turn: the event turn, or the
    // final observed turn for censored sessions.
    const CoxData data = CoxData::from_rows(rows);
    if (data.event_count() == 0) {
        throw CalibrationError("aft fit: no events in the training rows");
    }

    std::vector<AftObservation> obs;
    obs.reserve(data.session_count());
    double mean_log_event_time = 0.0;
    for (int s = 0; s < data.session_count(); ++s) {
        AftObservation o;
        o.event = data.event_turns()[s] > 0;
        const int t = o.event ? data.event_turns()[s] : data.lengths()[s];
        o.log_time = std::log(static_cast<double>(t));
        o.z = data.z(s, t);
        if (!options.include_belief) o.z[static_cast<int>(Covariate::belief)] = 0.0;
        if (o.event) mean_log_event_time += o.log_time;
        obs.push_back(o);
    }
    mean_log_event_time /= data.event_count();

    Eigen::Matrix<double, 6, 1> params = Eigen::Matrix<double, 6, 1>::Zero();
    params[0] = mean_log_event_time;

    double objective = aft_log_likelihood(obs, params);
    int iterations = 0;
    double grad_norm = 0.0;
    bool converged = false;

    for (; iterations < options.max_iters; ++iterations) {
        Eigen::Matrix<double, 6, 1> grad = aft_gradient(obs, params);
        if (!options.include_belief) grad[1 + static_cast<int>(Covariate::belief)] = 0.0;
        grad_norm = grad.norm();
        if (grad_norm < options.tol) {
            converged = true;
            break;
        }

        // Hessian by central differences of the analytic gradient; cheap at
        // six parameters.
        Eigen::Matrix<double, 6, 6> hess;
        for (int j = 0; j < 6; ++j) {
            const double h = 1e-6 * std::max(1.0, std::abs(params[j]));
            Eigen::Matrix<double, 6, 1> hi = params, lo = params;
            hi[j] += h;
            lo[j] -= h;
            hess.col(j) = (aft_gradient(obs, hi) - aft_gradient(obs, lo)) / (2.0 * h);
        }
        Eigen::Matrix<double, 6, 6> neg_hess = -0.5 * (hess + hess.transpose());
        if (!options.include_belief) {
            const int b = 1 + static_cast<int>(Covariate::belief);
            neg_hess.row(b).setZero();
            neg_hess.col(b).setZero();
            neg_hess(b, b) = 1.0;
        }

        // Levenberg damping until the solve yields an improving ascent step.
        double damping = 1e-8;
        bool improved = false;
        for (int attempt = 0; attempt < 60 && !improved; ++attempt) {
            Eigen::Matrix<double, 6, 6> damped = neg_hess;
            damped.diagonal().array() += damping;
            const Eigen::LDLT<Eigen::Matrix<double, 6, 6>> ldlt(damped);
            Eigen::Matrix<double, 6, 1> direction = ldlt.solve(grad);
            if (direction.allFinite() && direction.dot(grad) > 0.0) {
                double step = 1.0;
                for (int halving = 0; halving < 30; ++halving) {
                    Eigen::Matrix<double, 6, 1> candidate = params + step * direction;
                    if (!options.include_belief) {
                        candidate[1 + static_cast<int>(Covariate::belief)] = 0.0;
                    }
                    const double value = aft_log_likelihood(obs, candidate);
                    if (std::isfinite(value) &&
                        value > objective - 1e-12 * std::max(1.0, std::abs(objective))) {
                        params = candidate;
                        objective = value;
                        improved = true;
                        break;
                    }
                    step *= 0.5;
                }
            }
            damping *= 10.0;
        }
        if (!improved) break;
    }

    if (!converged) {
        Eigen::Matrix<double, 6, 1> grad = aft_gradient(obs, params);
        if (!options.include_belief) grad[1 + static_cast<int>(Covariate::belief)] = 0.0;
        grad_norm = grad.norm();
        converged = grad_norm < std::max(options.tol, 1e-6 * std::abs(objective));
    }
    if (!converged) {
        std::ostringstream msg;
        msg << "aft fit did not converge after " << iterations
            << " iterations (gradient norm " << grad_norm << ", log-likelihood "
            << objective << ")";
        throw ConvergenceError(msg.str());
    }

    AftModel model;
    model.theta = params.segment<4>(1);
    model.scale = std::exp(params[0]);
    model.shape = std::exp(-params[5]);
    model.diagnostics = {objective, iterations, grad_norm, converged};
    return model;
}

double ensemble_hazard(double cox_hazard, const std::optional<AftModel>& aft, int t,
                       const CovariateVector& z) {
    if (!aft) return cox_hazard;
    return std::max(cox_hazard, aft->hazard(static_cast<double>(t), z));
}

}  // namespace driftguard
