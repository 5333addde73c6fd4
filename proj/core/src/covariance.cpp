#include "driftguard/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>

#include "driftguard/errors.hpp"
#include "driftguard/rng.hpp"

namespace driftguard {

namespace {

Eigen::MatrixXd to_rows(const std::vector<StateVector>& baseline) {
    if (baseline.empty()) throw CalibrationError("covariance fit: empty baseline");
    const int dim = baseline.front().dimension();
    Eigen::MatrixXd rows(baseline.size(), dim);
    for (std::size_t i = 0; i < baseline.size(); ++i) {
        if (baseline[i].dimension() != dim) {
            throw ValidationError("covariance fit: baseline vector " + std::to_string(i) +
                                  " has dimension " + std::to_string(baseline[i].dimension()) +
                                  ", expected " + std::to_string(dim));
        }
        rows.row(static_cast<Eigen::Index>(i)) = baseline[i].values();
    }
    return rows;
}

}  // namespace

ShrunkGaussian ShrunkGaussian::from_moments(Eigen::VectorXd mean, Eigen::MatrixXd covariance,
                                            double shrinkage, double effective_n) {
    const Eigen::Index p = mean.size();
    if (covariance.rows() != p || covariance.cols() != p) {
        throw ValidationError("shrunk gaussian: covariance shape does not match mean");
    }
    if (shrinkage < 0.0 || shrinkage > 1.0) {
        throw ValidationError("shrunk gaussian: shrinkage must lie in [0, 1]");
    }
    const double scale = std::max(covariance.cwiseAbs().maxCoeff(), 1e-300);
    const double asym = (covariance - covariance.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10 * scale) {
        throw ValidationError("shrunk gaussian: covariance is not symmetric");
    }

    ShrunkGaussian model;
    model.mean_ = std::move(mean);
    model.covariance_ = 0.5 * (covariance + covariance.transpose());
    model.shrinkage_ = shrinkage;
    model.effective_n_ = effective_n;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(model.covariance_,
                                                       Eigen::EigenvaluesOnly);
    const double min_eig = eig.eigenvalues().minCoeff();
    const double max_eig = eig.eigenvalues().maxCoeff();
    if (!(min_eig > 0.0)) {
        throw CalibrationError(
            "shrunk gaussian: covariance is not positive definite (min eigenvalue " +
            std::to_string(min_eig) + ")");
    }
    model.min_covariance_eigenvalue_ = min_eig;
    model.min_precision_eigenvalue_ = 1.0 / max_eig;

    model.factor_.compute(model.covariance_);
    if (model.factor_.info() != Eigen::Success) {
        throw CalibrationError("shrunk gaussian: Cholesky factorization failed");
    }
    model.precision_ =
        model.factor_.solve(Eigen::MatrixXd::Identity(p, p));
    model.precision_ = 0.5 * (model.precision_ + model.precision_.transpose());
    return model;
}

double ShrunkGaussian::squared_mahalanobis(const Eigen::VectorXd& v) const {
    if (v.size() != mean_.size()) {
        throw ValidationError("mahalanobis: vector dimension " + std::to_string(v.size()) +
                              " does not match model dimension " +
                              std::to_string(mean_.size()));
    }
    const Eigen::VectorXd diff = v - mean_;
    const Eigen::VectorXd y = factor_.matrixL().solve(diff);
    return y.squaredNorm();
}

double ShrunkGaussian::mahalanobis(const Eigen::VectorXd& v) const {
    return std::sqrt(squared_mahalanobis(v));
}

double ShrunkGaussian::log_density(const Eigen::VectorXd& v) const {
    const Eigen::Index p = mean_.size();
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < p; ++i) {
        log_det += std::log(factor_.matrixLLT()(i, i));
    }
    log_det *= 2.0;
    return -0.5 * (squared_mahalanobis(v) + log_det +
                   static_cast<double>(p) * std::log(2.0 * std::numbers::pi));
}

ShrunkGaussian fit_shrunk_gaussian(const Eigen::MatrixXd& samples,
                                   const Eigen::VectorXd& weights,
                                   std::optional<double> forced_shrinkage) {
    const Eigen::Index n = samples.rows();
    const Eigen::Index p = samples.cols();
    if (weights.size() != n) {
        throw ValidationError("covariance fit: weight count does not match sample count");
    }
    if (weights.minCoeff() < 0.0) {
        throw ValidationError("covariance fit: negative sample weight");
    }
    const double n_eff = weights.sum();
    if (n < 2 || n_eff < 2.0) {
        throw CalibrationError("covariance fit: need an effective sample size of at least 2");
    }
    if (!samples.allFinite()) {
        throw ValidationError("covariance fit: samples contain non-finite values");
    }

    const Eigen::VectorXd mean = (samples.transpose() * weights) / n_eff;
    Eigen::MatrixXd centered = samples.rowwise() - mean.transpose();

    // Scatter with both normalizations: 1/n_eff moments drive the shrinkage
    // estimate, the unbiased 1/(n_eff - 1) matrix is what gets shrunk.
    const Eigen::MatrixXd scatter =
        centered.transpose() * weights.asDiagonal() * centered;
    const Eigen::MatrixXd emp_cov = scatter / n_eff;
    const Eigen::MatrixXd sample_cov = scatter / (n_eff - 1.0);

    const double trace = sample_cov.trace();
    if (!(trace > 0.0)) {
        throw CalibrationError(
            "covariance fit: degenerate baseline (zero covariance trace; all samples identical)");
    }

    double lambda;
    if (forced_shrinkage) {
        lambda = *forced_shrinkage;
        if (lambda < 0.0 || lambda > 1.0) {
            throw ValidationError("covariance fit: forced shrinkage must lie in [0, 1]");
        }
    } else {
        // Closed-form intensity: beta estimates the variance of the covariance
        // estimator, delta the dispersion of the estimate around the
        // scaled-identity target; lambda = beta / delta clipped to [0, 1].
        const double mu = emp_cov.trace() / static_cast<double>(p);
        const double delta =
            (emp_cov.squaredNorm() - 2.0 * mu * emp_cov.trace() +
             static_cast<double>(p) * mu * mu) /
            static_cast<double>(p);
        double beta_sum = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double sq = centered.row(i).squaredNorm();
            beta_sum += weights[i] * sq * sq;
        }
        double beta = (beta_sum / n_eff - emp_cov.squaredNorm()) /
                      (static_cast<double>(p) * n_eff);
        beta = std::min(beta, delta);
        lambda = (beta <= 0.0 || delta <= 0.0) ? 0.0 : beta / delta;
        lambda = std::clamp(lambda, 0.0, 1.0);
    }

    Eigen::MatrixXd shrunk = (1.0 - lambda) * sample_cov;
    shrunk.diagonal().array() += lambda * trace / static_cast<double>(p);
    return ShrunkGaussian::from_moments(mean, std::move(shrunk), lambda, n_eff);
}

ShrunkGaussian fit_shrunk_gaussian(const std::vector<StateVector>& baseline,
                                   std::optional<double> forced_shrinkage) {
    const Eigen::MatrixXd rows = to_rows(baseline);
    return fit_shrunk_gaussian(rows, Eigen::VectorXd::Ones(rows.rows()), forced_shrinkage);
}

ManifoldModel::ManifoldModel(std::vector<ShrunkGaussian> components, Eigen::VectorXd weights,
                             std::vector<double> em_log_likelihoods)
    : components_(std::move(components)),
      weights_(std::move(weights)),
      em_log_likelihoods_(std::move(em_log_likelihoods)) {
    if (components_.empty()) {
        throw ValidationError("manifold model: at least one component required");
    }
    if (weights_.size() != static_cast<Eigen::Index>(components_.size())) {
        throw ValidationError("manifold model: weight count does not match components");
    }
    if (weights_.minCoeff() < 0.0 || std::abs(weights_.sum() - 1.0) > 1e-9) {
        throw ValidationError("manifold model: weights must be a probability simplex");
    }
}

ManifoldModel::LocalDistance ManifoldModel::local_mahalanobis(const Eigen::VectorXd& v) const {
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < size(); ++k) {
        const double w = weights_[k];
        if (w <= 0.0) continue;
        const double score = std::log(w) + components_[k].log_density(v);
        if (score > best_score) {
            best_score = score;
            best = k;
        }
    }
    return {components_[best].mahalanobis(v), best};
}

double ManifoldModel::log_density(const Eigen::VectorXd& v) const {
    double max_term = -std::numeric_limits<double>::infinity();
    std::vector<double> terms(components_.size(),
                              -std::numeric_limits<double>::infinity());
    for (int k = 0; k < size(); ++k) {
        if (weights_[k] <= 0.0) continue;
        terms[k] = std::log(weights_[k]) + components_[k].log_density(v);
        max_term = std::max(max_term, terms[k]);
    }
    double sum = 0.0;
    for (double t : terms) sum += std::exp(t - max_term);
    return max_term + std::log(sum);
}

namespace {

// k-means++ style seeding over distinct points; throws when fewer than K
// distinct points exist.
std::vector<int> seed_centers(const Eigen::MatrixXd& rows, int k, Rng& rng) {
    const Eigen::Index n = rows.rows();
    std::vector<int> centers;
    std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
    centers.push_back(static_cast<int>(first(rng)));

    Eigen::VectorXd dist2 =
        (rows.rowwise() - rows.row(centers[0])).rowwise().squaredNorm();
    while (static_cast<int>(centers.size()) < k) {
        const double total = dist2.sum();
        if (!(total > 0.0)) {
            throw CalibrationError(
                "mixture fit: fewer distinct baseline points than components");
        }
        std::uniform_real_distribution<double> pick(0.0, total);
        double target = pick(rng);
        Eigen::Index chosen = n - 1;
        for (Eigen::Index i = 0; i < n; ++i) {
            target -= dist2[i];
            if (target <= 0.0) {
                chosen = i;
                break;
            }
        }
        if (dist2[chosen] <= 0.0) continue;  // landed on a duplicate; redraw
        centers.push_back(static_cast<int>(chosen));
        dist2 = dist2.cwiseMin(
            (rows.rowwise() - rows.row(chosen)).rowwise().squaredNorm());
    }
    return centers;
}

double log_sum_exp(const Eigen::VectorXd& v) {
    const double m = v.maxCoeff();
    if (!std::isfinite(m)) return m;
    return m + std::log((v.array() - m).exp().sum());
}

// A few Lloyd iterations to move the seeded centers onto cluster centroids
// before EM starts; rescues the occasional same-cluster double pick.
Eigen::MatrixXd refine_centers(const Eigen::MatrixXd& rows, const std::vector<int>& seeds) {
    const Eigen::Index n = rows.rows();
    const int k = static_cast<int>(seeds.size());
    Eigen::MatrixXd centers(k, rows.cols());
    for (int c = 0; c < k; ++c) centers.row(c) = rows.row(seeds[c]);

    std::vector<int> assignment(n, -1);
    for (int pass = 0; pass < 20; ++pass) {
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double best_d = (rows.row(i) - centers.row(0)).squaredNorm();
            for (int c = 1; c < k; ++c) {
                const double d = (rows.row(i) - centers.row(c)).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (assignment[i] != best) {
                assignment[i] = best;
                changed = true;
            }
        }
        if (!changed) break;
        for (int c = 0; c < k; ++c) {
            Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(rows.cols());
            int count = 0;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (assignment[i] == c) {
                    sum += rows.row(i);
                    ++count;
                }
            }
            if (count > 0) centers.row(c) = sum / count;
        }
    }
    return centers;
}

}  // namespace

ManifoldModel fit_mixture(const std::vector<StateVector>& baseline,
                          const MixtureFitParams& params) {
    const int k = params.components;
    if (k < 1) throw CalibrationError("mixture fit: component count must be >= 1");
    const Eigen::MatrixXd rows = to_rows(baseline);
    const Eigen::Index n = rows.rows();
    if (n < 2 * static_cast<Eigen::Index>(k)) {
        throw CalibrationError("mixture fit: need at least 2 samples per component, got " +
                               std::to_string(n) + " for K=" + std::to_string(k));
    }

    const Eigen::VectorXd unit_weights = Eigen::VectorXd::Ones(n);
    if (k == 1) {
        ShrunkGaussian g = fit_shrunk_gaussian(rows, unit_weights, params.forced_shrinkage);
        const double ll = [&] {
            double total = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) total += g.log_density(rows.row(i));
            return total;
        }();
        std::vector<ShrunkGaussian> comps;
        comps.push_back(std::move(g));
        return ManifoldModel(std::move(comps), Eigen::VectorXd::Ones(1), {ll});
    }

    Rng rng = make_rng(derive_seed(params.seed, 0x6d69785fULL));
    const Eigen::MatrixXd centers = refine_centers(rows, seed_centers(rows, k, rng));

    // Shared full-baseline covariance as the initial shape of every component.
    const ShrunkGaussian global =
        fit_shrunk_gaussian(rows, unit_weights, params.forced_shrinkage);

    std::vector<ShrunkGaussian> comps(k);
    for (int c = 0; c < k; ++c) {
        comps[c] = ShrunkGaussian::from_moments(centers.row(c), global.covariance(),
                                                global.shrinkage(), global.effective_n());
    }
    Eigen::VectorXd weights = Eigen::VectorXd::Constant(k, 1.0 / k);

    std::vector<double> ll_trace;
    Eigen::MatrixXd resp(n, k);
    int reseeds = 0;

    std::vector<ShrunkGaussian> prev_comps;
    Eigen::VectorXd prev_weights;

    for (int iter = 0; iter < params.max_iters; ++iter) {
        // E step in log space.
        Eigen::VectorXd point_ll(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::VectorXd logp(k);
            for (int c = 0; c < k; ++c) {
                logp[c] = (weights[c] > 0.0 ? std::log(weights[c])
                                            : -std::numeric_limits<double>::infinity()) +
                          comps[c].log_density(rows.row(i));
            }
            const double norm = log_sum_exp(logp);
            point_ll[i] = norm;
            for (int c = 0; c < k; ++c) resp(i, c) = std::exp(logp[c] - norm);
        }
        const double ll = point_ll.sum();

        if (!ll_trace.empty()) {
            const double slack = 1e-9 * std::max(1.0, std::abs(ll_trace.back()));
            if (ll < ll_trace.back() - slack) {
                // Regularized M step stopped paying off; keep the previous model.
                comps = std::move(prev_comps);
                weights = std::move(prev_weights);
                break;
            }
            if (ll - ll_trace.back() < params.tol * std::max(1.0, std::abs(ll))) {
                ll_trace.push_back(std::max(ll, ll_trace.back()));
                break;
            }
        }
        ll_trace.push_back(ll_trace.empty() ? ll : std::max(ll, ll_trace.back()));

        prev_comps = comps;
        prev_weights = weights;

        // M step with responsibility-weighted shrinkage refits.
        for (int c = 0; c < k; ++c) {
            const Eigen::VectorXd w = resp.col(c);
            const double mass = w.sum();
            bool degenerate = mass < 2.0;
            if (!degenerate) {
                try {
                    comps[c] = fit_shrunk_gaussian(rows, w, params.forced_shrinkage);
                } catch (const CalibrationError&) {
                    degenerate = true;
                }
            }
            if (degenerate) {
                if (++reseeds > 3) {
                    throw CalibrationError(
                        "mixture fit: component collapsed more than 3 times");
                }
                Eigen::Index worst;
                point_ll.minCoeff(&worst);
                comps[c] = ShrunkGaussian::from_moments(rows.row(worst), global.covariance(),
                                                        global.shrinkage(),
                                                        global.effective_n());
                resp.col(c).setZero();
                resp(worst, c) = 1.0;
            }
            weights[c] = resp.col(c).sum() / static_cast<double>(n);
        }
        weights /= weights.sum();
    }

    return ManifoldModel(std::move(comps), std::move(weights), std::move(ll_trace));
}

}  // namespace driftguard
