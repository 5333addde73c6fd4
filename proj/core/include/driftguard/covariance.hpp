#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "driftguard/state.hpp"

namespace driftguard {

/// Gaussian baseline with a shrinkage-regularized covariance
/// Sigma_hat = (1 - lambda) * Sigma + lambda * (tr(Sigma)/p) * I.
/// The Cholesky factor is computed once at fit time and reused per query, so a
/// distance costs one triangular solve (O(p^2)).
class ShrunkGaussian {
public:
    ShrunkGaussian() = default;

    /// Builds the derived quantities (precision, factor, eigenvalue bounds)
    /// from first principles; also the artifact-load path, which revalidates
    /// symmetry and positive definiteness.
    static ShrunkGaussian from_moments(Eigen::VectorXd mean, Eigen::MatrixXd covariance,
                                       double shrinkage, double effective_n);

    double mahalanobis(const Eigen::VectorXd& v) const;
    double squared_mahalanobis(const Eigen::VectorXd& v) const;
    double log_density(const Eigen::VectorXd& v) const;

    int dimension() const { return static_cast<int>(mean_.size()); }
    const Eigen::VectorXd& mean() const { return mean_; }
    const Eigen::MatrixXd& covariance() const { return covariance_; }
    const Eigen::MatrixXd& precision() const { return precision_; }
    double shrinkage() const { return shrinkage_; }
    double effective_n() const { return effective_n_; }

    /// Smallest eigenvalue of the precision matrix (= 1 / largest covariance
    /// eigenvalue); the constant in the quadratic-form lower bound.
    double min_precision_eigenvalue() const { return min_precision_eigenvalue_; }
    double min_covariance_eigenvalue() const { return min_covariance_eigenvalue_; }

private:
    Eigen::VectorXd mean_;
    Eigen::MatrixXd covariance_;
    Eigen::MatrixXd precision_;
    Eigen::LLT<Eigen::MatrixXd> factor_;
    double shrinkage_ = 0.0;
    double effective_n_ = 0.0;
    double min_precision_eigenvalue_ = 0.0;
    double min_covariance_eigenvalue_ = 0.0;
};

/// Fits mean and shrunk covariance on the baseline. The shrinkage intensity is
/// the closed-form estimate (ratio of estimation-error variance to dispersion
/// around the scaled-identity target) clipped to [0, 1], unless forced.
ShrunkGaussian fit_shrunk_gaussian(const std::vector<StateVector>& baseline,
                                   std::optional<double> forced_shrinkage = std::nullopt);

/// Weighted variant used for mixture components; effective sample size is the
/// total weight. Rows of `samples` are observations.
ShrunkGaussian fit_shrunk_gaussian(const Eigen::MatrixXd& samples,
                                   const Eigen::VectorXd& weights,
                                   std::optional<double> forced_shrinkage = std::nullopt);

struct MixtureFitParams {
    int components = 1;  // K
    std::uint64_t seed = 0;
    int max_iters = 200;
    double tol = 1e-7;
    std::optional<double> forced_shrinkage;
};

/// Mixture of shrunk Gaussians for multi-peak baselines.
class ManifoldModel {
public:
    ManifoldModel() = default;
    ManifoldModel(std::vector<ShrunkGaussian> components, Eigen::VectorXd weights,
                  std::vector<double> em_log_likelihoods = {});

    struct LocalDistance {
        double distance = 0.0;
        int component = 0;
    };

    /// Distance under the component with maximal posterior responsibility for
    /// v; ties resolve to the lower component index.
    LocalDistance local_mahalanobis(const Eigen::VectorXd& v) const;
    double mahalanobis(const Eigen::VectorXd& v) const { return local_mahalanobis(v).distance; }

    double log_density(const Eigen::VectorXd& v) const;

    int size() const { return static_cast<int>(components_.size()); }
    int dimension() const { return components_.empty() ? 0 : components_.front().dimension(); }
    const std::vector<ShrunkGaussian>& components() const { return components_; }
    const Eigen::VectorXd& weights() const { return weights_; }

    /// Log-likelihood trace of the EM fit (monotone nondecreasing).
    const std::vector<double>& em_log_likelihoods() const { return em_log_likelihoods_; }

private:
    std::vector<ShrunkGaussian> components_;
    Eigen::VectorXd weights_;
    std::vector<double> em_log_likelihoods_;
};

/// EM fit with log-space responsibilities; each component is re-shrunk on its
/// responsibility-weighted sample every M step. An emptied component is
/// re-seeded from the lowest-likelihood point, at most 3 times per fit.
ManifoldModel fit_mixture(const std::vector<StateVector>& baseline,
                          const MixtureFitParams& params);

}  // namespace driftguard
