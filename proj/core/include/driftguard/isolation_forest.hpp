#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "driftguard/state.hpp"

namespace driftguard {

/// Expected path length of an unsuccessful search in a binary search tree over
/// n points: c(n) = 2 H(n-1) - 2 (n-1) / n with H the harmonic number.
/// c(n) = 0 for n <= 1. Harmonic numbers are summed exactly.
double average_path_length(int n);

struct ForestParams {
    int n_trees = 100;
    int subsample_size = 256;  // per-tree uniform subsample
    std::uint64_t seed = 0;
};

/// One random-partition tree. Nodes are stored in a flat array; index 0 is the
/// root. Leaves keep the count of training points that reached them so path
/// lengths can be adjusted by c(size).
class IsolationTree {
public:
    struct Node {
        std::int32_t feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        std::int32_t left = -1;
        std::int32_t right = -1;
        std::int32_t size = 0;
    };

    IsolationTree() = default;
    explicit IsolationTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

    /// Edge count from root to the reached leaf, plus c(leaf.size).
    double path_length(const Eigen::VectorXd& v) const;

    const std::vector<Node>& nodes() const { return nodes_; }

private:
    std::vector<Node> nodes_;
};

/// Ensemble of isolation trees over the joint state space. Fitting is
/// deterministic for a fixed seed; scoring is read-only and thread-safe.
class IsolationForest {
public:
    IsolationForest() = default;
    IsolationForest(std::vector<IsolationTree> trees, ForestParams params, int dimension);

    /// Builds the forest on independent uniform subsamples of the baseline.
    /// Throws CalibrationError when the baseline is smaller than the subsample
    /// size and ValidationError on non-finite training vectors.
    static IsolationForest fit(const std::vector<StateVector>& baseline,
                               const ForestParams& params);
    static IsolationForest fit(const Eigen::MatrixXd& baseline_rows,
                               const ForestParams& params);

    /// Anomaly score 2^(-E[h(v)] / c(psi)), strictly inside (0, 1).
    double score(const Eigen::VectorXd& v) const;
    double score(const StateVector& v) const { return score(v.values()); }

    /// Mean path length over all trees.
    double mean_path_length(const Eigen::VectorXd& v) const;

    /// The scoring map applied to a given mean path length; exposed so the
    /// normalization contract (mean path = c_n gives exactly 0.5) is testable.
    double score_from_mean_path(double mean_path) const;

    bool fitted() const { return !trees_.empty(); }
    double normalization() const { return c_n_; }  // c(psi)
    int dimension() const { return dimension_; }
    int height_limit() const { return height_limit_; }
    const ForestParams& params() const { return params_; }
    const std::vector<IsolationTree>& trees() const { return trees_; }

private:
    std::vector<IsolationTree> trees_;
    ForestParams params_;
    int dimension_ = 0;
    int height_limit_ = 0;
    double c_n_ = 0.0;
};

}  // namespace driftguard
