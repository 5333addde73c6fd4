#include "driftguard/isolation_forest.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "driftguard/errors.hpp"
#include "driftguard/rng.hpp"

namespace driftguard {

double average_path_length(int n) {
    if (n <= 1) return 0.0;
    double harmonic = 0.0;
    for (int k = 1; k <= n - 1; ++k) harmonic += 1.0 / k;
    return 2.0 * harmonic - 2.0 * (n - 1) / static_cast<double>(n);
}

double IsolationTree::path_length(const Eigen::VectorXd& v) const {
    int node = 0;
    int depth = 0;
    while (nodes_[node].feature >= 0) {
        node = v[nodes_[node].feature] < nodes_[node].threshold ? nodes_[node].left
                                                                : nodes_[node].right;
        ++depth;
    }
    return depth + average_path_length(nodes_[node].size);
}

namespace {

class TreeBuilder {
public:
    TreeBuilder(const Eigen::MatrixXd& data, int height_limit, Rng& rng)
        : data_(data), height_limit_(height_limit), rng_(rng) {}

    IsolationTree build(std::vector<int> sample) {
        nodes_.clear();
        grow(sample.data(), static_cast<int>(sample.size()), 0);
        return IsolationTree(std::move(nodes_));
    }

private:
    int make_leaf(int count) {
        IsolationTree::Node leaf;
        leaf.size = count;
        nodes_.push_back(leaf);
        return static_cast<int>(nodes_.size()) - 1;
    }

    // Grows the subtree over sample[0..count) and returns its node index.
    int grow(int* sample, int count, int depth) {
        if (count <= 1 || depth >= height_limit_) return make_leaf(count);

        const int dim = static_cast<int>(data_.cols());
        std::uniform_int_distribution<int> pick_feature(0, dim - 1);

        // A feature whose values collapse to a point cannot split; retry up to
        // dim features before giving up on the node.
        for (int attempt = 0; attempt < dim; ++attempt) {
            const int feature = pick_feature(rng_);
            double lo = data_(sample[0], feature);
            double hi = lo;
            for (int i = 1; i < count; ++i) {
                const double x = data_(sample[i], feature);
                lo = std::min(lo, x);
                hi = std::max(hi, x);
            }
            if (!(hi > lo)) continue;

            std::uniform_real_distribution<double> pick_value(lo, hi);
            double threshold = pick_value(rng_);
            while (!(threshold > lo)) threshold = pick_value(rng_);

            int mid = 0;
            for (int i = 0; i < count; ++i) {
                if (data_(sample[i], feature) < threshold) std::swap(sample[mid++], sample[i]);
            }

            IsolationTree::Node node;
            node.feature = feature;
            node.threshold = threshold;
            const int index = static_cast<int>(nodes_.size());
            nodes_.push_back(node);
            const int left = grow(sample, mid, depth + 1);
            const int right = grow(sample + mid, count - mid, depth + 1);
            nodes_[index].left = left;
            nodes_[index].right = right;
            return index;
        }
        return make_leaf(count);  // all retried features degenerate
    }

    const Eigen::MatrixXd& data_;
    int height_limit_;
    Rng& rng_;
    std::vector<IsolationTree::Node> nodes_;
};

// Draws k distinct indices from [0, n) by partial Fisher-Yates.
std::vector<int> draw_subsample(int n, int k, Rng& rng) {
    std::vector<int> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    for (int i = 0; i < k; ++i) {
        std::uniform_int_distribution<int> pick(i, n - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(k);
    return pool;
}

}  // namespace

IsolationForest::IsolationForest(std::vector<IsolationTree> trees, ForestParams params,
                                 int dimension)
    : trees_(std::move(trees)),
      params_(params),
      dimension_(dimension),
      height_limit_(static_cast<int>(std::ceil(std::log2(params.subsample_size)))),
      c_n_(average_path_length(params.subsample_size)) {}

IsolationForest IsolationForest::fit(const Eigen::MatrixXd& baseline_rows,
                                     const ForestParams& params) {
    const int n = static_cast<int>(baseline_rows.rows());
    if (params.subsample_size < 2) {
        throw CalibrationError("isolation forest: subsample size must be >= 2");
    }
    if (params.n_trees < 1) {
        throw CalibrationError("isolation forest: tree count must be >= 1");
    }
    if (n < params.subsample_size) {
        throw CalibrationError("isolation forest: baseline has " + std::to_string(n) +
                               " vectors, need at least subsample size " +
                               std::to_string(params.subsample_size));
    }
    if (!baseline_rows.allFinite()) {
        throw ValidationError("isolation forest: baseline contains non-finite values");
    }

    const int height_limit =
        static_cast<int>(std::ceil(std::log2(params.subsample_size)));
    std::vector<IsolationTree> trees;
    trees.reserve(params.n_trees);
    for (int t = 0; t < params.n_trees; ++t) {
        Rng rng = make_rng(derive_seed(params.seed, static_cast<std::uint64_t>(t)));
        TreeBuilder builder(baseline_rows, height_limit, rng);
        trees.push_back(builder.build(draw_subsample(n, params.subsample_size, rng)));
    }
    return IsolationForest(std::move(trees), params,
                           static_cast<int>(baseline_rows.cols()));
}

IsolationForest IsolationForest::fit(const std::vector<StateVector>& baseline,
                                     const ForestParams& params) {
    if (baseline.empty()) {
        throw CalibrationError("isolation forest: empty baseline");
    }
    const int dim = baseline.front().dimension();
    Eigen::MatrixXd rows(baseline.size(), dim);
    for (std::size_t i = 0; i < baseline.size(); ++i) {
        if (baseline[i].dimension() != dim) {
            throw ValidationError("isolation forest: baseline vector " + std::to_string(i) +
                                  " has dimension " + std::to_string(baseline[i].dimension()) +
                                  ", expected " + std::to_string(dim));
        }
        rows.row(static_cast<Eigen::Index>(i)) = baseline[i].values();
    }
    return fit(rows, params);
}

double IsolationForest::mean_path_length(const Eigen::VectorXd& v) const {
    if (!fitted()) throw ConfigError("isolation forest: score requested before fit");
    if (v.size() != dimension_) {
        throw ValidationError("isolation forest: vector dimension " +
                              std::to_string(v.size()) + " does not match training dimension " +
                              std::to_string(dimension_));
    }
    double total = 0.0;
    for (const auto& tree : trees_) total += tree.path_length(v);
    return total / static_cast<double>(trees_.size());
}

double IsolationForest::score_from_mean_path(double mean_path) const {
    if (!fitted()) throw ConfigError("isolation forest: score requested before fit");
    return std::exp2(-mean_path / c_n_);
}

double IsolationForest::score(const Eigen::VectorXd& v) const {
    return score_from_mean_path(mean_path_length(v));
}

}  // namespace driftguard
