#pragma once

#include <optional>
#include <vector>

namespace driftguard {

/// Sliding window over the per-turn Mahalanobis distance signal. Turn indices
/// need not be consecutive: the trigger cascade computes the distance only on
/// some turns, and the divided differences below absorb the gaps.
class DistanceTrace {
public:
    struct Sample {
        int turn_index = 0;
        double distance = 0.0;
    };

    explicit DistanceTrace(int capacity = 8);

    /// Appends a sample; evicts the oldest beyond capacity. Throws
    /// ValidationError on non-monotone turn indices or invalid distances.
    void push(int turn_index, double distance);

    /// Second divided difference over the three most recent samples, scaled to
    /// the uniform-step convention:
    ///   a = 2 * [(d2-d1)/(t2-t1) - (d1-d0)/(t1-t0)] / (t2-t0).
    /// Reduces to d2 - 2*d1 + d0 for unit steps. Empty when fewer than three
    /// samples are held.
    std::optional<double> acceleration() const;

    /// First divided difference over the two most recent samples.
    std::optional<double> velocity() const;

    int size() const { return static_cast<int>(samples_.size()); }
    int capacity() const { return capacity_; }
    const std::vector<Sample>& samples() const { return samples_; }
    std::optional<double> last_distance() const;

private:
    std::vector<Sample> samples_;
    int capacity_;
};

}  // namespace driftguard
