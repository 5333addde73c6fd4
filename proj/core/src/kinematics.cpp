#include "driftguard/kinematics.hpp"

#include <cmath>
#include <string>

#include "driftguard/errors.hpp"

namespace driftguard {

DistanceTrace::DistanceTrace(int capacity) : capacity_(capacity) {
    if (capacity < 3) {
        throw ValidationError("distance trace: capacity must be >= 3, got " +
                              std::to_string(capacity));
    }
    samples_.reserve(capacity);
}

void DistanceTrace::push(int turn_index, double distance) {
    if (!samples_.empty() && turn_index <= samples_.back().turn_index) {
        throw ValidationError("distance trace: turn index " + std::to_string(turn_index) +
                              " is not after last recorded index " +
                              std::to_string(samples_.back().turn_index));
    }
    if (!std::isfinite(distance) || distance < 0.0) {
        throw ValidationError("distance trace: distance must be finite and nonnegative");
    }
    if (static_cast<int>(samples_.size()) == capacity_) {
        samples_.erase(samples_.begin());
    }
    samples_.push_back({turn_index, distance});
}

std::optional<double> DistanceTrace::acceleration() const {
    const int n = size();
    if (n < 3) return std::nullopt;
    const Sample& s0 = samples_[n - 3];
    const Sample& s1 = samples_[n - 2];
    const Sample& s2 = samples_[n - 1];
    const double t0 = s0.turn_index, t1 = s1.turn_index, t2 = s2.turn_index;
    const double v01 = (s1.distance - s0.distance) / (t1 - t0);
    const double v12 = (s2.distance - s1.distance) / (t2 - t1);
    return 2.0 * (v12 - v01) / (t2 - t0);
}

std::optional<double> DistanceTrace::velocity() const {
    const int n = size();
    if (n < 2) return std::nullopt;
    const Sample& a = samples_[n - 2];
    const Sample& b = samples_[n - 1];
    return (b.distance - a.distance) / static_cast<double>(b.turn_index - a.turn_index);
}

std::optional<double> DistanceTrace::last_distance() const {
    if (samples_.empty()) return std::nullopt;
    return samples_.back().distance;
}

}  // namespace driftguard
