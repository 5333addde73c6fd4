#include "driftguard/state.hpp"

#include <cmath>
#include <sstream>

#include "driftguard/errors.hpp"

namespace driftguard {

StateVector::StateVector(Eigen::VectorXd values, int d_semantic, int turn_index,
                         double timestamp)
    : values_(std::move(values)),
      d_semantic_(d_semantic),
      turn_index_(turn_index),
      timestamp_(timestamp) {}

namespace {

// Returns the index of the first non-finite entry, or -1.
int first_non_finite(const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) return static_cast<int>(i);
    }
    return -1;
}

}  // namespace

StateVector fuse(const SessionShape& shape, const Eigen::VectorXd& semantic,
                 const Eigen::VectorXd& behavioral, int turn_index, double timestamp) {
    if (semantic.size() != shape.d_semantic || behavioral.size() != shape.d_behavioral) {
        std::ostringstream msg;
        msg << "fuse: dimension mismatch, expected semantic=" << shape.d_semantic
            << " behavioral=" << shape.d_behavioral << ", got semantic=" << semantic.size()
            << " behavioral=" << behavioral.size();
        throw ValidationError(msg.str());
    }
    if (int i = first_non_finite(semantic); i >= 0) {
        throw ValidationError("fuse: non-finite semantic component at index " +
                              std::to_string(i));
    }
    if (int i = first_non_finite(behavioral); i >= 0) {
        throw ValidationError("fuse: non-finite behavioral component at index " +
                              std::to_string(i));
    }
    if (turn_index < 1) {
        throw ValidationError("fuse: turn index must be >= 1, got " +
                              std::to_string(turn_index));
    }
    if (!std::isfinite(timestamp) || timestamp < 0.0) {
        throw ValidationError("fuse: timestamp must be a nonnegative finite value");
    }

    Eigen::VectorXd joint(shape.dimension());
    joint.head(shape.d_semantic) = semantic;
    joint.tail(shape.d_behavioral) = behavioral;
    return StateVector(std::move(joint), shape.d_semantic, turn_index, timestamp);
}

}  // namespace driftguard
