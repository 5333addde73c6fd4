#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

namespace driftguard {

/// Per-session dimension contract. Every turn of a session must carry the same
/// semantic / behavioral split.
struct SessionShape {
    int d_semantic = 0;
    int d_behavioral = 0;

    int dimension() const { return d_semantic + d_behavioral; }
    bool operator==(const SessionShape&) const = default;
};

/// Joint state of one conversation turn: the pre-fused semantic embedding
/// concatenated with normalized behavioral covariates.
///
/// Stored as a single contiguous vector [semantic | behavioral] since every
/// downstream consumer works on the joint space.
class StateVector {
public:
    StateVector() = default;
    StateVector(Eigen::VectorXd values, int d_semantic, int turn_index, double timestamp);

    const Eigen::VectorXd& values() const { return values_; }
    int dimension() const { return static_cast<int>(values_.size()); }
    int semantic_dimension() const { return d_semantic_; }
    int behavioral_dimension() const { return dimension() - d_semantic_; }

    Eigen::VectorXd::ConstSegmentReturnType semantic() const {
        return values_.head(d_semantic_);
    }
    Eigen::VectorXd::ConstSegmentReturnType behavioral() const {
        return values_.tail(behavioral_dimension());
    }

    SessionShape shape() const { return {d_semantic_, behavioral_dimension()}; }
    int turn_index() const { return turn_index_; }
    double timestamp() const { return timestamp_; }

private:
    Eigen::VectorXd values_;
    int d_semantic_ = 0;
    int turn_index_ = 0;
    double timestamp_ = 0.0;
};

/// Fuses semantic and behavioral components into the joint state vector.
/// Validates dimensions against the session shape and rejects non-finite
/// components, identifying the offending index.
StateVector fuse(const SessionShape& shape, const Eigen::VectorXd& semantic,
                 const Eigen::VectorXd& behavioral, int turn_index, double timestamp);

/// Training outcome of a session: the turn at which a safety failure occurred,
/// or censoring (session ended without failure).
struct SessionOutcome {
    int event_turn = 0;  // > 0 when a failure was observed
    bool censored = false;

    bool has_event() const { return !censored && event_turn > 0; }
};

/// Ordered turn sequence of one session, optionally labeled for training.
struct SessionTrajectory {
    std::string session_id;
    std::vector<StateVector> turns;
    std::optional<SessionOutcome> outcome;

    int length() const { return static_cast<int>(turns.size()); }
    bool empty() const { return turns.empty(); }
};

}  // namespace driftguard
