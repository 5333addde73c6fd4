#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "driftguard/state.hpp"

namespace driftguard {

/// One parsed turn line of the session JSONL format.
struct TurnRecord {
    std::string session_id;
    int turn = 0;
    Eigen::VectorXd semantic;
    Eigen::VectorXd behavioral;
    double timestamp = 0.0;
    bool behavioral_filled = false;  // behavioral block was absent and zero-filled
};

/// One parsed outcome line (training label).
struct OutcomeRecord {
    std::string session_id;
    SessionOutcome outcome;
};

using SessionRecord = std::variant<TurnRecord, OutcomeRecord>;

/// Parses one JSONL line. Throws IoError naming the line on malformed input
/// and ValidationError naming the line on non-finite components.
SessionRecord parse_session_line(const std::string& line, std::size_t line_number);

std::string to_json_line(const std::string& session_id, const StateVector& turn);
std::string to_json_line(const std::string& session_id, const SessionOutcome& outcome);

/// Incremental record-stream validator. Enforces per-session shape constancy
/// and strictly consecutive turn indices starting at 1.
class SessionAssembler {
public:
    /// Validates and appends a turn; returns the fused state vector.
    const StateVector& add_turn(const TurnRecord& record, std::size_t line_number);
    void add_outcome(const OutcomeRecord& record, std::size_t line_number);
    void add(const SessionRecord& record, std::size_t line_number);

    /// Sessions in order of first appearance.
    std::vector<SessionTrajectory> finish();

    /// Count of turns whose behavioral block was zero-filled.
    std::size_t filled_behavioral_count() const { return filled_behavioral_; }

private:
    struct Open {
        SessionTrajectory trajectory;
        SessionShape shape;
        bool closed = false;
    };
    std::vector<std::string> order_;
    std::map<std::string, Open> open_;
    std::size_t filled_behavioral_ = 0;
};

std::vector<SessionTrajectory> read_sessions(std::istream& in);
std::vector<SessionTrajectory> read_sessions_file(const std::string& path);

void write_sessions(const std::vector<SessionTrajectory>& sessions, std::ostream& out);
void write_sessions_file(const std::vector<SessionTrajectory>& sessions,
                         const std::string& path);

}  // namespace driftguard
