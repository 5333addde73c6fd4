#include "driftguard/session_io.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "driftguard/errors.hpp"

namespace driftguard {

namespace {

using nlohmann::json;

[[noreturn]] void malformed(std::size_t line_number, const std::string& detail) {
    throw IoError("line " + std::to_string(line_number) + ": malformed record: " + detail);
}

Eigen::VectorXd parse_vector(const json& arr, std::size_t line_number, const char* field) {
    if (!arr.is_array()) malformed(line_number, std::string(field) + " must be an array");
    Eigen::VectorXd v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_number()) {
            malformed(line_number,
                      std::string(field) + "[" + std::to_string(i) + "] is not a number");
        }
        const double x = arr[i].get<double>();
        if (!std::isfinite(x)) {
            throw ValidationError("line " + std::to_string(line_number) + ": non-finite " +
                                  field + " component at index " + std::to_string(i));
        }
        v[static_cast<Eigen::Index>(i)] = x;
    }
    return v;
}

}  // namespace

SessionRecord parse_session_line(const std::string& line, std::size_t line_number) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        malformed(line_number, e.what());
    }
    if (!j.is_object()) malformed(line_number, "expected a JSON object");
    if (!j.contains("session_id") || !j["session_id"].is_string()) {
        malformed(line_number, "missing string field session_id");
    }
    const std::string session_id = j["session_id"].get<std::string>();

    if (j.contains("event_turn") || j.contains("censored")) {
        OutcomeRecord rec;
        rec.session_id = session_id;
        if (j.contains("event_turn")) {
            if (!j["event_turn"].is_number_integer()) {
                malformed(line_number, "event_turn must be an integer");
            }
            rec.outcome.event_turn = j["event_turn"].get<int>();
            if (rec.outcome.event_turn < 1) {
                throw ValidationError("line " + std::to_string(line_number) +
                                      ": event_turn must be >= 1");
            }
        } else {
            if (!j["censored"].is_boolean() || !j["censored"].get<bool>()) {
                malformed(line_number, "censored must be true when present");
            }
            rec.outcome.censored = true;
        }
        return rec;
    }

    TurnRecord rec;
    rec.session_id = session_id;
    if (!j.contains("turn") || !j["turn"].is_number_integer()) {
        malformed(line_number, "missing integer field turn");
    }
    rec.turn = j["turn"].get<int>();
    if (!j.contains("semantic")) malformed(line_number, "missing field semantic");
    rec.semantic = parse_vector(j["semantic"], line_number, "semantic");
    if (j.contains("behavioral")) {
        rec.behavioral = parse_vector(j["behavioral"], line_number, "behavioral");
    } else {
        rec.behavioral_filled = true;  // zero-filled once the session shape is known
    }
    if (!j.contains("timestamp") || !j["timestamp"].is_number()) {
        malformed(line_number, "missing numeric field timestamp");
    }
    rec.timestamp = j["timestamp"].get<double>();
    if (!std::isfinite(rec.timestamp)) {
        throw ValidationError("line " + std::to_string(line_number) +
                              ": non-finite timestamp");
    }
    return rec;
}

std::string to_json_line(const std::string& session_id, const StateVector& turn) {
    json j;
    j["session_id"] = session_id;
    j["turn"] = turn.turn_index();
    j["semantic"] = std::vector<double>(turn.semantic().begin(), turn.semantic().end());
    j["behavioral"] =
        std::vector<double>(turn.behavioral().begin(), turn.behavioral().end());
    j["timestamp"] = turn.timestamp();
    return j.dump();
}

std::string to_json_line(const std::string& session_id, const SessionOutcome& outcome) {
    json j;
    j["session_id"] = session_id;
    if (outcome.censored) {
        j["censored"] = true;
    } else {
        j["event_turn"] = outcome.event_turn;
    }
    return j.dump();
}

const StateVector& SessionAssembler::add_turn(const TurnRecord& record,
                                              std::size_t line_number) {
    auto it = open_.find(record.session_id);
    if (it == open_.end()) {
        order_.push_back(record.session_id);
        Open o;
        o.trajectory.session_id = record.session_id;
        o.shape = {static_cast<int>(record.semantic.size()),
                   static_cast<int>(record.behavioral.size())};
        it = open_.emplace(record.session_id, std::move(o)).first;
    }
    Open& open = it->second;
    if (open.closed) {
        throw ValidationError("line " + std::to_string(line_number) + ": session " +
                              record.session_id + " already closed by an outcome record");
    }
    const int expected = open.trajectory.length() + 1;
    if (record.turn != expected) {
        std::ostringstream msg;
        msg << "line " << line_number << ": session " << record.session_id;
        if (record.turn <= open.trajectory.length()) {
            msg << ": duplicate or non-monotone turn index " << record.turn;
        } else {
            msg << ": turn-index gap, expected " << expected << ", got " << record.turn;
        }
        throw ValidationError(msg.str());
    }

    Eigen::VectorXd behavioral = record.behavioral;
    if (record.behavioral_filled) {
        behavioral = Eigen::VectorXd::Zero(open.shape.d_behavioral);
        ++filled_behavioral_;
    }
    try {
        open.trajectory.turns.push_back(
            fuse(open.shape, record.semantic, behavioral, record.turn, record.timestamp));
    } catch (const ValidationError& e) {
        throw ValidationError("line " + std::to_string(line_number) + ": " + e.what());
    }
    return open.trajectory.turns.back();
}

void SessionAssembler::add_outcome(const OutcomeRecord& record, std::size_t line_number) {
    auto it = open_.find(record.session_id);
    if (it == open_.end()) {
        throw ValidationError("line " + std::to_string(line_number) +
                              ": outcome for unknown session " + record.session_id);
    }
    Open& open = it->second;
    if (open.closed) {
        throw ValidationError("line " + std::to_string(line_number) +
                              ": duplicate outcome for session " + record.session_id);
    }
    if (record.outcome.has_event() && record.outcome.event_turn > open.trajectory.length()) {
        std::ostringstream msg;
        msg << "line " << line_number << ": session " << record.session_id
            << ": event_turn " << record.outcome.event_turn << " exceeds session length "
            << open.trajectory.length();
        throw ValidationError(msg.str());
    }
    open.trajectory.outcome = record.outcome;
    open.closed = true;
}

void SessionAssembler::add(const SessionRecord& record, std::size_t line_number) {
    if (const auto* turn = std::get_if<TurnRecord>(&record)) {
        add_turn(*turn, line_number);
    } else {
        add_outcome(std::get<OutcomeRecord>(record), line_number);
    }
}

std::vector<SessionTrajectory> SessionAssembler::finish() {
    std::vector<SessionTrajectory> out;
    out.reserve(order_.size());
    for (const auto& id : order_) {
        out.push_back(std::move(open_.at(id).trajectory));
    }
    order_.clear();
    open_.clear();
    return out;
}

std::vector<SessionTrajectory> read_sessions(std::istream& in) {
    SessionAssembler assembler;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        assembler.add(parse_session_line(line, line_number), line_number);
    }
    return assembler.finish();
}

std::vector<SessionTrajectory> read_sessions_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open session file: " + path);
    return read_sessions(in);
}

void write_sessions(const std::vector<SessionTrajectory>& sessions, std::ostream& out) {
    for (const auto& s : sessions) {
        for (const auto& turn : s.turns) {
            out << to_json_line(s.session_id, turn) << '\n';
        }
        if (s.outcome) {
            out << to_json_line(s.session_id, *s.outcome) << '\n';
        }
    }
}

void write_sessions_file(const std::vector<SessionTrajectory>& sessions,
                         const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open output file: " + path);
    write_sessions(sessions, out);
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace driftguard
