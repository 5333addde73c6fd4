#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "driftguard/commands.hpp"
#include "driftguard/errors.hpp"
#include "driftguard/rng.hpp"
#include "driftguard/session_io.hpp"

using namespace driftguard;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("driftguard-cmd-" + std::to_string(mix64(std::random_device{}())));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string dir(const std::string& name) const { return (path / name).string(); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    REQUIRE(out.good());
    out << content;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)), {});
}

const char* kScenarioBaseline = R"({
  "seed": 17,
  "baseline": {"dimension": 16, "n": 600, "components": 1, "d_behavioral": 4}
})";

// Training corpus heavy on events plus the evaluation corpus in one file set.
const char* kScenarioSessions = R"({
  "seed": 23,
  "scenarios": [
    {"name": "benign", "profile": "benign", "count": 16, "dimension": 16,
     "d_behavioral": 4, "n_turns": 30, "entropy": "low"},
    {"name": "crescendo", "profile": "crescendo", "count": 16, "dimension": 16,
     "d_behavioral": 4, "n_turns": 30, "step_norm": 0.8, "entropy": "low",
     "event_threshold": 8.0}
  ]
})";

// One full calibrate -> simulate -> train flow into `root`, returning the
// engine config used downstream.
std::string run_flow(const TempDir& tmp, const std::string& root) {
    fs::create_directories(tmp.dir(root));
    const std::string scen_base = tmp.file(root + "/scen_base.json");
    const std::string scen_sessions = tmp.file(root + "/scen_sessions.json");
    write_file(scen_base, kScenarioBaseline);
    write_file(scen_sessions, kScenarioSessions);

    std::ostringstream log;

    SimulateOptions base;
    base.common.out_dir = tmp.dir(root + "/data");
    base.scenario_path = scen_base;
    REQUIRE(cmd_simulate(base, log) == kExitSafe);

    const std::string config_path = tmp.file(root + "/config.toml");
    write_file(config_path, R"(
[forest]
n_trees = 50
subsample = 128
seed = 3

[manifold]
seed = 3

[survival]
include_belief = true

[pipeline]
trigger_threshold = 0.5
audit_probability = 0.05
audit_seed = 3
auto_hazard_threshold = true
)");

    CalibrateOptions calibrate;
    calibrate.common.config_path = config_path;
    calibrate.common.out_dir = tmp.dir(root + "/models");
    calibrate.baseline_path = tmp.file(root + "/data/baseline.jsonl");
    REQUIRE(cmd_calibrate(calibrate, log) == kExitSafe);

    // Pin the trigger threshold to the calibrated suggestion.
    const auto summary = load_calibration(tmp.file(root + "/models/calibration.json"));
    std::ostringstream patched;
    patched << read_file(config_path);
    patched << "\n[evaluation]\nwarm_up_turns = 5\n";
    const std::string final_config = tmp.file(root + "/config_final.toml");
    write_file(final_config,
               [&] {
                   std::string text = read_file(config_path);
                   const auto pos = text.find("trigger_threshold = 0.5");
                   REQUIRE(pos != std::string::npos);
                   char buf[64];
                   std::snprintf(buf, sizeof buf, "trigger_threshold = %.17g",
                                 summary.suggested_trigger_threshold);
                   text.replace(pos, std::string("trigger_threshold = 0.5").size(), buf);
                   return text;
               }());

    SimulateOptions sessions;
    sessions.common.config_path = final_config;
    sessions.common.out_dir = tmp.dir(root + "/corpus");
    sessions.scenario_path = scen_sessions;
    sessions.model_dir = tmp.dir(root + "/models");
    REQUIRE(cmd_simulate(sessions, log) == kExitSafe);

    TrainOptions train;
    train.common.config_path = final_config;
    train.common.out_dir = tmp.dir(root + "/models");
    train.corpus_path = tmp.file(root + "/corpus/corpus.jsonl");
    train.labels_path = tmp.file(root + "/corpus/labels.csv");
    train.model_dir = tmp.dir(root + "/models");
    REQUIRE(cmd_train(train, log) == kExitSafe);

    return final_config;
}

}  // namespace

TEST_SUITE("commands") {

TEST_CASE("full pipeline: calibrate, simulate, train, monitor, evaluate, verify") {
    const TempDir tmp;
    const std::string config = run_flow(tmp, "run");

    // Artifacts all landed.
    for (const char* name :
         {"models/forest.json", "models/manifold.json", "models/calibration.json",
          "models/survival.json", "models/covariates.csv", "corpus/corpus.jsonl",
          "corpus/labels.csv"}) {
        CHECK(fs::exists(tmp.file(std::string("run/") + name)));
    }
    const auto survival = load_survival(tmp.file("run/models/survival.json"));
    CHECK(survival.suggested_hazard_threshold > 0.0);
    CHECK(survival.cox.beta[0] > 0.0);  // distance drives the hazard upward

    std::ostringstream log;

    // Monitor a benign session: safe exit, one line per turn.
    const auto sessions = read_sessions_file(tmp.file("run/corpus/corpus.jsonl"));
    const auto is_benign = [](const SessionTrajectory& s) {
        return s.session_id.rfind("benign", 0) == 0;
    };
    const auto benign =
        std::find_if(sessions.begin(), sessions.end(), is_benign);
    REQUIRE(benign != sessions.end());
    {
        std::ostringstream stream;
        write_sessions({*benign}, stream);
        std::istringstream in(stream.str());
        std::ostringstream out;
        MonitorOptions monitor;
        monitor.common.config_path = config;
        monitor.model_dir = tmp.dir("run/models");
        CHECK(cmd_monitor(monitor, in, out, log) == kExitSafe);
        int lines = 0;
        std::string line;
        std::istringstream check(out.str());
        while (std::getline(check, line)) ++lines;
        CHECK(lines == benign->length());
    }

    // Monitor a crescendo session: alert exit, output truncated at the alert.
    const auto crescendo = std::find_if(sessions.begin(), sessions.end(),
                                        [](const SessionTrajectory& s) {
                                            return s.session_id.rfind("crescendo", 0) == 0;
                                        });
    REQUIRE(crescendo != sessions.end());
    {
        std::ostringstream stream;
        write_sessions({*crescendo}, stream);
        std::istringstream in(stream.str());
        std::ostringstream out;
        MonitorOptions monitor;
        monitor.common.config_path = config;
        monitor.model_dir = tmp.dir("run/models");
        CHECK(cmd_monitor(monitor, in, out, log) == kExitAlert);
        int lines = 0;
        std::string line, last;
        std::istringstream check(out.str());
        while (std::getline(check, line)) {
            ++lines;
            last = line;
        }
        CHECK(lines < crescendo->length());
        CHECK(last.find("\"alert\"") != std::string::npos);
    }

    // Evaluate: both detectors reported, files written.
    EvaluateOptions evaluate;
    evaluate.common.config_path = config;
    evaluate.common.out_dir = tmp.dir("run/eval");
    evaluate.corpus_path = tmp.file("run/corpus/corpus.jsonl");
    evaluate.labels_path = tmp.file("run/corpus/labels.csv");
    evaluate.model_dir = tmp.dir("run/models");
    std::ostringstream eval_log;
    CHECK(cmd_evaluate(evaluate, eval_log) == kExitSafe);
    CHECK(fs::exists(tmp.file("run/eval/comparison.csv")));
    CHECK(fs::exists(tmp.file("run/eval/summary.json")));
    CHECK(eval_log.str().find("cascade_detection_rate") != std::string::npos);

    // Verify: both property checks pass on this corpus.
    VerifyOptions verify;
    verify.common.config_path = config;
    verify.common.out_dir = tmp.dir("run/verify");
    verify.corpus_path = tmp.file("run/corpus/corpus.jsonl");
    verify.labels_path = tmp.file("run/corpus/labels.csv");
    verify.model_dir = tmp.dir("run/models");
    std::ostringstream verify_log;
    CHECK(cmd_verify(verify, verify_log) == kExitSafe);
    CHECK(verify_log.str().find("PASS bounded-time-to-failure") != std::string::npos);
    CHECK(verify_log.str().find("PASS acceleration-sign-separation") != std::string::npos);
}

TEST_CASE("two identical runs produce byte-identical outputs") {
    const TempDir tmp;
    run_flow(tmp, "a");
    run_flow(tmp, "b");
    for (const char* name :
         {"data/baseline.jsonl", "models/forest.json", "models/manifold.json",
          "models/calibration.json", "models/survival.json", "models/covariates.csv",
          "corpus/corpus.jsonl", "corpus/labels.csv"}) {
        CAPTURE(name);
        CHECK(read_file(tmp.file(std::string("a/") + name)) ==
              read_file(tmp.file(std::string("b/") + name)));
    }
    // Manifests differ only in wall-clock timing, by design.
}

TEST_CASE("monitor validates input and reports line context") {
    const TempDir tmp;
    run_flow(tmp, "m");
    MonitorOptions monitor;
    monitor.model_dir = tmp.dir("m/models");
    std::istringstream in(
        R"({"session_id": "x", "turn": 2, "semantic": [0,0,0,0,0,0,0,0,0,0,0,0], "behavioral": [0,0,0,0], "timestamp": 0})"
        "\n");
    std::ostringstream out, log;
    CHECK_THROWS_WITH_AS(cmd_monitor(monitor, in, out, log), doctest::Contains("line 1"),
                         ValidationError);

    std::istringstream wrong_dims(
        R"({"session_id": "x", "turn": 1, "semantic": [0,0], "behavioral": [0], "timestamp": 0})"
        "\n");
    CHECK_THROWS_WITH_AS(cmd_monitor(monitor, wrong_dims, out, log),
                         doctest::Contains("dimension"), ValidationError);
}

TEST_CASE("evaluate on an empty corpus emits a header-only csv") {
    const TempDir tmp;
    run_flow(tmp, "e");
    write_file(tmp.file("e/empty.jsonl"), "");
    write_file(tmp.file("e/empty_labels.csv"), "session_id,profile,event_turn\n");

    EvaluateOptions evaluate;
    evaluate.common.out_dir = tmp.dir("e/eval");
    evaluate.corpus_path = tmp.file("e/empty.jsonl");
    evaluate.labels_path = tmp.file("e/empty_labels.csv");
    evaluate.model_dir = tmp.dir("e/models");
    std::ostringstream log;
    CHECK(cmd_evaluate(evaluate, log) == kExitSafe);
    CHECK(read_file(tmp.file("e/eval/comparison.csv")) ==
          "session_id,profile,event_turn,cascade_turn,snapshot_turn\n");
}

TEST_CASE("covariate csv round-trips") {
    const TempDir tmp;
    std::vector<CovariateRow> rows;
    for (int t = 1; t <= 3; ++t) {
        CovariateRow row;
        row.session_id = "s";
        row.turn = t;
        row.z = CovariateVector(0.125 * t, 0.5, -0.25, 0.01);
        row.event = t == 3;
        rows.push_back(row);
    }
    write_covariates_csv(rows, tmp.file("cov.csv"));
    const auto reread = read_covariates_csv(tmp.file("cov.csv"));
    REQUIRE(reread.size() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(reread[i].session_id == rows[i].session_id);
        CHECK(reread[i].turn == rows[i].turn);
        CHECK(reread[i].z == rows[i].z);
        CHECK(reread[i].event == rows[i].event);
    }
}

TEST_CASE("labels csv loads back with profiles and censoring") {
    const TempDir tmp;
    GeneratedCorpus corpus;
    GeneratedSession s1;
    s1.trajectory.session_id = "a";
    s1.profile = Profile::kCrescendo;
    s1.event_turn = 7;
    GeneratedSession s2;
    s2.trajectory.session_id = "b";
    s2.profile = Profile::kBenign;
    corpus.sessions = {s1, s2};
    write_labels_csv(corpus, tmp.file("labels.csv"));
    const std::string text = read_file(tmp.file("labels.csv"));
    CHECK(text.find("a,crescendo,7") != std::string::npos);
    CHECK(text.find("b,benign,censored") != std::string::npos);
}

TEST_CASE("the installed cli drives the flow end to end") {
    const TempDir tmp;
    run_flow(tmp, "cli");

    const auto sessions = read_sessions_file(tmp.file("cli/corpus/corpus.jsonl"));
    const auto crescendo = std::find_if(sessions.begin(), sessions.end(),
                                        [](const SessionTrajectory& s) {
                                            return s.session_id.rfind("crescendo", 0) == 0;
                                        });
    REQUIRE(crescendo != sessions.end());
    write_sessions_file({*crescendo}, tmp.file("cli/one_session.jsonl"));

    const std::string cli = DRIFTGUARD_CLI_PATH;
    const std::string cmd = cli + " monitor " + tmp.file("cli/one_session.jsonl") +
                            " --model " + tmp.dir("cli/models") + " --config " +
                            tmp.file("cli/config_final.toml") + " > " +
                            tmp.file("cli/monitor_out.jsonl") + " 2> " +
                            tmp.file("cli/monitor_err.txt");
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    CHECK(WEXITSTATUS(status) == kExitAlert);
    CHECK(read_file(tmp.file("cli/monitor_out.jsonl")).find("alert") != std::string::npos);

    const std::string help = cli + " --help > " + tmp.file("cli/help.txt") + " 2>&1";
    REQUIRE(std::system(help.c_str()) == 0);
    const std::string help_text = read_file(tmp.file("cli/help.txt"));
    for (const char* sub : {"calibrate", "simulate", "train", "monitor", "evaluate",
                            "verify"}) {
        CHECK(help_text.find(sub) != std::string::npos);
    }
}

}  // TEST_SUITE
