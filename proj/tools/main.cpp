#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "driftguard/commands.hpp"
#include "driftguard/errors.hpp"

namespace {

void add_common(CLI::App* cmd, driftguard::CommonOptions& common, bool out_required = true) {
    cmd->add_option("--config", common.config_path, "Engine config file (TOML key/value)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", common.seed, "Override every configured seed");
    auto* out = cmd->add_option("--out", common.out_dir, "Output directory");
    if (out_required) out->required();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"driftguard: streaming session-risk monitor and simulation harness"};
    app.require_subcommand(1);

    driftguard::CalibrateOptions calibrate;
    auto* cmd_cal = app.add_subcommand(
        "calibrate", "Fit the scout forest and baseline model from a state JSONL");
    add_common(cmd_cal, calibrate.common);
    cmd_cal->add_option("--baseline", calibrate.baseline_path, "Baseline session JSONL")
        ->required()
        ->check(CLI::ExistingFile);

    driftguard::SimulateOptions simulate;
    auto* cmd_sim = app.add_subcommand(
        "simulate", "Generate a baseline sample and/or an adversarial session corpus");
    add_common(cmd_sim, simulate.common);
    cmd_sim->add_option("--scenario", simulate.scenario_path, "Scenario JSON document")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_sim->add_option("--model", simulate.model_dir,
                        "Calibrated artifact directory (needed for session scenarios)");

    driftguard::TrainOptions train;
    auto* cmd_train_app =
        app.add_subcommand("train", "Fit the survival models from a labeled corpus");
    add_common(cmd_train_app, train.common);
    cmd_train_app->add_option("corpus", train.corpus_path, "Corpus session JSONL")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_train_app->add_option("--labels", train.labels_path, "Labels CSV")
        ->check(CLI::ExistingFile);
    cmd_train_app->add_option("--model", train.model_dir, "Calibrated artifact directory")
        ->required();

    driftguard::MonitorOptions monitor;
    auto* cmd_mon = app.add_subcommand(
        "monitor", "Assess a session stream turn by turn (reads stdin without a file)");
    add_common(cmd_mon, monitor.common, /*out_required=*/false);
    cmd_mon->add_option("input", monitor.input_path, "Session JSONL (default: stdin)")
        ->check(CLI::ExistingFile);
    cmd_mon->add_option("--model", monitor.model_dir, "Model artifact directory")
        ->required();

    driftguard::EvaluateOptions evaluate;
    auto* cmd_eval = app.add_subcommand(
        "evaluate", "Compare the cascade against the memoryless snapshot baseline");
    add_common(cmd_eval, evaluate.common);
    cmd_eval->add_option("corpus", evaluate.corpus_path, "Corpus session JSONL")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_eval->add_option("labels", evaluate.labels_path, "Labels CSV")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_eval->add_option("--model", evaluate.model_dir, "Model artifact directory")
        ->required();
    cmd_eval->add_option("--format", evaluate.format, "Stdout payload: json or csv")
        ->check(CLI::IsMember({"json", "csv"}));
    cmd_eval->add_option("--snapshot-threshold", evaluate.snapshot_threshold,
                         "Fix the snapshot detector threshold instead of calibrating");

    driftguard::VerifyOptions verify;
    auto* cmd_ver = app.add_subcommand(
        "verify", "Run the bounded-failure and acceleration property checks");
    add_common(cmd_ver, verify.common);
    cmd_ver->add_option("corpus", verify.corpus_path, "Corpus session JSONL")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_ver->add_option("labels", verify.labels_path, "Labels CSV")
        ->required()
        ->check(CLI::ExistingFile);
    cmd_ver->add_option("--model", verify.model_dir, "Model artifact directory")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_cal->parsed()) return driftguard::cmd_calibrate(calibrate, std::cout);
        if (cmd_sim->parsed()) return driftguard::cmd_simulate(simulate, std::cout);
        if (cmd_train_app->parsed()) return driftguard::cmd_train(train, std::cout);
        if (cmd_mon->parsed()) {
            if (monitor.input_path.empty()) {
                return driftguard::cmd_monitor(monitor, std::cin, std::cout, std::cerr);
            }
            std::ifstream in(monitor.input_path);
            if (!in) {
                std::cerr << "error: cannot open " << monitor.input_path << "\n";
                return driftguard::kExitError;
            }
            return driftguard::cmd_monitor(monitor, in, std::cout, std::cerr);
        }
        if (cmd_eval->parsed()) return driftguard::cmd_evaluate(evaluate, std::cout);
        if (cmd_ver->parsed()) return driftguard::cmd_verify(verify, std::cout);
    } catch (const driftguard::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return driftguard::kExitError;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return driftguard::kExitError;
    }
    return driftguard::kExitError;
}
