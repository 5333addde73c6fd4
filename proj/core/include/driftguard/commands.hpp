#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "driftguard/artifacts.hpp"
#include "driftguard/config.hpp"
#include "driftguard/pipeline.hpp"
#include "driftguard/simulator.hpp"

namespace driftguard {

/// Exit codes shared by every command.
inline constexpr int kExitSafe = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitAlert = 2;

struct CommonOptions {
    std::string config_path;             // empty: built-in defaults
    std::optional<std::uint64_t> seed;   // overrides every configured seed
    std::string out_dir;                 // where artifacts and the manifest land
};

struct CalibrateOptions {
    CommonOptions common;
    std::string baseline_path;  // session JSONL with the baseline states
};

struct SimulateOptions {
    CommonOptions common;
    std::string scenario_path;  // scenario JSON document
    std::string model_dir;      // calibrated artifacts; required for session scenarios
};

struct TrainOptions {
    CommonOptions common;
    std::string corpus_path;
    std::string labels_path;  // optional; outcomes may be embedded in the corpus
    std::string model_dir;
};

struct MonitorOptions {
    CommonOptions common;
    std::string input_path;  // empty: read standard input
    std::string model_dir;
};

struct EvaluateOptions {
    CommonOptions common;
    std::string corpus_path;
    std::string labels_path;
    std::string model_dir;
    std::string format = "json";  // stdout payload: "json" summary or "csv" rows
    std::optional<double> snapshot_threshold;
};

struct VerifyOptions {
    CommonOptions common;
    std::string corpus_path;
    std::string labels_path;
    std::string model_dir;
};

int cmd_calibrate(const CalibrateOptions& options, std::ostream& log);
int cmd_simulate(const SimulateOptions& options, std::ostream& log);
int cmd_train(const TrainOptions& options, std::ostream& log);
int cmd_monitor(const MonitorOptions& options, std::istream& in, std::ostream& out,
                std::ostream& log);
int cmd_evaluate(const EvaluateOptions& options, std::ostream& log);
int cmd_verify(const VerifyOptions& options, std::ostream& log);

// Shared plumbing, also used by the acceptance suite.

/// Loads forest + manifold + calibration (+ survival when required) from a
/// model directory and assembles the immutable bundle, with emissions derived
/// from the stored calibration statistics.
struct LoadedModels {
    ModelBundle bundle;
    CalibrationSummary calibration;
    double suggested_hazard_threshold = 0.0;
};
LoadedModels load_models(const std::string& model_dir, const EngineConfig& config,
                         bool require_survival);

/// Pipeline configuration with the optional training-time hazard threshold
/// substitution applied.
PipelineConfig effective_pipeline_config(const EngineConfig& config,
                                         double suggested_hazard_threshold);

/// Reads a corpus plus its labels CSV back into memory. With an empty labels
/// path the outcome lines embedded in the JSONL drive the event turns and
/// profiles default to crescendo for event sessions and benign otherwise.
GeneratedCorpus load_corpus(const std::string& corpus_path, const std::string& labels_path);

void write_labels_csv(const GeneratedCorpus& corpus, const std::string& path);
void write_covariates_csv(const std::vector<CovariateRow>& rows, const std::string& path);
std::vector<CovariateRow> read_covariates_csv(const std::string& path);

}  // namespace driftguard
