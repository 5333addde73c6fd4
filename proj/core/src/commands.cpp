#include "driftguard/commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "driftguard/errors.hpp"
#include "driftguard/rng.hpp"
#include "driftguard/session_io.hpp"

namespace driftguard {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double x) {
    char buf[40];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}

std::string join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
    if (dir.empty()) throw ConfigError("an output directory is required (--out)");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
}

EngineConfig load_config(const CommonOptions& common) {
    EngineConfig config = common.config_path.empty()
                              ? EngineConfig()
                              : EngineConfig::from_file(common.config_path);
    if (common.seed) config.override_seeds(*common.seed);
    return config;
}

// Reproducibility record; wall-clock time is informational and the only
// nondeterministic field.
class Manifest {
public:
    Manifest(std::string command, const CommonOptions& common)
        : start_(std::chrono::steady_clock::now()) {
        j_["format"] = kManifestFormat;
        j_["command"] = std::move(command);
        j_["config"] = common.config_path.empty() ? "<defaults>" : common.config_path;
        if (common.seed) {
            j_["seed"] = *common.seed;
        } else {
            j_["seed"] = nullptr;
        }
        j_["inputs"] = json::object();
        j_["outputs"] = json::array();
    }

    void input(const std::string& name, const std::string& path) {
        j_["inputs"][name] = path;
    }
    void set(const std::string& key, const json& value) { j_[key] = value; }
    void output(const std::string& path) { j_["outputs"].push_back(path); }

    void write(const std::string& out_dir) {
        const auto elapsed = std::chrono::duration<double>(
                                 std::chrono::steady_clock::now() - start_)
                                 .count();
        j_["wall_clock_seconds"] = elapsed;
        std::ofstream out(join(out_dir, "manifest.json"));
        if (!out) throw IoError("cannot write manifest in " + out_dir);
        out << j_.dump(2) << '\n';
    }

private:
    json j_;
    std::chrono::steady_clock::time_point start_;
};

std::vector<StateVector> flatten_baseline(const std::vector<SessionTrajectory>& sessions) {
    std::vector<StateVector> out;
    for (const auto& s : sessions) {
        out.insert(out.end(), s.turns.begin(), s.turns.end());
    }
    if (out.size() < 2) {
        throw CalibrationError("baseline must contain at least 2 state vectors, got " +
                               std::to_string(out.size()));
    }
    return out;
}

double percentile(std::vector<double> sorted, double q) {
    const auto idx = static_cast<std::size_t>(
        std::llround(q * static_cast<double>(sorted.size() - 1)));
    return sorted[std::min(idx, sorted.size() - 1)];
}

}  // namespace

LoadedModels load_models(const std::string& model_dir, const EngineConfig& config,
                         bool require_survival) {
    if (model_dir.empty()) throw ConfigError("a model directory is required (--model)");
    LoadedModels loaded;
    loaded.bundle.forest = load_forest(join(model_dir, "forest.json"));
    loaded.bundle.manifold = load_manifold(join(model_dir, "manifold.json"));
    loaded.calibration = load_calibration(join(model_dir, "calibration.json"));
    loaded.bundle.hmm =
        make_hmm_params(config.belief, loaded.calibration.d_m_mean,
                        loaded.calibration.d_m_std, loaded.calibration.a_t_std);

    const std::string survival_path = join(model_dir, "survival.json");
    if (fs::exists(survival_path)) {
        SurvivalArtifact artifact = load_survival(survival_path);
        artifact.cox.hazard_floor = config.survival.hazard_floor;
        loaded.bundle.cox = std::move(artifact.cox);
        if (config.survival.use_aft && artifact.aft) {
            loaded.bundle.aft = std::move(artifact.aft);
        }
        loaded.suggested_hazard_threshold = artifact.suggested_hazard_threshold;
    } else if (require_survival) {
        throw ConfigError("survival model not found: " + survival_path);
    }
    return loaded;
}

PipelineConfig effective_pipeline_config(const EngineConfig& config,
                                         double suggested_hazard_threshold) {
    PipelineConfig pipeline = config.pipeline;
    if (config.auto_hazard_threshold && suggested_hazard_threshold > 0.0) {
        pipeline.hazard_threshold = suggested_hazard_threshold;
    }
    pipeline.validate();
    return pipeline;
}

int cmd_calibrate(const CalibrateOptions& options, std::ostream& log) {
    const EngineConfig config = load_config(options.common);
    ensure_dir(options.common.out_dir);
    Manifest manifest("calibrate", options.common);
    manifest.input("baseline", options.baseline_path);

    const auto baseline = flatten_baseline(read_sessions_file(options.baseline_path));

    const IsolationForest forest = IsolationForest::fit(baseline, config.forest);
    const ManifoldModel manifold = fit_mixture(baseline, config.manifold);

    // Baseline statistics: scout scores, distances, and the spread of the
    // distance second differences in sample order.
    std::vector<double> scores, distances;
    scores.reserve(baseline.size());
    distances.reserve(baseline.size());
    for (const auto& v : baseline) {
        scores.push_back(forest.score(v));
        distances.push_back(manifold.mahalanobis(v.values()));
    }
    double d_mean = 0.0;
    for (double d : distances) d_mean += d;
    d_mean /= static_cast<double>(distances.size());
    double d_var = 0.0;
    for (double d : distances) d_var += (d - d_mean) * (d - d_mean);
    d_var /= static_cast<double>(distances.size());

    double a_var = 0.0;
    int a_count = 0;
    for (std::size_t i = 2; i < distances.size(); ++i) {
        const double a = distances[i] - 2.0 * distances[i - 1] + distances[i - 2];
        a_var += a * a;
        ++a_count;
    }
    a_var = a_count > 0 ? a_var / a_count : 1.0;

    CalibrationSummary summary;
    summary.dimension = baseline.front().dimension();
    summary.d_behavioral = baseline.front().behavioral_dimension();
    summary.baseline_size = static_cast<int>(baseline.size());
    summary.components = manifold.size();
    int dominant = 0;
    manifold.weights().maxCoeff(&dominant);
    summary.shrinkage = manifold.components()[dominant].shrinkage();
    summary.min_precision_eigenvalue =
        manifold.components()[dominant].min_precision_eigenvalue();
    summary.d_m_mean = d_mean;
    summary.d_m_std = std::sqrt(d_var);
    summary.a_t_std = std::sqrt(a_var);

    std::vector<double> sorted_scores = scores;
    std::sort(sorted_scores.begin(), sorted_scores.end());
    for (const auto& [name, q] : std::initializer_list<std::pair<const char*, double>>{
             {"p50", 0.50}, {"p90", 0.90}, {"p95", 0.95}, {"p99", 0.99}}) {
        summary.score_percentiles[name] = percentile(sorted_scores, q);
    }
    summary.suggested_trigger_threshold = summary.score_percentiles["p99"];

    save_forest(forest, join(options.common.out_dir, "forest.json"));
    save_manifold(manifold, join(options.common.out_dir, "manifold.json"));
    save_calibration(summary, join(options.common.out_dir, "calibration.json"));
    manifest.output("forest.json");
    manifest.output("manifold.json");
    manifest.output("calibration.json");
    manifest.set("artifact_formats",
                 json::array({kForestFormat, kManifoldFormat, kCalibrationFormat}));
    manifest.write(options.common.out_dir);

    log << "calibrated " << summary.baseline_size << " states (D=" << summary.dimension
        << "): shrinkage=" << format_double(summary.shrinkage)
        << " min_precision_eig=" << format_double(summary.min_precision_eigenvalue)
        << " suggested_trigger_threshold="
        << format_double(summary.suggested_trigger_threshold) << "\n";
    return kExitSafe;
}

namespace {

ScenarioSpec scenario_from_json(const json& j, const std::string& name) {
    ScenarioSpec spec;
    static const std::set<std::string> known = {
        "name",           "profile",     "count",        "dimension",
        "d_behavioral",   "n_turns",     "step_norm",    "convergence_rate",
        "payload_norm",   "margin",      "alpha",        "entropy",
        "noise_scale",    "event_threshold",             "start_scale"};
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!known.count(key)) {
            throw ConfigError("scenario '" + name + "': unknown field '" + key + "'");
        }
    }
    spec.profile = profile_from_string(j.at("profile").get<std::string>());
    spec.dimension = j.value("dimension", spec.dimension);
    spec.d_behavioral = j.value("d_behavioral", spec.d_behavioral);
    spec.n_turns = j.value("n_turns", spec.n_turns);
    spec.step_norm = j.value("step_norm", spec.step_norm);
    spec.convergence_rate = j.value("convergence_rate", spec.convergence_rate);
    spec.payload_norm = j.value("payload_norm", spec.payload_norm);
    spec.margin = j.value("margin", spec.margin);
    spec.alpha = j.value("alpha", spec.alpha);
    if (j.contains("entropy")) {
        const std::string e = j["entropy"].get<std::string>();
        if (e == "high") {
            spec.entropy = BehavioralEntropy::kHigh;
        } else if (e == "low") {
            spec.entropy = BehavioralEntropy::kLow;
        } else {
            throw ConfigError("scenario '" + name + "': entropy must be high or low");
        }
    }
    spec.noise_scale = j.value("noise_scale", spec.noise_scale);
    spec.event_threshold = j.value("event_threshold", spec.event_threshold);
    spec.start_scale = j.value("start_scale", spec.start_scale);
    return spec;
}

}  // namespace

int cmd_simulate(const SimulateOptions& options, std::ostream& log) {
    const EngineConfig config = load_config(options.common);
    ensure_dir(options.common.out_dir);
    Manifest manifest("simulate", options.common);
    manifest.input("scenario", options.scenario_path);

    std::ifstream in(options.scenario_path);
    if (!in) throw IoError("cannot open scenario file: " + options.scenario_path);
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw IoError("scenario file is not valid JSON: " + std::string(e.what()));
    }

    const std::uint64_t top_seed =
        options.common.seed.value_or(doc.value("seed", std::uint64_t{1}));
    manifest.set("resolved_seed", top_seed);

    if (doc.contains("baseline")) {
        const json& b = doc["baseline"];
        const auto sample = generate_baseline(
            b.value("dimension", 64), b.value("n", 2000), b.value("components", 1),
            derive_seed(top_seed, 0xba5eULL), b.value("separation", 10.0),
            b.value("d_behavioral", 8), b.value("anisotropy", 16.0));
        SessionTrajectory as_session;
        as_session.session_id = "baseline";
        as_session.turns = sample;
        write_sessions_file({as_session}, join(options.common.out_dir, "baseline.jsonl"));
        manifest.output("baseline.jsonl");
        log << "baseline: " << sample.size() << " states of dimension "
            << sample.front().dimension() << "\n";
    }

    if (doc.contains("scenarios")) {
        if (options.model_dir.empty()) {
            throw ConfigError("session scenarios require calibrated artifacts (--model)");
        }
        const LoadedModels loaded = load_models(options.model_dir, config, false);
        manifest.input("model", options.model_dir);

        GeneratedCorpus corpus;
        std::size_t scenario_index = 0;
        for (const auto& sj : doc["scenarios"]) {
            const std::string name =
                sj.value("name", std::string(to_string(profile_from_string(
                                     sj.at("profile").get<std::string>()))));
            ScenarioSpec spec = scenario_from_json(sj, name);
            const int count = sj.value("count", 1);
            for (int k = 0; k < count; ++k) {
                spec.seed = derive_seed(top_seed, scenario_index, static_cast<std::uint64_t>(k));
                char suffix[16];
                std::snprintf(suffix, sizeof suffix, "-%04d", k);
                corpus.sessions.push_back(
                    generate_session(spec, loaded.bundle, name + suffix));
            }
            ++scenario_index;
        }

        std::vector<SessionTrajectory> trajectories;
        trajectories.reserve(corpus.sessions.size());
        for (const auto& s : corpus.sessions) trajectories.push_back(s.trajectory);
        write_sessions_file(trajectories, join(options.common.out_dir, "corpus.jsonl"));
        write_labels_csv(corpus, join(options.common.out_dir, "labels.csv"));
        manifest.output("corpus.jsonl");
        manifest.output("labels.csv");
        log << "corpus: " << corpus.sessions.size() << " sessions\n";
    }

    manifest.write(options.common.out_dir);
    return kExitSafe;
}

int cmd_train(const TrainOptions& options, std::ostream& log) {
    const EngineConfig config = load_config(options.common);
    ensure_dir(options.common.out_dir);
    Manifest manifest("train", options.common);
    manifest.input("corpus", options.corpus_path);
    if (!options.labels_path.empty()) manifest.input("labels", options.labels_path);
    manifest.input("model", options.model_dir);

    const LoadedModels loaded = load_models(options.model_dir, config, false);
    const GeneratedCorpus corpus = load_corpus(options.corpus_path, options.labels_path);

    std::vector<CovariateRow> rows;
    std::vector<std::pair<bool, std::vector<CovariateRow>>> per_session;  // (censored, rows)
    for (const auto& session : corpus.sessions) {
        auto session_rows =
            extract_covariates(session.trajectory, loaded.bundle, config.pipeline);
        const bool censored = !session.event_turn.has_value();
        rows.insert(rows.end(), session_rows.begin(), session_rows.end());
        per_session.emplace_back(censored, std::move(session_rows));
    }
    write_covariates_csv(rows, join(options.common.out_dir, "covariates.csv"));
    manifest.output("covariates.csv");

    SurvivalArtifact artifact;
    artifact.cox = fit_cox(rows, config.survival.cox);
    artifact.cox.hazard_floor = config.survival.hazard_floor;
    if (config.survival.use_aft) {
        artifact.aft = fit_aft(rows, config.survival.aft);
    }

    // Threshold suggestion: just above the strongest hazard any censored
    // training session produced.
    double max_censored_hazard = 0.0;
    for (const auto& [censored, session_rows] : per_session) {
        if (!censored) continue;
        for (const auto& row : session_rows) {
            const double h = ensemble_hazard(artifact.cox.hazard(row.turn, row.z),
                                             artifact.aft, row.turn, row.z);
            max_censored_hazard = std::max(max_censored_hazard, h);
        }
    }
    artifact.suggested_hazard_threshold =
        max_censored_hazard > 0.0 ? 1.05 * max_censored_hazard : 0.0;

    save_survival(artifact, join(options.common.out_dir, "survival.json"));
    manifest.output("survival.json");
    manifest.set("artifact_formats", json::array({kSurvivalFormat}));
    manifest.write(options.common.out_dir);

    log << "cox fit over " << corpus.sessions.size() << " sessions, "
        << rows.size() << " rows: beta = [";
    for (int i = 0; i < kCovariateCount; ++i) {
        log << (i ? ", " : "") << kCovariateNames[i] << "="
            << format_double(artifact.cox.beta[i]);
    }
    log << "], log PL = " << format_double(artifact.cox.diagnostics.log_likelihood)
        << ", suggested_hazard_threshold = "
        << format_double(artifact.suggested_hazard_threshold) << "\n";
    if (artifact.aft) {
        log << "aft partner: shape = " << format_double(artifact.aft->shape)
            << ", scale = " << format_double(artifact.aft->scale) << "\n";
    }
    return kExitSafe;
}

int cmd_monitor(const MonitorOptions& options, std::istream& in, std::ostream& out,
                std::ostream& log) {
    const EngineConfig config = load_config(options.common);
    const LoadedModels loaded = load_models(options.model_dir, config, true);
    const PipelineConfig pipeline =
        effective_pipeline_config(config, loaded.suggested_hazard_threshold);

    std::ofstream copy;
    const bool keep_copy = !options.common.out_dir.empty();
    Manifest manifest("monitor", options.common);
    manifest.input("model", options.model_dir);
    manifest.input("session",
                   options.input_path.empty() ? "<stdin>" : options.input_path);
    if (keep_copy) {
        ensure_dir(options.common.out_dir);
        copy.open(join(options.common.out_dir, "monitor.jsonl"));
        manifest.output("monitor.jsonl");
    }

    SessionAssembler assembler;
    std::map<std::string, SessionMonitor> monitors;
    bool any_alert = false;
    std::string line;
    std::size_t line_number = 0;
    int turns_processed = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        const SessionRecord record = parse_session_line(line, line_number);
        if (std::holds_alternative<OutcomeRecord>(record)) {
            continue;  // training labels are legal input but mean nothing live
        }
        const auto& turn_record = std::get<TurnRecord>(record);
        auto it = monitors.find(turn_record.session_id);
        if (it == monitors.end()) {
            it = monitors
                     .emplace(turn_record.session_id,
                              SessionMonitor(turn_record.session_id, loaded.bundle,
                                             pipeline))
                     .first;
        }
        if (it->second.alerted()) continue;  // session already stopped

        const StateVector& state = assembler.add_turn(turn_record, line_number);
        if (state.dimension() != loaded.bundle.forest.dimension()) {
            throw ValidationError(
                "line " + std::to_string(line_number) + ": state dimension " +
                std::to_string(state.dimension()) + " does not match the model dimension " +
                std::to_string(loaded.bundle.forest.dimension()));
        }
        const TurnAssessment assessment = it->second.assess_turn(state);
        const std::string out_line = assessment_json_line(turn_record.session_id, assessment);
        out << out_line << '\n' << std::flush;  // per-turn flush: real-time contract
        if (keep_copy) copy << out_line << '\n';
        ++turns_processed;
        if (assessment.verdict == Verdict::kAlert) any_alert = true;
    }

    if (keep_copy) {
        manifest.set("turns_processed", turns_processed);
        manifest.set("alerted", any_alert);
        manifest.write(options.common.out_dir);
    }
    log << "monitored " << monitors.size() << " session(s), " << turns_processed
        << " turn(s); " << (any_alert ? "ALERT" : "safe") << "\n";
    return any_alert ? kExitAlert : kExitSafe;
}

namespace {

json comparison_summary_json(const ComparisonReport& report) {
    json j;
    j["snapshot_threshold"] = report.snapshot_threshold;
    j["threshold_calibrated"] = report.threshold_calibrated;
    j["benign_sessions"] = report.benign_sessions;
    j["attack_sessions"] = report.attack_sessions;
    j["cascade_benign_alert_rate"] = report.cascade_benign_alert_rate;
    j["snapshot_benign_alert_rate"] = report.snapshot_benign_alert_rate;
    j["cascade_detection_rate"] = report.cascade_detection_rate;
    j["snapshot_detection_rate"] = report.snapshot_detection_rate;
    j["cascade_survival_curve"] =
        report.survival_curves.empty() ? json::array() : json(report.survival_curves[0]);
    j["snapshot_survival_curve"] =
        report.survival_curves.size() < 2 ? json::array() : json(report.survival_curves[1]);
    return j;
}

std::string comparison_rows_csv(const ComparisonReport& report) {
    std::ostringstream csv;
    csv << "session_id,profile,event_turn,cascade_turn,snapshot_turn\n";
    for (const auto& row : report.rows) {
        csv << row.session_id << ',' << to_string(row.profile) << ',';
        if (row.event_turn) {
            csv << *row.event_turn;
        } else {
            csv << "censored";
        }
        csv << ',' << (row.cascade_turn ? std::to_string(*row.cascade_turn) : "none");
        csv << ',' << (row.snapshot_turn ? std::to_string(*row.snapshot_turn) : "none");
        csv << '\n';
    }
    return csv.str();
}

json property_report_json(const PropertyReport& report) {
    json j;
    j["name"] = report.name;
    j["sessions_checked"] = report.sessions_checked;
    j["failures"] = report.failures;
    json sessions = json::array();
    for (const auto& s : report.sessions) {
        json sj;
        sj["session_id"] = s.session_id;
        sj["profile"] = std::string(to_string(s.profile));
        sj["passed"] = s.passed;
        if (s.crossing_turn) sj["crossing_turn"] = *s.crossing_turn;
        sj["mean_acceleration"] = s.mean_acceleration;
        if (!s.detail.empty()) sj["detail"] = s.detail;
        sessions.push_back(std::move(sj));
    }
    j["sessions"] = std::move(sessions);
    return j;
}

}  // namespace

int cmd_evaluate(const EvaluateOptions& options, std::ostream& log) {
    const EngineConfig config = load_config(options.common);
    ensure_dir(options.common.out_dir);
    Manifest manifest("evaluate", options.common);
    manifest.input("corpus", options.corpus_path);
    manifest.input("labels", options.labels_path);
    manifest.input("model", options.model_dir);

    const LoadedModels loaded = load_models(options.model_dir, config, true);
    const PipelineConfig pipeline =
        effective_pipeline_config(config, loaded.suggested_hazard_threshold);
    const GeneratedCorpus corpus = load_corpus(options.corpus_path, options.labels_path);

    const std::optional<double> threshold =
        options.snapshot_threshold ? options.snapshot_threshold
                                   : config.evaluation.snapshot_threshold;
    const ComparisonReport report =
        comparative_evaluation(corpus, loaded.bundle, pipeline, threshold);

    const std::string csv = comparison_rows_csv(report);
    {
        std::ofstream out(join(options.common.out_dir, "comparison.csv"));
        if (!out) throw IoError("cannot write comparison.csv");
        out << csv;
    }
    const json summary = comparison_summary_json(report);
    {
        std::ofstream out(join(options.common.out_dir, "summary.json"));
        if (!out) throw IoError("cannot write summary.json");
        out << summary.dump(2) << '\n';
    }
    manifest.output("comparison.csv");
    manifest.output("summary.json");
    manifest.set("snapshot_threshold", report.snapshot_threshold);
    manifest.write(options.common.out_dir);

    if (options.format == "csv") {
        log << csv;
    } else {
        log << summary.dump(2) << '\n';
    }
    return kExitSafe;
}

int cmd_verify(const VerifyOptions& options, std::ostream& log) {
    const EngineConfig config = load_config(options.common);
    ensure_dir(options.common.out_dir);
    Manifest manifest("verify", options.common);
    manifest.input("corpus", options.corpus_path);
    manifest.input("labels", options.labels_path);
    manifest.input("model", options.model_dir);

    const LoadedModels loaded = load_models(options.model_dir, config, true);
    const PipelineConfig pipeline =
        effective_pipeline_config(config, loaded.suggested_hazard_threshold);
    const GeneratedCorpus corpus = load_corpus(options.corpus_path, options.labels_path);

    const PropertyReport bound = verify_failure_bound(corpus, loaded.bundle, pipeline);
    const PropertyReport accel = verify_acceleration_sign(
        corpus, loaded.bundle, pipeline, config.evaluation.acceleration);

    json out;
    out["format"] = "driftguard.properties/1";
    out["checks"] = json::array({property_report_json(bound), property_report_json(accel)});
    {
        std::ofstream f(join(options.common.out_dir, "properties.json"));
        if (!f) throw IoError("cannot write properties.json");
        f << out.dump(2) << '\n';
    }
    manifest.output("properties.json");
    manifest.write(options.common.out_dir);

    bool all_passed = true;
    for (const auto* report : {&bound, &accel}) {
        log << (report->all_passed() ? "PASS " : "FAIL ") << report->name << ": "
            << (report->sessions_checked - report->failures) << "/"
            << report->sessions_checked << " sessions\n";
        all_passed = all_passed && report->all_passed();
    }
    return all_passed ? kExitSafe : kExitError;
}

GeneratedCorpus load_corpus(const std::string& corpus_path, const std::string& labels_path) {
    GeneratedCorpus corpus;
    const auto sessions = read_sessions_file(corpus_path);

    struct Label {
        Profile profile;
        std::optional<int> event_turn;
    };
    std::map<std::string, Label> labels;
    if (!labels_path.empty()) {
        std::ifstream in(labels_path);
        if (!in) throw IoError("cannot open labels file: " + labels_path);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            if (line_no == 1 && line.rfind("session_id,", 0) == 0) continue;
            std::istringstream row(line);
            std::string id, profile, event;
            if (!std::getline(row, id, ',') || !std::getline(row, profile, ',') ||
                !std::getline(row, event, ',')) {
                throw IoError(labels_path + ":" + std::to_string(line_no) +
                              ": expected session_id,profile,event_turn");
            }
            Label label{profile_from_string(profile), std::nullopt};
            if (event != "censored") {
                int turn{};
                const auto [ptr, ec] =
                    std::from_chars(event.data(), event.data() + event.size(), turn);
                if (ec != std::errc() || ptr != event.data() + event.size() || turn < 1) {
                    throw IoError(labels_path + ":" + std::to_string(line_no) +
                                  ": event_turn must be a positive integer or 'censored'");
                }
                label.event_turn = turn;
            }
            labels[id] = label;
        }
    }

    for (const auto& trajectory : sessions) {
        GeneratedSession session;
        session.trajectory = trajectory;
        if (const auto it = labels.find(trajectory.session_id); it != labels.end()) {
            session.profile = it->second.profile;
            session.event_turn = it->second.event_turn;
        } else if (!labels.empty()) {
            throw ValidationError("no label for session " + trajectory.session_id);
        } else if (trajectory.outcome && trajectory.outcome->has_event()) {
            session.profile = Profile::kCrescendo;
            session.event_turn = trajectory.outcome->event_turn;
        } else {
            session.profile = Profile::kBenign;
        }
        corpus.sessions.push_back(std::move(session));
    }
    return corpus;
}

void write_labels_csv(const GeneratedCorpus& corpus, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write labels file: " + path);
    out << "session_id,profile,event_turn\n";
    for (const auto& s : corpus.sessions) {
        out << s.trajectory.session_id << ',' << to_string(s.profile) << ',';
        if (s.event_turn) {
            out << *s.event_turn;
        } else {
            out << "censored";
        }
        out << '\n';
    }
}

void write_covariates_csv(const std::vector<CovariateRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write covariates file: " + path);
    out << "session_id,turn,d_m,s_iso,a_t,p_malicious,event\n";
    for (const auto& row : rows) {
        out << row.session_id << ',' << row.turn;
        for (int i = 0; i < kCovariateCount; ++i) out << ',' << format_double(row.z[i]);
        out << ',' << (row.event ? 1 : 0) << '\n';
    }
}

std::vector<CovariateRow> read_covariates_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open covariates file: " + path);
    std::vector<CovariateRow> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line_no == 1 && line.rfind("session_id,", 0) == 0) continue;
        std::istringstream row_in(line);
        std::string field;
        CovariateRow row;
        const auto next = [&](const char* what) {
            if (!std::getline(row_in, field, ',')) {
                throw IoError(path + ":" + std::to_string(line_no) + ": missing field " +
                              what);
            }
            return field;
        };
        row.session_id = next("session_id");
        row.turn = std::stoi(next("turn"));
        for (int i = 0; i < kCovariateCount; ++i) {
            row.z[i] = std::stod(next(std::string(kCovariateNames[i]).c_str()));
        }
        row.event = next("event") == "1";
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace driftguard
