#include "driftguard/artifacts.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "driftguard/errors.hpp"

namespace driftguard {

namespace {

using nlohmann::json;

json read_json(const std::string& path, std::string_view expected_format) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open artifact: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw IoError("artifact " + path + " is not valid JSON: " + e.what());
    }
    if (!j.is_object() || j.value("format", "") != expected_format) {
        throw IoError("artifact " + path + " does not carry format tag '" +
                      std::string(expected_format) + "'");
    }
    return j;
}

void write_json(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open artifact for writing: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw IoError("artifact write failed: " + path);
}

json vector_to_json(const Eigen::VectorXd& v) {
    return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd vector_from_json(const json& j) {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(values.data(), values.size());
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        rows.push_back(vector_to_json(m.row(r).transpose()));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    const std::size_t rows = j.size();
    if (rows == 0) return Eigen::MatrixXd(0, 0);
    Eigen::MatrixXd m(rows, j[0].size());
    for (std::size_t r = 0; r < rows; ++r) {
        const Eigen::VectorXd row = vector_from_json(j[r]);
        if (row.size() != m.cols()) {
            throw IoError("artifact matrix is ragged");
        }
        m.row(static_cast<Eigen::Index>(r)) = row.transpose();
    }
    return m;
}

json covariates_to_json(const CovariateVector& v) {
    json j;
    for (int i = 0; i < kCovariateCount; ++i) j[std::string(kCovariateNames[i])] = v[i];
    return j;
}

CovariateVector covariates_from_json(const json& j) {
    CovariateVector v;
    for (int i = 0; i < kCovariateCount; ++i) {
        v[i] = j.at(std::string(kCovariateNames[i])).get<double>();
    }
    return v;
}

}  // namespace

void save_forest(const IsolationForest& forest, const std::string& path) {
    if (!forest.fitted()) throw ConfigError("cannot save an unfitted forest");
    json j;
    j["format"] = kForestFormat;
    j["n_trees"] = forest.params().n_trees;
    j["subsample"] = forest.params().subsample_size;
    j["seed"] = forest.params().seed;
    j["dimension"] = forest.dimension();
    j["normalization"] = forest.normalization();
    json trees = json::array();
    for (const auto& tree : forest.trees()) {
        json nodes = json::array();
        for (const auto& n : tree.nodes()) {
            nodes.push_back({n.feature, n.threshold, n.left, n.right, n.size});
        }
        trees.push_back(std::move(nodes));
    }
    j["trees"] = std::move(trees);
    write_json(j, path);
}

IsolationForest load_forest(const std::string& path) {
    const json j = read_json(path, kForestFormat);
    ForestParams params;
    params.n_trees = j.at("n_trees").get<int>();
    params.subsample_size = j.at("subsample").get<int>();
    params.seed = j.at("seed").get<std::uint64_t>();
    const int dimension = j.at("dimension").get<int>();

    std::vector<IsolationTree> trees;
    trees.reserve(j.at("trees").size());
    for (const auto& tj : j.at("trees")) {
        std::vector<IsolationTree::Node> nodes;
        nodes.reserve(tj.size());
        for (const auto& nj : tj) {
            if (!nj.is_array() || nj.size() != 5) {
                throw IoError("artifact " + path + ": malformed tree node");
            }
            IsolationTree::Node n;
            n.feature = nj[0].get<std::int32_t>();
            n.threshold = nj[1].get<double>();
            n.left = nj[2].get<std::int32_t>();
            n.right = nj[3].get<std::int32_t>();
            n.size = nj[4].get<std::int32_t>();
            nodes.push_back(n);
        }
        trees.emplace_back(std::move(nodes));
    }
    if (static_cast<int>(trees.size()) != params.n_trees) {
        throw IoError("artifact " + path + ": tree count mismatch");
    }
    IsolationForest forest(std::move(trees), params, dimension);
    const double stored = j.at("normalization").get<double>();
    if (std::abs(stored - forest.normalization()) >
        1e-12 * std::max(1.0, std::abs(stored))) {
        throw IoError("artifact " + path + ": normalization constant mismatch");
    }
    return forest;
}

void save_manifold(const ManifoldModel& model, const std::string& path) {
    json j;
    j["format"] = kManifoldFormat;
    j["components"] = model.size();
    j["weights"] = vector_to_json(model.weights());
    json comps = json::array();
    for (const auto& g : model.components()) {
        json c;
        c["mean"] = vector_to_json(g.mean());
        c["covariance"] = matrix_to_json(g.covariance());
        c["shrinkage"] = g.shrinkage();
        c["effective_n"] = g.effective_n();
        c["min_precision_eigenvalue"] = g.min_precision_eigenvalue();
        comps.push_back(std::move(c));
    }
    j["component_models"] = std::move(comps);
    write_json(j, path);
}

ManifoldModel load_manifold(const std::string& path) {
    const json j = read_json(path, kManifoldFormat);
    std::vector<ShrunkGaussian> comps;
    for (const auto& c : j.at("component_models")) {
        ShrunkGaussian g = ShrunkGaussian::from_moments(
            vector_from_json(c.at("mean")), matrix_from_json(c.at("covariance")),
            c.at("shrinkage").get<double>(), c.at("effective_n").get<double>());
        const double stored = c.at("min_precision_eigenvalue").get<double>();
        if (std::abs(stored - g.min_precision_eigenvalue()) >
            1e-6 * std::abs(g.min_precision_eigenvalue())) {
            throw IoError("artifact " + path +
                          ": stored precision floor disagrees with the rebuilt factor");
        }
        comps.push_back(std::move(g));
    }
    return ManifoldModel(std::move(comps), vector_from_json(j.at("weights")));
}

void save_survival(const SurvivalArtifact& artifact, const std::string& path) {
    json j;
    j["format"] = kSurvivalFormat;
    json cox;
    cox["beta"] = covariates_to_json(artifact.cox.beta);
    json steps = json::array();
    for (const auto& [turn, inc] : artifact.cox.baseline_steps) {
        steps.push_back({turn, inc});
    }
    cox["baseline_steps"] = std::move(steps);
    cox["hazard_floor"] = artifact.cox.hazard_floor;
    cox["log_likelihood"] = artifact.cox.diagnostics.log_likelihood;
    cox["iterations"] = artifact.cox.diagnostics.iterations;
    cox["gradient_norm"] = artifact.cox.diagnostics.gradient_norm;
    j["cox"] = std::move(cox);
    if (artifact.aft) {
        json aft;
        aft["theta"] = covariates_to_json(artifact.aft->theta);
        aft["shape"] = artifact.aft->shape;
        aft["scale"] = artifact.aft->scale;
        j["aft"] = std::move(aft);
    }
    j["suggested_hazard_threshold"] = artifact.suggested_hazard_threshold;
    write_json(j, path);
}

SurvivalArtifact load_survival(const std::string& path) {
    const json j = read_json(path, kSurvivalFormat);
    SurvivalArtifact artifact;
    const json& cox = j.at("cox");
    artifact.cox.beta = covariates_from_json(cox.at("beta"));
    for (const auto& step : cox.at("baseline_steps")) {
        artifact.cox.baseline_steps.emplace_back(step[0].get<int>(), step[1].get<double>());
    }
    artifact.cox.hazard_floor = cox.at("hazard_floor").get<double>();
    artifact.cox.diagnostics.log_likelihood = cox.value("log_likelihood", 0.0);
    artifact.cox.diagnostics.iterations = cox.value("iterations", 0);
    artifact.cox.diagnostics.gradient_norm = cox.value("gradient_norm", 0.0);
    artifact.cox.diagnostics.converged = true;
    for (std::size_t i = 1; i < artifact.cox.baseline_steps.size(); ++i) {
        if (artifact.cox.baseline_steps[i].first <=
            artifact.cox.baseline_steps[i - 1].first) {
            throw IoError("artifact " + path + ": baseline steps are not ascending");
        }
    }
    for (const auto& [turn, inc] : artifact.cox.baseline_steps) {
        if (inc < 0.0) throw IoError("artifact " + path + ": negative hazard increment");
    }
    if (j.contains("aft")) {
        AftModel aft;
        aft.theta = covariates_from_json(j["aft"].at("theta"));
        aft.shape = j["aft"].at("shape").get<double>();
        aft.scale = j["aft"].at("scale").get<double>();
        if (!(aft.shape > 0.0) || !(aft.scale > 0.0)) {
            throw IoError("artifact " + path + ": AFT shape and scale must be positive");
        }
        artifact.aft = aft;
    }
    artifact.suggested_hazard_threshold = j.value("suggested_hazard_threshold", 0.0);
    return artifact;
}

void save_calibration(const CalibrationSummary& summary, const std::string& path) {
    json j;
    j["format"] = kCalibrationFormat;
    j["dimension"] = summary.dimension;
    j["d_behavioral"] = summary.d_behavioral;
    j["baseline_size"] = summary.baseline_size;
    j["components"] = summary.components;
    j["shrinkage"] = summary.shrinkage;
    j["min_precision_eigenvalue"] = summary.min_precision_eigenvalue;
    j["d_m_mean"] = summary.d_m_mean;
    j["d_m_std"] = summary.d_m_std;
    j["a_t_std"] = summary.a_t_std;
    j["score_percentiles"] = summary.score_percentiles;
    j["suggested_trigger_threshold"] = summary.suggested_trigger_threshold;
    write_json(j, path);
}

CalibrationSummary load_calibration(const std::string& path) {
    const json j = read_json(path, kCalibrationFormat);
    CalibrationSummary s;
    s.dimension = j.at("dimension").get<int>();
    s.d_behavioral = j.at("d_behavioral").get<int>();
    s.baseline_size = j.at("baseline_size").get<int>();
    s.components = j.at("components").get<int>();
    s.shrinkage = j.at("shrinkage").get<double>();
    s.min_precision_eigenvalue = j.at("min_precision_eigenvalue").get<double>();
    s.d_m_mean = j.at("d_m_mean").get<double>();
    s.d_m_std = j.at("d_m_std").get<double>();
    s.a_t_std = j.at("a_t_std").get<double>();
    s.score_percentiles = j.at("score_percentiles").get<std::map<std::string, double>>();
    s.suggested_trigger_threshold = j.at("suggested_trigger_threshold").get<double>();
    return s;
}

}  // namespace driftguard
