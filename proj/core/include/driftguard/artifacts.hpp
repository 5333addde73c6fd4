#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "driftguard/covariance.hpp"
#include "driftguard/isolation_forest.hpp"
#include "driftguard/survival.hpp"

namespace driftguard {

inline constexpr std::string_view kForestFormat = "driftguard.forest/1";
inline constexpr std::string_view kManifoldFormat = "driftguard.manifold/1";
inline constexpr std::string_view kSurvivalFormat = "driftguard.survival/1";
inline constexpr std::string_view kCalibrationFormat = "driftguard.calibration/1";
inline constexpr std::string_view kManifestFormat = "driftguard.manifest/1";

void save_forest(const IsolationForest& forest, const std::string& path);
IsolationForest load_forest(const std::string& path);

void save_manifold(const ManifoldModel& model, const std::string& path);
/// Rebuilds precisions from the stored covariances and cross-checks the stored
/// minimum precision eigenvalue to 1e-6 relative.
ManifoldModel load_manifold(const std::string& path);

struct SurvivalArtifact {
    CoxModel cox;
    std::optional<AftModel> aft;
    /// Training-time suggestion: slightly above the largest hazard any
    /// censored training session reached. Zero when unavailable.
    double suggested_hazard_threshold = 0.0;
};

void save_survival(const SurvivalArtifact& artifact, const std::string& path);
SurvivalArtifact load_survival(const std::string& path);

/// Calibration facts the monitor needs beyond the model artifacts, plus
/// operator-facing summary numbers.
struct CalibrationSummary {
    int dimension = 0;
    int d_behavioral = 0;
    int baseline_size = 0;
    int components = 1;
    double shrinkage = 0.0;                 // dominant component
    double min_precision_eigenvalue = 0.0;  // dominant component
    double d_m_mean = 0.0;                  // baseline distance statistics
    double d_m_std = 0.0;
    double a_t_std = 0.0;
    std::map<std::string, double> score_percentiles;  // p50/p90/p95/p99
    double suggested_trigger_threshold = 0.0;         // p99 baseline score
};

void save_calibration(const CalibrationSummary& summary, const std::string& path);
CalibrationSummary load_calibration(const std::string& path);

}  // namespace driftguard
