#include "driftguard/simulator.hpp"

#include <cmath>
#include <random>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "driftguard/errors.hpp"
#include "driftguard/rng.hpp"

namespace driftguard {

std::string_view to_string(Profile p) {
    switch (p) {
        case Profile::kBenign: return "benign";
        case Profile::kCrescendo: return "crescendo";
        case Profile::kShock: return "shock";
        case Profile::kBoilingFrog: return "boiling_frog";
    }
    return "benign";
}

Profile profile_from_string(std::string_view s) {
    if (s == "benign") return Profile::kBenign;
    if (s == "crescendo") return Profile::kCrescendo;
    if (s == "shock") return Profile::kShock;
    if (s == "boiling_frog") return Profile::kBoilingFrog;
    throw ConfigError("unknown profile: " + std::string(s));
}

void ScenarioSpec::validate() const {
    if (dimension < 2 || d_behavioral < 0 || d_behavioral >= dimension) {
        throw ConfigError("scenario: need dimension >= 2 and 0 <= d_behavioral < dimension");
    }
    if (n_turns < 1) throw ConfigError("scenario: n_turns must be >= 1");
    if (profile == Profile::kCrescendo && !(step_norm > 0.0)) {
        throw ConfigError("scenario: crescendo requires step_norm > 0");
    }
    if (profile == Profile::kBenign &&
        !(convergence_rate > 0.0 && convergence_rate < 1.0)) {
        throw ConfigError("scenario: benign requires convergence_rate in (0, 1)");
    }
    if (profile == Profile::kShock && !(payload_norm > 0.0)) {
        throw ConfigError("scenario: shock requires payload_norm > 0");
    }
    if (profile == Profile::kBoilingFrog &&
        !(margin > 0.0 && alpha > margin && alpha < 1.0)) {
        throw ConfigError("scenario: boiling frog requires 0 < margin < alpha < 1");
    }
    if (!(event_threshold > 0.0)) {
        throw ConfigError("scenario: event_threshold must be > 0");
    }
    if (start_scale < 0.0) {
        throw ConfigError("scenario: start_scale must be >= 0");
    }
}

std::vector<StateVector> generate_baseline(int dimension, int n, int k_true,
                                           std::uint64_t seed, double separation,
                                           int d_behavioral, double anisotropy) {
    if (n < 2 || dimension < 2) {
        throw ConfigError("baseline generation: need n >= 2 and dimension >= 2");
    }
    if (k_true < 1 || d_behavioral < 0 || d_behavioral >= dimension) {
        throw ConfigError("baseline generation: invalid component count or split");
    }
    if (!(anisotropy >= 1.0)) {
        throw ConfigError("baseline generation: anisotropy must be >= 1");
    }
    const int d_semantic = dimension - d_behavioral;
    Rng rng = make_rng(seed);
    std::normal_distribution<double> gauss;
    std::uniform_int_distribution<int> pick_component(0, k_true - 1);

    // Semantic shape: geometric eigenvalue decay normalized to unit average
    // variance, under a seeded random rotation (QR with a sign-fixed R).
    Eigen::VectorXd eigenvalues(d_semantic);
    for (int j = 0; j < d_semantic; ++j) {
        const double f = d_semantic > 1 ? static_cast<double>(j) / (d_semantic - 1) : 0.5;
        eigenvalues[j] = std::pow(anisotropy, 0.5 - f);  // sqrt(a) down to 1/sqrt(a)
    }
    eigenvalues *= static_cast<double>(d_semantic) / eigenvalues.sum();

    Eigen::MatrixXd gaussian(d_semantic, d_semantic);
    for (int r = 0; r < d_semantic; ++r)
        for (int c = 0; c < d_semantic; ++c) gaussian(r, c) = gauss(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian);
    Eigen::MatrixXd rotation = qr.householderQ();
    const Eigen::MatrixXd r_mat = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int c = 0; c < d_semantic; ++c) {
        if (r_mat(c, c) < 0.0) rotation.col(c) *= -1.0;
    }
    const Eigen::MatrixXd transform =
        rotation * eigenvalues.cwiseSqrt().asDiagonal();

    std::vector<StateVector> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd v(dimension);
        Eigen::VectorXd g(d_semantic);
        for (int j = 0; j < d_semantic; ++j) g[j] = gauss(rng);
        v.head(d_semantic) = transform * g;
        for (int j = d_semantic; j < dimension; ++j) v[j] = gauss(rng);
        const int c = k_true > 1 ? pick_component(rng) : 0;
        v[0] += (c - 0.5 * (k_true - 1)) * separation;
        out.emplace_back(std::move(v), d_semantic, i + 1, static_cast<double>(i));
    }
    return out;
}

namespace {

// Everything session generation needs from the calibrated baseline, derived
// once per call: the dominant component's semantic moments, a sampler factor,
// and the orthogonal complement of the top principal subspace.
struct SemanticGeometry {
    Eigen::VectorXd mean_sem;
    Eigen::VectorXd mean_behav;
    Eigen::LLT<Eigen::MatrixXd> factor_sem;  // chol of the semantic covariance block
    Eigen::MatrixXd principal;               // columns: top directions (90% variance)
    Eigen::MatrixXd complement;              // columns: the remaining directions
    int d_semantic = 0;
    int d_behavioral = 0;
};

SemanticGeometry semantic_geometry(const ModelBundle& models, const ScenarioSpec& spec) {
    if (models.manifold.size() == 0) {
        throw ConfigError("session generation: baseline model not loaded");
    }
    if (models.manifold.dimension() != spec.dimension) {
        throw ConfigError("session generation: scenario dimension " +
                          std::to_string(spec.dimension) +
                          " does not match the baseline dimension " +
                          std::to_string(models.manifold.dimension()));
    }
    int dominant = 0;
    models.manifold.weights().maxCoeff(&dominant);
    const ShrunkGaussian& g = models.manifold.components()[dominant];

    SemanticGeometry geo;
    geo.d_semantic = spec.dimension - spec.d_behavioral;
    geo.d_behavioral = spec.d_behavioral;
    geo.mean_sem = g.mean().head(geo.d_semantic);
    geo.mean_behav = g.mean().tail(geo.d_behavioral);

    const Eigen::MatrixXd cov_sem = g.covariance().topLeftCorner(geo.d_semantic, geo.d_semantic);
    geo.factor_sem.compute(cov_sem);
    if (geo.factor_sem.info() != Eigen::Success) {
        throw CalibrationError("session generation: semantic covariance is not PD");
    }

    // Principal directions covering 90% of the semantic variance; drift lives
    // in the complement. Eigen returns eigenvalues in ascending order.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov_sem);
    const Eigen::VectorXd values = eig.eigenvalues();
    const double total = values.sum();
    double covered = 0.0;
    int top = 0;
    for (int i = geo.d_semantic - 1; i >= 0; --i) {
        covered += values[i];
        ++top;
        if (covered >= 0.9 * total) break;
    }
    if (top >= geo.d_semantic) top = geo.d_semantic - 1;  // keep the complement nonempty
    geo.principal = eig.eigenvectors().rightCols(top);
    geo.complement = eig.eigenvectors().leftCols(geo.d_semantic - top);
    return geo;
}

Eigen::VectorXd draw_gaussian(int n, Rng& rng) {
    std::normal_distribution<double> gauss;
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = gauss(rng);
    return v;
}

// Unit direction inside the orthogonal complement of the principal subspace.
Eigen::VectorXd complement_direction(const SemanticGeometry& geo, Rng& rng) {
    const Eigen::VectorXd coeffs = draw_gaussian(geo.complement.cols(), rng);
    Eigen::VectorXd dir = geo.complement * coeffs;
    // Exact projection against the retained principal directions.
    dir -= geo.principal * (geo.principal.transpose() * dir);
    const double norm = dir.norm();
    if (!(norm > 0.0)) throw GenerationError("session generation: degenerate drift direction");
    return dir / norm;
}

class BehavioralSampler {
public:
    BehavioralSampler(const SemanticGeometry& geo, BehavioralEntropy entropy,
                      double start_scale, Rng& rng)
        : geo_(geo), entropy_(entropy) {
        if (entropy_ == BehavioralEntropy::kLow) {
            // Automated dispatch collapses temporal variance: one constant
            // operating point per session (zero variance, within the <= 1%
            // low-entropy budget), scaled toward typical values with the
            // opening contraction.
            constant_ =
                geo.mean_behav + start_scale * draw_gaussian(geo.d_behavioral, rng);
        }
    }

    Eigen::VectorXd operator()(Rng& rng) const {
        if (geo_.d_behavioral == 0) return Eigen::VectorXd(0);
        if (entropy_ == BehavioralEntropy::kHigh) {
            return geo_.mean_behav + draw_gaussian(geo_.d_behavioral, rng);
        }
        return constant_;
    }

    /// Typical behavioral value for score probing during generation.
    const Eigen::VectorXd& operating_point() const {
        return entropy_ == BehavioralEntropy::kLow ? constant_ : geo_.mean_behav;
    }

    void contract_toward_mean(double factor) {
        if (entropy_ == BehavioralEntropy::kLow) {
            constant_ = geo_.mean_behav + factor * (constant_ - geo_.mean_behav);
        }
    }

private:
    const SemanticGeometry& geo_;
    BehavioralEntropy entropy_;
    Eigen::VectorXd constant_;
};

StateVector make_turn(const Eigen::VectorXd& semantic, const Eigen::VectorXd& behavioral,
                      int turn) {
    Eigen::VectorXd joint(semantic.size() + behavioral.size());
    joint.head(semantic.size()) = semantic;
    joint.tail(behavioral.size()) = behavioral;
    return StateVector(std::move(joint), static_cast<int>(semantic.size()), turn,
                       static_cast<double>(turn));
}

// Step size along `direction` whose scout score lands within
// [alpha - margin, alpha]; bisection with geometric expansion.
double boiling_frog_step(const IsolationForest& forest, const Eigen::VectorXd& base_joint,
                         const Eigen::VectorXd& direction_joint, double alpha,
                         double margin, double hint) {
    const auto score_at = [&](double s) {
        return forest.score((base_joint + s * direction_joint).eval());
    };
    if (score_at(0.0) > alpha) {
        throw GenerationError(
            "boiling frog: the session is already above the trigger threshold before "
            "stepping (margin " +
            std::to_string(margin) + ")");
    }
    const double lo_target = alpha - margin;

    double hi = std::max(hint, 1e-3);
    int expansions = 0;
    while (score_at(hi) < lo_target) {
        hi *= 2.0;
        if (++expansions > 60) {
            throw GenerationError(
                "boiling frog: the trigger threshold is unreachable from below within "
                "margin " +
                std::to_string(margin));
        }
    }
    if (score_at(hi) <= alpha) return hi;  // expansion landed inside the band

    double lo = 0.0;
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double s = score_at(mid);
        if (s > alpha) {
            hi = mid;
        } else if (s < lo_target) {
            lo = mid;
        } else {
            return mid;
        }
    }
    throw GenerationError("boiling frog: bisection failed to land inside margin " +
                          std::to_string(margin) + " below the trigger threshold");
}

}  // namespace

GeneratedSession generate_session(const ScenarioSpec& spec, const ModelBundle& models,
                                  const std::string& session_id) {
    spec.validate();
    const SemanticGeometry geo = semantic_geometry(models, spec);
    Rng rng = make_rng(derive_seed(spec.seed, 0x73657373ULL));
    BehavioralSampler behavioral(geo, spec.entropy, spec.start_scale, rng);

    GeneratedSession out;
    out.profile = spec.profile;
    out.trajectory.session_id = session_id;

    // Start from a draw of the dominant baseline component, contracted by the
    // opening scale.
    const Eigen::VectorXd opening_deviation =
        geo.factor_sem.matrixL() * draw_gaussian(geo.d_semantic, rng);
    Eigen::VectorXd sem = geo.mean_sem + spec.start_scale * opening_deviation;

    double injected_total = 0.0;
    const auto label_event = [&](int turn) {
        if (!out.event_turn && injected_total > spec.event_threshold) out.event_turn = turn;
    };

    switch (spec.profile) {
        case Profile::kBenign: {
            const Eigen::VectorXd target =
                geo.mean_sem + geo.factor_sem.matrixL() * draw_gaussian(geo.d_semantic, rng);
            const Eigen::VectorXd start = sem;
            Eigen::VectorXd behav_last;
            for (int t = 1; t <= spec.n_turns; ++t) {
                const Eigen::VectorXd value =
                    target + std::pow(spec.convergence_rate, t) * (start - target) +
                    spec.noise_scale * draw_gaussian(geo.d_semantic, rng);
                behav_last = behavioral(rng);
                out.trajectory.turns.push_back(make_turn(value, behav_last, t));
            }
            Eigen::VectorXd local(spec.dimension);
            local.head(geo.d_semantic) = target;
            local.tail(geo.d_behavioral) =
                spec.entropy == BehavioralEntropy::kHigh ? geo.mean_behav : behav_last;
            out.local_target = local;
            break;
        }
        case Profile::kCrescendo: {
            // Collinear constant-norm drift applied from the first turn, so the
            // cumulative injected deviation after turn t is exactly t * step_norm.
            const Eigen::VectorXd direction = complement_direction(geo, rng);
            for (int t = 1; t <= spec.n_turns; ++t) {
                const Eigen::VectorXd step = spec.step_norm * direction;
                sem += step;
                out.injected_steps.push_back(step);
                injected_total += spec.step_norm;
                out.trajectory.turns.push_back(make_turn(sem, behavioral(rng), t));
                label_event(t);
            }
            break;
        }
        case Profile::kShock: {
            const Eigen::VectorXd target =
                geo.mean_sem + geo.factor_sem.matrixL() * draw_gaussian(geo.d_semantic, rng);
            const Eigen::VectorXd start = sem;
            const Eigen::VectorXd direction = complement_direction(geo, rng);
            for (int t = 1; t < spec.n_turns; ++t) {
                const Eigen::VectorXd value =
                    target + std::pow(spec.convergence_rate, t) * (start - target) +
                    spec.noise_scale * draw_gaussian(geo.d_semantic, rng);
                out.trajectory.turns.push_back(make_turn(value, behavioral(rng), t));
            }
            // The payload lands on the final turn.
            const Eigen::VectorXd payload = spec.payload_norm * direction;
            const Eigen::VectorXd last =
                out.trajectory.turns.back().values().head(geo.d_semantic) + payload;
            out.injected_steps.push_back(payload);
            injected_total += spec.payload_norm;
            out.trajectory.turns.push_back(make_turn(last, behavioral(rng), spec.n_turns));
            label_event(spec.n_turns);
            break;
        }
        case Profile::kBoilingFrog: {
            if (!models.forest.fitted()) {
                throw ConfigError("boiling frog generation requires the fitted forest");
            }
            const Eigen::VectorXd direction = complement_direction(geo, rng);
            Eigen::VectorXd direction_joint = Eigen::VectorXd::Zero(spec.dimension);
            direction_joint.head(geo.d_semantic) = direction;

            // An attacker picks an innocuous opening: contract the start
            // toward the baseline mean until it scores below the band.
            {
                const auto start_score = [&](double factor) {
                    Eigen::VectorXd v(spec.dimension);
                    v.head(geo.d_semantic) =
                        geo.mean_sem + factor * (sem - geo.mean_sem);
                    v.tail(geo.d_behavioral) =
                        geo.mean_behav +
                        factor * (behavioral.operating_point() - geo.mean_behav);
                    return models.forest.score(v);
                };
                const double ceiling = spec.alpha - spec.margin;
                if (start_score(1.0) > ceiling) {
                    if (start_score(0.0) > ceiling) {
                        throw GenerationError(
                            "boiling frog: even the baseline mean scores above alpha - "
                            "margin (margin " +
                            std::to_string(spec.margin) + ")");
                    }
                    double lo = 0.0, hi = 1.0;
                    for (int iter = 0; iter < 60; ++iter) {
                        const double mid = 0.5 * (lo + hi);
                        (start_score(mid) > ceiling ? hi : lo) = mid;
                    }
                    sem = geo.mean_sem + lo * (sem - geo.mean_sem);
                    behavioral.contract_toward_mean(lo);
                }
            }
            double hint = 1.0;
            // Every stored turn sits inside [alpha - margin, alpha]: the step
            // is bisected against the turn's actual behavioral block, starting
            // with the initial lift out of the baseline bulk.
            for (int t = 1; t <= spec.n_turns; ++t) {
                const Eigen::VectorXd behav = behavioral(rng);
                Eigen::VectorXd base(spec.dimension);
                base.head(geo.d_semantic) = sem;
                base.tail(geo.d_behavioral) = behav;
                const double step = boiling_frog_step(models.forest, base, direction_joint,
                                                      spec.alpha, spec.margin, hint);
                hint = std::max(step, 1e-3);
                sem += step * direction;
                out.injected_steps.push_back(step * direction);
                injected_total += step;
                out.trajectory.turns.push_back(make_turn(sem, behav, t));
                label_event(t);
            }
            break;
        }
    }

    out.trajectory.outcome =
        out.event_turn ? SessionOutcome{*out.event_turn, false} : SessionOutcome{0, true};
    return out;
}

}  // namespace driftguard
