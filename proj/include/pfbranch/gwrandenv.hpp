#pragma once

#include "pfbranch/gwfixed.hpp"
#include "pfbranch/montecarlo.hpp"
#include "pfbranch/pf_params.hpp"
#include "pfbranch/random.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pfbranch {

struct EnvStep {
    double a;
    double b;
};

struct EnvAtom {
    double a;
    double b;
    double p;
};

// Law of the environment (A, B) together with θ. Every draw satisfies
// A > 0, B > 0 and A + B >= 1.
class EnvSpec {
public:
    using Sampler = std::function<EnvStep(Engine&)>;

    struct Bounds {
        std::optional<double> a_min, a_max, b_max;
    };

    static EnvSpec discrete(double theta, std::vector<EnvAtom> atoms);
    static EnvSpec constant(double theta, double a, double b);
    // Named families:
    //   lognormal: A = exp(mu + sigma N), B = (1 − A)^+ + Gamma(b_shape, b_scale)
    //   uniform:   A ~ U(a_lo, a_hi),     B = (1 − A)^+ + U(b_lo, b_hi), b_lo > 0
    static EnvSpec family(double theta, const std::string& name, const std::map<std::string, double>& params);
    static EnvSpec custom(double theta, Sampler sampler, std::string name, Bounds bounds = {});

    // {"theta": θ, "discrete": [{"A":…, "B":…, "p":…}, …]} or
    // {"theta": θ, "family": name, "params": {…}}; θ may be supplied separately.
    static EnvSpec from_json(const nlohmann::json& j, std::optional<double> theta = std::nullopt);
    nlohmann::json to_json() const;

    double theta() const { return theta_; }
    bool is_discrete() const { return !atoms_.empty(); }
    const std::vector<EnvAtom>& atoms() const { return atoms_; }
    const std::string& name() const { return name_; }
    const Bounds& bounds() const { return bounds_; }

    EnvStep draw(Engine& eng) const;

private:
    double theta_ = 1.0;
    std::string name_;
    std::vector<EnvAtom> atoms_;
    std::vector<double> cumulative_;
    std::map<std::string, double> params_;
    Sampler sampler_;
    Bounds bounds_;
};

void check_env_step(const EnvStep& s);

// Iterates of a realized environment e_1..e_n; index 0 is the empty product.
class PathIterates {
public:
    PathIterates(double theta, std::vector<EnvStep> steps);

    double theta() const { return theta_; }
    std::size_t n() const { return steps_.size(); }
    const std::vector<EnvStep>& steps() const { return steps_; }

    double log_pi(std::size_t k) const { return log_pi_.at(k); }
    double pi(std::size_t k) const { return std::exp(log_pi_.at(k)); }
    double S(std::size_t k) const { return -log_pi_.at(k); }
    // R_k = Σ_{j≤k} Π_{j−1} B_j
    double R(std::size_t k) const { return r_.at(k); }
    // R_k^{(−1)} = Σ_{j≤k} Π_j^{−1} B_j
    double R_dual(std::size_t k) const { return r_dual_.at(k); }
    // R_k / Π_k computed in log space.
    double R_over_pi(std::size_t k) const;

private:
    double theta_;
    std::vector<EnvStep> steps_;
    std::vector<double> log_pi_, r_, r_dual_;
};

std::vector<EnvStep> draw_steps(const EnvSpec& spec, std::size_t n, Engine& eng);
PathIterates draw_environment(const EnvSpec& spec, std::size_t n, Engine& eng);

// PF(θ, Π_n, R_n) forward, PF(θ, Π_n, Π_n R_n^{(−1)}) for the reversed environment.
PfParams quenched_generation_law(const PathIterates& path, std::size_t n, bool reversed = false);

// 1 − (Π_n + R_n)^{−1/θ}
double quenched_extinction(const PathIterates& path, std::size_t n);

enum class EnvVerdict { Subcritical, Critical, StronglyCritical, Supercritical, Inconclusive };

std::string to_string(EnvVerdict v);

struct GoldieMaller {
    // Integrals with respect to the law of B (forward) and of B/A (dual).
    double i_minus;
    double i_plus;
    bool forward_finite;
    bool dual_finite;
    std::string trichotomy;
};

struct ClassificationReport {
    EnvVerdict verdict;
    double e_log_a;
    // Half-width of the confidence interval; 0 for exact evaluation.
    double ci_half_width;
    bool exact;
    std::optional<GoldieMaller> gm;
};

// J^−(x) = E(x ∧ log^− A), J^+(x) = E(x ∧ log^+ A); discrete laws only.
double gm_j_minus(const EnvSpec& spec, double x);
double gm_j_plus(const EnvSpec& spec, double x);

ClassificationReport classify(const EnvSpec& spec, std::uint64_t budget = 100000, std::uint64_t seed = 0);

struct PerpetuityEstimate {
    double value;
    std::uint64_t truncation_n;
    double residual_bound;
    bool heuristic;
};

// One draw of R_∞ (or R_∞^{(−1)} when dual), truncated once the remaining
// mass is below epsilon times the current value.
PerpetuityEstimate estimate_perpetuity(const EnvSpec& spec, double epsilon, Engine& eng, bool dual = false,
                                       std::uint64_t max_steps = 10000000);

// Perpetuities of the shifted environments e_{≥j}, j = 1..m+1, built
// backward from the end of a path extended until the remaining contraction
// is below tol. The recursion R_j = B_j + A_j R_{j+1} holds exactly.
struct ShiftedPerpetuities {
    std::vector<double> r; // r[j] for j = 1..m+1; r[0] unused
    double tolerance;
    bool heuristic;
    std::size_t path_length;
};

ShiftedPerpetuities shifted_perpetuities(const EnvSpec& spec, std::vector<EnvStep>& steps, std::size_t m,
                                         double tol, Engine& eng);

struct QuenchedPathOptions {
    std::uint64_t population_cap = 1000000000;
    std::uint64_t stop_at = 0;
    // Offspring laws taken from e_n, …, e_1 instead of e_1, …, e_n.
    bool reversed = false;
};

GenerationPath simulate_quenched_path(double theta, const std::vector<EnvStep>& steps, std::size_t n,
                                      Engine& eng, const QuenchedPathOptions& options = {});

struct ReBudget {
    std::uint64_t environments = 1000;
    std::uint64_t paths = 1000;
    std::uint64_t horizon = 10;
    // Paths stop once Z reaches this size and use the conditional expectation.
    std::uint64_t stop_at = 64;
    double coverage = 0.99;
    unsigned width = 0;
};

SimReport verify_supercritical_re(const EnvSpec& spec, const ReBudget& budget, std::uint64_t seed);
SimReport verify_subcritical_re(const EnvSpec& spec, const ReBudget& budget, std::uint64_t seed);
SimReport verify_critical_re(const EnvSpec& spec, const ReBudget& budget, std::uint64_t seed);

// (Π_n, R_n/Π_n) against (Π_n, R_n^{(−1)}) from independent paths: KS on
// log R_n/Π_n versus log R_n^{(−1)} and a contingency chi-square.
SimReport duality_test(const EnvSpec& spec, std::size_t n, std::uint64_t paths, std::uint64_t seed,
                       unsigned width = 0);

struct ReDecompositionStep {
    double q;
    double q_next;
    double r;
    double r_next;
    PfParams super_part;
    // Z₁ offspring pgf g_n = atom + pgf of the extended law PF(θ, 1/q_{n+1}, a1, b1).
    double atom;
    double gamma1;
    double a1;
    double b1;
    double g_residual;
    double h_residual;
    double remark_residual;
};

struct ReDecomposition {
    std::vector<ReDecompositionStep> steps;
    double tolerance;
    bool heuristic;
    double max_residual;
};

// Z₁/Z₂ laws for n = 1..horizon along the given path (extended in place if
// needed). q_n uses forward-truncated perpetuities; the laws use the backward
// ones, so the residuals measure the truncation.
ReDecomposition decompose_re(const EnvSpec& spec, std::vector<EnvStep>& steps, std::size_t horizon, double tol,
                             Engine& eng);

} // namespace pfbranch
