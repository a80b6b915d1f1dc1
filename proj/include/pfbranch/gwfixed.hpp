#pragma once

#include "pfbranch/cpf.hpp"
#include "pfbranch/montecarlo.hpp"
#include "pfbranch/pf_params.hpp"
#include "pfbranch/random.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pfbranch {

enum class Regime { Subcritical, Critical, Supercritical };

std::string to_string(Regime r);

struct GwFixedModel {
    PfParams offspring;
    std::uint64_t ancestors = 1;

    Regime regime() const;
    double mean() const;
};

// Offspring must be a valid case A1 law (θ = 1 alternates are canonicalized).
GwFixedModel gw_model(const PfParams& offspring, std::uint64_t ancestors = 1);

// Law of Z_n for one ancestor; n = 0 is the point mass at 1.
class GenerationLaw {
public:
    static GenerationLaw identity() { return GenerationLaw(); }
    explicit GenerationLaw(PfParams p) : law_(std::move(p)) {}

    bool is_identity() const { return !law_; }
    const PfParams& params() const;
    double pgf(double s) const;
    double prob_zero() const;

private:
    GenerationLaw() = default;
    std::optional<PfParams> law_;
};

GenerationLaw generation_law(const GwFixedModel& model, std::uint64_t n);

// P(Z_n > 0) for one ancestor, (a^n + b_n)^{−1/θ}.
double survival_probability(const GwFixedModel& model, std::uint64_t n);

// P(Z_n = 0) for the model's ancestor count.
double extinction_by(const GwFixedModel& model, std::uint64_t n);

double extinction_probability(const GwFixedModel& model);

CpfParams martingale_limit_law(const GwFixedModel& model);

// max |φ(u) − f(φ(a^{1/θ}u))| over the grid.
double abel_residual(const GwFixedModel& model, std::span<const double> u_grid);

// Exact E e^{−u W_n} with W_n = Z_n / m^n, one ancestor.
double normalized_transform(const GwFixedModel& model, std::uint64_t n, double u);

// Law of Z_n given Z_n > 0, PF(θ, a^n/(a^n+b_n), b_n/(a^n+b_n)).
PfParams conditional_law(const GwFixedModel& model, std::uint64_t n);

struct SubcriticalLimits {
    double survival_constant;
    PfParams yaglom;
};

SubcriticalLimits subcritical_limits(const GwFixedModel& model);

struct CriticalLimits {
    double survival_scale;
    double cond_mean_scale;
    CpfParams limit;
};

CriticalLimits critical_limits(const GwFixedModel& model);

// Exact E(e^{−u Z_n/(bn)^{1/θ}} | Z_n > 0) in the critical case.
double critical_conditional_transform(const GwFixedModel& model, std::uint64_t n, double u);

struct DecompositionReport {
    double q;
    PfParams sub_part;
    PfParams super_part;
    // Grid residuals of g(s) = f(qs)/q and h(s) = (f(q+(1−q)s) − q)/(1−q).
    double g_residual;
    double h_residual;
};

DecompositionReport decompose_supercritical(const GwFixedModel& model);

struct PathOptions {
    std::uint64_t population_cap = 1000000000;
    // Stop once Z_k reaches this size; 0 disables.
    std::uint64_t stop_at = 0;
};

struct GenerationPath {
    std::vector<std::uint64_t> z;
    // Z exceeded the population cap at the last recorded generation.
    bool exploded = false;
    // Stopped early at the last recorded generation by stop_at.
    bool stopped = false;

    bool extinct() const { return !z.empty() && z.back() == 0; }
};

GenerationPath simulate_generation_path(const GwFixedModel& model, std::uint64_t n_generations, Engine& eng,
                                        const PathOptions& options = {});

// Extinction-by-n frequencies for n = 1..horizon against f^n(0), each within
// 3 CLT bands; supercritical models also compare the frequency at the horizon
// with the extinction probability. Supercritical paths stop once q^Z < 1e−12
// and count as surviving.
SimReport run_plan(const SimPlan& plan, const GwFixedModel& model);

} // namespace pfbranch
