#pragma once

#include "pfbranch/montecarlo.hpp"
#include "pfbranch/pf_params.hpp"
#include "pfbranch/random.hpp"
#include "pfbranch/sampling.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace pfbranch {

// Markov branching process obtained by conjugating a linear birth-death
// process (rates λ, μ) with the Sibuya(θ) pgf. ν = λ + μ/θ, m = λ(1+θ)/(θν).
struct MbpConfig {
    double theta;
    double lambda;
    double mu;
    double nu;
    double m;

    double rho() const { return lambda - mu; }
};

MbpConfig mbp_config(double theta, double lambda, double mu);
// Checks the supplied ν against λ + μ/θ.
MbpConfig mbp_config(double theta, double lambda, double mu, double nu);

struct BdCoefficients {
    double alpha;
    double beta;
};

BdCoefficients bd_coefficients(double lambda, double mu, double t);

// G(s,t) = α + (1−α)(1−β)s/(1−βs)
double bd_pgf(double lambda, double mu, double s, double t);

// Law of Y(t), LF(e^{−ρt}, (λ/ρ)(1 − e^{−ρt})), or LF(1, λt) for ρ = 0.
PfParams bd_marginal(double lambda, double mu, double t);

// Offspring law f(s) = 1 − m(1−s) + m(1−s)^{1+θ}/(1+θ).
class MbpOffspringLaw {
public:
    explicit MbpOffspringLaw(const MbpConfig& config);

    double pgf(double s) const;
    double derivative(double s) const;
    std::vector<double> pmf(std::size_t n_max) const;
    // P(X > n)
    double tail(std::uint64_t n) const;
    std::uint64_t sample(Engine& eng) const { return sampler_(eng); }

private:
    double theta_, m_;
    DiscreteSampler sampler_;
};

// PF(θ, e^{−ρt}, λρ^{−1}(1 − e^{−ρt})), t > 0.
PfParams mbp_marginal(const MbpConfig& config, double t);

// h^{−1}(G(h(s), t)) with the Sibuya pgf h.
double mbp_conjugated_pgf(const MbpConfig& config, double s, double t);

// 1 − (e^{−(m−1)νθt}(1−s)^{−θ} + mθν/(1+θ) ∫_0^t e^{−(m−1)θνu} du)^{−1/θ}
double mbp_closed_form_pgf(const MbpConfig& config, double s, double t);

// max over the grid of |F(s,t+u) − F(F(s,t),u)|.
double mbp_semigroup_residual(const MbpConfig& config, std::span<const double> s_grid, double t, double u);

// max over the grid of |∂_t F(s,0+) − ν(f(s) − s)| / max(|ν(f(s) − s)|, 1e−3 ν), with
// the derivative from forward differences at t = 1e−4, 1e−5 and Richardson extrapolation.
double mbp_generator_residual(const MbpConfig& config, std::span<const double> s_grid);

struct MbpPathOptions {
    std::uint64_t population_cap = 100000000;
    bool record_events = false;
};

struct MbpPath {
    std::uint64_t final_size = 1;
    // Time of extinction, or a negative value if alive at t_end.
    double extinction_time = -1.0;
    bool overflow = false;
    std::uint64_t events = 0;
    std::vector<double> times;
    std::vector<std::uint64_t> sizes;
};

// Event-driven simulation from one ancestor: the next event after
// Exp(ν Z), at which one individual is replaced by an offspring draw.
MbpPath simulate_mbp(const MbpConfig& config, const MbpOffspringLaw& offspring, double t_end, Engine& eng,
                     const MbpPathOptions& options = {});

// Z(t_end) over plan.replicates paths: chi-square GoF against the marginal
// law and the extinction frequency against its exact value within 3 CLT bands.
SimReport run_plan(const SimPlan& plan, const MbpConfig& config, double t_end);

} // namespace pfbranch
