#include "pfbranch/mbp.hpp"

#include "pfbranch/errors.hpp"
#include "pfbranch/pgf.hpp"
#include "pfbranch/pmf.hpp"
#include "pfbranch/stats.hpp"

#include <algorithm>
#include <cmath>

namespace pfbranch {

namespace {

void check_rates(double theta, double lambda, double mu)
{
    if (!(theta > 0.0 && theta <= 1.0))
        throw ConstraintViolation("theta in (0,1]");
    if (!(std::isfinite(lambda) && lambda > 0.0))
        throw ConstraintViolation("lambda > 0");
    if (!(std::isfinite(mu) && mu >= 0.0))
        throw ConstraintViolation("mu >= 0");
}

// expm1(r t)/r, with a series for |r t| < 1e−8.
double expm1_over(double r, double t)
{
    double x = r * t;
    if (std::abs(x) < 1e-8)
        return t * (1.0 + x / 2.0 + x * x / 6.0);
    return std::expm1(x) / r;
}

void check_time(double t)
{
    if (!(std::isfinite(t) && t >= 0.0))
        throw ConstraintViolation("t >= 0");
}

void check_s(double s)
{
    if (!(s >= 0.0 && s <= 1.0))
        throw DomainError("s in [0,1]");
}

} // namespace

MbpConfig mbp_config(double theta, double lambda, double mu)
{
    check_rates(theta, lambda, mu);
    double nu = lambda + mu / theta;
    double m = lambda * (1.0 + theta) / (theta * nu);
    return {theta, lambda, mu, nu, m};
}

MbpConfig mbp_config(double theta, double lambda, double mu, double nu)
{
    MbpConfig c = mbp_config(theta, lambda, mu);
    if (!(std::abs(nu - c.nu) <= kParamTol * c.nu))
        throw ConstraintViolation("nu = lambda + mu/theta");
    return c;
}

BdCoefficients bd_coefficients(double lambda, double mu, double t)
{
    check_rates(1.0, lambda, mu);
    check_time(t);
    double e1 = expm1_over(lambda - mu, t);
    double den = lambda * e1 + 1.0;
    return {mu * e1 / den, lambda * e1 / den};
}

double bd_pgf(double lambda, double mu, double s, double t)
{
    check_s(s);
    BdCoefficients c = bd_coefficients(lambda, mu, t);
    return c.alpha + (1.0 - c.alpha) * (1.0 - c.beta) * s / (1.0 - c.beta * s);
}

PfParams bd_marginal(double lambda, double mu, double t)
{
    check_rates(1.0, lambda, mu);
    if (!(t > 0.0))
        throw ConstraintViolation("t > 0");
    double r = lambda - mu;
    return pf(1.0, std::exp(-r * t), lambda * expm1_over(-r, t));
}

namespace {

// θ(1−θ)···(n−1−θ)/n! = θ Γ(n−θ)/(Γ(1−θ) Γ(n+1)), n >= 1.
double sibuya_weight(double theta, std::uint64_t n)
{
    if (theta == 1.0)
        return n == 1 ? 1.0 : 0.0;
    double x = static_cast<double>(n);
    return theta * std::exp(std::lgamma(x - theta) - std::lgamma(1.0 - theta) - std::lgamma(x + 1.0));
}

std::vector<double> offspring_pmf(double theta, double m, std::size_t n_max)
{
    std::vector<double> p(n_max + 1, 0.0);
    p[0] = 1.0 - m * theta / (1.0 + theta);
    if (p[0] < -kParamTol)
        throw ConstraintViolation("offspring p_0 >= 0");
    p[0] = std::max(p[0], 0.0);
    if (n_max >= 2)
        p[2] = m * theta / 2.0;
    for (std::size_t n = 3; n <= n_max; ++n)
        p[n] = p[n - 1] * (static_cast<double>(n) - 2.0 - theta) / static_cast<double>(n);
    return p;
}

std::vector<double> offspring_cdf(double theta, double m)
{
    std::size_t n = 64;
    while (n < 4096 && m / (1.0 + theta) * sibuya_weight(theta, n) > 1e-9)
        n *= 2;
    std::vector<double> p = offspring_pmf(theta, m, n);
    std::vector<double> cdf(p.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        acc += p[k];
        cdf[k] = std::min(acc, 1.0);
    }
    return cdf;
}

} // namespace

MbpOffspringLaw::MbpOffspringLaw(const MbpConfig& config)
    : theta_(config.theta), m_(config.m),
      sampler_(offspring_cdf(config.theta, config.m),
               [th = config.theta, m = config.m](std::uint64_t n) {
                   return n == 0 ? m * th / (1.0 + th) : m / (1.0 + th) * sibuya_weight(th, n);
               })
{
}

double MbpOffspringLaw::pgf(double s) const
{
    check_s(s);
    double x = 1.0 - s;
    return 1.0 - m_ * x + m_ / (1.0 + theta_) * std::pow(x, 1.0 + theta_);
}

double MbpOffspringLaw::derivative(double s) const
{
    check_s(s);
    return m_ - m_ * std::pow(1.0 - s, theta_);
}

std::vector<double> MbpOffspringLaw::pmf(std::size_t n_max) const { return offspring_pmf(theta_, m_, n_max); }

double MbpOffspringLaw::tail(std::uint64_t n) const
{
    return n == 0 ? m_ * theta_ / (1.0 + theta_) : m_ / (1.0 + theta_) * sibuya_weight(theta_, n);
}

PfParams mbp_marginal(const MbpConfig& config, double t)
{
    if (!(std::isfinite(t) && t > 0.0))
        throw ConstraintViolation("t > 0");
    double r = config.rho();
    return pf(config.theta, std::exp(-r * t), config.lambda * expm1_over(-r, t));
}

double mbp_conjugated_pgf(const MbpConfig& config, double s, double t)
{
    check_s(s);
    check_time(t);
    const double th = config.theta;
    BdCoefficients c = bd_coefficients(config.lambda, config.mu, t);
    // 1 − G(x) = (1−α)(1−x)/(1−βx) with 1 − x = 1 − h(s) = (1−s)^θ.
    double y = std::pow(1.0 - s, th);
    double one_minus_g = (1.0 - c.alpha) * y / (1.0 - c.beta + c.beta * y);
    return 1.0 - std::pow(one_minus_g, 1.0 / th);
}

double mbp_closed_form_pgf(const MbpConfig& config, double s, double t)
{
    check_s(s);
    check_time(t);
    if (s == 1.0)
        return 1.0;
    const double th = config.theta;
    double k = (config.m - 1.0) * config.nu * th;
    double integral = expm1_over(-k, t);
    double inner = std::exp(-k * t) * std::pow(1.0 - s, -th) + config.m * th * config.nu / (1.0 + th) * integral;
    return 1.0 - std::pow(inner, -1.0 / th);
}

double mbp_semigroup_residual(const MbpConfig& config, std::span<const double> s_grid, double t, double u)
{
    double worst = 0.0;
    for (double s : s_grid) {
        double lhs = mbp_conjugated_pgf(config, s, t + u);
        double rhs = mbp_conjugated_pgf(config, mbp_conjugated_pgf(config, s, t), u);
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

double mbp_generator_residual(const MbpConfig& config, std::span<const double> s_grid)
{
    MbpOffspringLaw f(config);
    const double h1 = 1e-4, h2 = 1e-5;
    double worst = 0.0;
    for (double s : s_grid) {
        double d1 = (mbp_conjugated_pgf(config, s, h1) - s) / h1;
        double d2 = (mbp_conjugated_pgf(config, s, h2) - s) / h2;
        double rich = (h1 * d2 - h2 * d1) / (h1 - h2);
        double target = config.nu * (f.pgf(s) - s);
        double scale = std::max(std::abs(target), 1e-3 * config.nu);
        worst = std::max(worst, std::abs(rich - target) / scale);
    }
    return worst;
}

MbpPath simulate_mbp(const MbpConfig& config, const MbpOffspringLaw& offspring, double t_end, Engine& eng,
                     const MbpPathOptions& options)
{
    check_time(t_end);
    MbpPath path;
    std::uint64_t z = 1;
    double t = 0.0;
    if (options.record_events) {
        path.times.push_back(0.0);
        path.sizes.push_back(1);
    }
    while (z > 0) {
        t += exponential01(eng) / (config.nu * static_cast<double>(z));
        if (t > t_end)
            break;
        std::uint64_t x = offspring.sample(eng);
        ++path.events;
        if (x > options.population_cap - (z - 1)) {
            path.overflow = true;
            z = options.population_cap;
            break;
        }
        z = z - 1 + x;
        if (options.record_events) {
            path.times.push_back(t);
            path.sizes.push_back(z);
        }
        if (z == 0)
            path.extinction_time = t;
    }
    path.final_size = z;
    return path;
}

SimReport run_plan(const SimPlan& plan, const MbpConfig& config, double t_end)
{
    check_plan(plan);
    PfParams law = mbp_marginal(config, t_end);
    MbpOffspringLaw offspring(config);
    auto z = run_replicates(plan, [&](std::uint64_t, Engine& eng) {
        MbpPath p = simulate_mbp(config, offspring, t_end, eng);
        if (p.overflow)
            throw NonConvergent("population cap reached");
        return p.final_size;
    });
    const double R = static_cast<double>(plan.replicates);
    std::uint64_t extinct = static_cast<std::uint64_t>(std::count(z.begin(), z.end(), 0u));
    double f = static_cast<double>(extinct) / R;
    double p0 = pgf_eval(law, 0.0);

    SimReport rep;
    rep.experiment = plan.experiment.empty() ? "mbp" : plan.experiment;
    rep.seed = plan.master_seed;
    rep.params = {{"theta", config.theta}, {"lambda", config.lambda}, {"mu", config.mu},
                  {"nu", config.nu},       {"m", config.m},           {"t", t_end},
                  {"replicates", plan.replicates}, {"marginal", law.describe()}};
    rep.estimate("extinction frequency", f, std::sqrt(f * (1.0 - f) / R));
    rep.estimate("exact extinction probability", p0);
    double band = 3.0 * std::sqrt(p0 * (1.0 - p0) / R);
    bool ok = band > 0.0 ? std::abs(f - p0) <= band : extinct == 0;
    rep.verdict("extinction frequency", p0 > 0.0 ? "within 3 CLT bands" : "no extinctions", ok,
                std::to_string(extinct) + " of " + std::to_string(plan.replicates) + " extinct");
    GofResult g = discrete_gof(z, pmf_table(law, 4000));
    rep.tests.push_back(g.as_test("Z(t) against the marginal law"));
    return rep;
}

} // namespace pfbranch
