#include "pfbranch/gwfixed.hpp"

#include "pfbranch/errors.hpp"
#include "pfbranch/pgf.hpp"
#include "pfbranch/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace pfbranch {

std::string to_string(Regime r)
{
    switch (r) {
    case Regime::Subcritical:
        return "subcritical";
    case Regime::Critical:
        return "critical";
    case Regime::Supercritical:
        return "supercritical";
    }
    return "?";
}

Regime GwFixedModel::regime() const
{
    double a = offspring.a();
    return a < 1.0 ? Regime::Supercritical : a > 1.0 ? Regime::Subcritical : Regime::Critical;
}

double GwFixedModel::mean() const { return std::pow(offspring.a(), -1.0 / offspring.theta()); }

GwFixedModel gw_model(const PfParams& offspring, std::uint64_t ancestors)
{
    PfParams p = canonicalize(offspring);
    if (p.tag() != PfCase::A1)
        throw ConstraintViolation("offspring law must be case A1");
    if (ancestors == 0)
        throw ConstraintViolation("ancestors >= 1");
    return {p, ancestors};
}

const PfParams& GenerationLaw::params() const
{
    if (!law_)
        throw UnsupportedCase("generation 0 is the point mass at 1");
    return *law_;
}

double GenerationLaw::pgf(double s) const { return law_ ? pgf_eval(*law_, s) : s; }

double GenerationLaw::prob_zero() const { return law_ ? pgf_eval(*law_, 0.0) : 0.0; }

GenerationLaw generation_law(const GwFixedModel& model, std::uint64_t n)
{
    if (n == 0)
        return GenerationLaw::identity();
    return GenerationLaw(iterate_params(model.offspring, n));
}

namespace {

// b_n / a^n = b Σ_{k<n} a^{k−n}
double ratio_bn_an(const PfParams& p, std::uint64_t n)
{
    double a = p.a(), b = p.b(), nn = static_cast<double>(n);
    if (a == 1.0)
        return b * nn;
    return b * std::expm1(-nn * std::log(a)) / (1.0 - a);
}

} // namespace

double survival_probability(const GwFixedModel& model, std::uint64_t n)
{
    if (n == 0)
        return 1.0;
    const PfParams& p = model.offspring;
    double l = static_cast<double>(n) * std::log(p.a()) + std::log1p(ratio_bn_an(p, n));
    return std::exp(-l / p.theta());
}

double extinction_by(const GwFixedModel& model, std::uint64_t n)
{
    double s = survival_probability(model, n);
    return std::exp(static_cast<double>(model.ancestors) * std::log1p(-s));
}

double extinction_probability(const GwFixedModel& model)
{
    const PfParams& p = model.offspring;
    if (p.a() >= 1.0)
        return 1.0;
    return std::max(0.0, -std::expm1(std::log((1.0 - p.a()) / p.b()) / p.theta()));
}

CpfParams martingale_limit_law(const GwFixedModel& model)
{
    const PfParams& p = model.offspring;
    if (model.regime() != Regime::Supercritical)
        throw NotSupercritical("martingale limit law needs a < 1");
    return cpf(p.theta(), 1.0, p.b() / (1.0 - p.a()));
}

double abel_residual(const GwFixedModel& model, std::span<const double> u_grid)
{
    CpfParams w = martingale_limit_law(model);
    const PfParams& p = model.offspring;
    double scale = std::pow(p.a(), 1.0 / p.theta());
    double worst = 0.0;
    for (double u : u_grid)
        worst = std::max(worst, std::abs(cpf_laplace(w, u) - pgf_eval(p, cpf_laplace(w, scale * u))));
    return worst;
}

double normalized_transform(const GwFixedModel& model, std::uint64_t n, double u)
{
    if (n == 0)
        return std::exp(-u);
    const PfParams& p = model.offspring;
    PfParams fn = iterate_params(p, n);
    double t = -std::expm1(-u * std::exp(static_cast<double>(n) * std::log(p.a()) / p.theta()));
    return 1.0 - one_minus_pgf(fn, t);
}

PfParams conditional_law(const GwFixedModel& model, std::uint64_t n)
{
    if (n == 0)
        throw ConstraintViolation("n >= 1");
    double r = ratio_bn_an(model.offspring, n);
    return validate_params(model.offspring.theta(), 1.0, 1.0 / (1.0 + r), r / (1.0 + r));
}

SubcriticalLimits subcritical_limits(const GwFixedModel& model)
{
    if (model.regime() != Regime::Subcritical)
        throw NotSubcritical("subcritical limits need a > 1");
    const PfParams& p = model.offspring;
    double d = p.a() + p.b() - 1.0;
    return {std::pow((p.a() - 1.0) / d, 1.0 / p.theta()),
            validate_params(p.theta(), 1.0, (p.a() - 1.0) / d, p.b() / d)};
}

CriticalLimits critical_limits(const GwFixedModel& model)
{
    if (model.regime() != Regime::Critical)
        throw NotCritical("critical limits need a = 1");
    const PfParams& p = model.offspring;
    double th = p.theta();
    return {std::pow(p.b(), -1.0 / th), std::pow(p.b(), 1.0 / th), cpf_plus(th, 1.0)};
}

double critical_conditional_transform(const GwFixedModel& model, std::uint64_t n, double u)
{
    if (model.regime() != Regime::Critical)
        throw NotCritical("critical scaling needs a = 1");
    const PfParams& p = model.offspring;
    double scale = std::pow(p.b() * static_cast<double>(n), 1.0 / p.theta());
    double t = -std::expm1(-u / scale);
    return 1.0 - one_minus_pgf(conditional_law(model, n), t);
}

DecompositionReport decompose_supercritical(const GwFixedModel& model)
{
    if (model.regime() != Regime::Supercritical)
        throw NotSupercritical("decomposition needs a < 1");
    const PfParams& f = model.offspring;
    double q = extinction_probability(model);
    if (!(q > 0.0 && q < 1.0))
        throw DegenerateDecomposition("extinction probability must lie in (0,1)");
    double th = f.theta();
    PfParams sub = validate_params(th, 1.0 / q, f.a(), f.b() * std::pow(q, th));
    PfParams super = pf_plus(th, f.a());
    double gr = 0.0, hr = 0.0;
    for (int i = 0; i <= 100; ++i) {
        double s = i / 100.0;
        gr = std::max(gr, std::abs(pgf_eval(sub, s) - pgf_eval(f, q * s) / q));
        hr = std::max(hr, std::abs(pgf_eval(super, s) - (pgf_eval(f, q + (1 - q) * s) - q) / (1 - q)));
    }
    return {q, sub, super, gr, hr};
}

GenerationPath simulate_generation_path(const GwFixedModel& model, std::uint64_t n_generations, Engine& eng,
                                        const PathOptions& options)
{
    auto sampler = sampler_for(model.offspring);
    GenerationPath path;
    path.z.reserve(n_generations + 1);
    std::uint64_t z = model.ancestors;
    path.z.push_back(z);
    for (std::uint64_t k = 0; k < n_generations; ++k) {
        if (z == 0) {
            path.z.push_back(0);
            continue;
        }
        if (options.stop_at && z >= options.stop_at) {
            path.stopped = true;
            return path;
        }
        std::uint64_t next = 0;
        for (std::uint64_t i = 0; i < z; ++i) {
            std::uint64_t x = (*sampler)(eng);
            if (x > options.population_cap - next) {
                path.z.push_back(options.population_cap);
                path.exploded = true;
                return path;
            }
            next += x;
        }
        z = next;
        path.z.push_back(z);
    }
    return path;
}

SimReport run_plan(const SimPlan& plan, const GwFixedModel& model)
{
    check_plan(plan);
    if (plan.horizon == 0)
        throw ConstraintViolation("horizon >= 1");
    const std::uint64_t n = plan.horizon;
    const double R = static_cast<double>(plan.replicates);
    const bool super = model.regime() == Regime::Supercritical;
    const double q = extinction_probability(model);
    PathOptions opt;
    if (super)
        opt.stop_at = q > 0.0 ? static_cast<std::uint64_t>(std::ceil(std::log(1e-12) / std::log(q))) : 1;

    // Generation of extinction, or −1.
    auto gen = run_replicates(plan, [&](std::uint64_t, Engine& eng) -> std::int64_t {
        GenerationPath p = simulate_generation_path(model, n, eng, opt);
        if (p.exploded)
            throw NonConvergent("population cap reached");
        if (!p.extinct())
            return -1;
        auto it = std::find(p.z.begin(), p.z.end(), 0u);
        return it - p.z.begin();
    });
    std::vector<std::uint64_t> by(n + 1, 0);
    for (std::int64_t g : gen)
        if (g >= 0)
            ++by[static_cast<std::size_t>(g)];
    for (std::uint64_t k = 1; k <= n; ++k)
        by[k] += by[k - 1];

    SimReport rep;
    rep.experiment = plan.experiment.empty() ? "gw-fixed" : plan.experiment;
    rep.seed = plan.master_seed;
    rep.params = {{"offspring", model.offspring.describe()},
                  {"ancestors", model.ancestors},
                  {"replicates", plan.replicates},
                  {"horizon", n},
                  {"stop_at", opt.stop_at}};
    double worst = 0.0;
    std::uint64_t worst_n = 0;
    bool ok = true;
    for (std::uint64_t k = 1; k <= n; ++k) {
        double p = extinction_by(model, k);
        double f = static_cast<double>(by[k]) / R;
        double band = 3.0 * std::sqrt(p * (1.0 - p) / R);
        rep.estimate("extinction by " + std::to_string(k), f, std::sqrt(f * (1.0 - f) / R));
        double dev = std::abs(f - p);
        bool in = band > 0.0 ? dev <= band : dev == 0.0;
        ok = ok && in;
        double ratio = band > 0.0 ? dev / band : (dev == 0.0 ? 0.0 : INFINITY);
        if (k == 1 || ratio > worst) {
            worst = ratio;
            worst_n = k;
        }
    }
    rep.verdict("extinction by generation n", "|freq - f^n(0)| <= 3 CLT bands for n = 1.." + std::to_string(n), ok,
                "max deviation " + format_g(worst, 3) + " bands at n = " + std::to_string(worst_n));
    if (super) {
        double f = static_cast<double>(by[n]) / R;
        double gap = q - extinction_by(model, n);
        double band = 3.0 * std::sqrt(q * (1.0 - q) / R);
        rep.estimate("extinction probability", q);
        rep.verdict("extinction probability", "|freq - q| <= 3 sqrt(q(1-q)/R) + (q - f^n(0))",
                    std::abs(f - q) <= band + gap,
                    "frequency " + format_g(f) + " vs q = " + format_g(q) + ", band " + format_g(band + gap, 3));
    }
    return rep;
}

} // namespace pfbranch
