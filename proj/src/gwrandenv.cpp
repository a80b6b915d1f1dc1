#include "pfbranch/gwrandenv.hpp"

#include "pfbranch/cpf.hpp"
#include "pfbranch/errors.hpp"
#include "pfbranch/numerics.hpp"
#include "pfbranch/pgf.hpp"
#include "pfbranch/pmf.hpp"
#include "pfbranch/sampling.hpp"
#include "pfbranch/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

namespace pfbranch {

void check_env_step(const EnvStep& s)
{
    if (!(std::isfinite(s.a) && s.a > 0.0))
        throw ConstraintViolation("A > 0");
    if (!(std::isfinite(s.b) && s.b > 0.0))
        throw ConstraintViolation("B > 0");
    if (s.a + s.b < 1.0 - kParamTol)
        throw ConstraintViolation("A+B >= 1");
}

namespace {

void check_theta(double theta)
{
    if (!(theta > 0.0 && theta <= 1.0))
        throw ConstraintViolation("theta in (0,1]");
}

double need(const std::map<std::string, double>& p, const std::string& key)
{
    auto it = p.find(key);
    if (it == p.end() || !std::isfinite(it->second))
        throw ConstraintViolation("missing parameter " + key);
    return it->second;
}

} // namespace

EnvSpec EnvSpec::discrete(double theta, std::vector<EnvAtom> atoms)
{
    check_theta(theta);
    if (atoms.empty())
        throw ConstraintViolation("discrete environment needs at least one atom");
    EnvSpec s;
    s.theta_ = theta;
    s.name_ = "discrete";
    CompensatedSum total;
    double a_min = std::numeric_limits<double>::infinity(), a_max = 0.0, b_max = 0.0;
    for (const EnvAtom& at : atoms) {
        check_env_step({at.a, at.b});
        if (!(at.p > 0.0 && at.p <= 1.0))
            throw ConstraintViolation("p in (0,1]");
        total.add(at.p);
        s.cumulative_.push_back(total.value());
        a_min = std::min(a_min, at.a);
        a_max = std::max(a_max, at.a);
        b_max = std::max(b_max, at.b);
    }
    if (std::abs(total.value() - 1.0) > kParamTol)
        throw ConstraintViolation("sum of p = 1");
    s.cumulative_.back() = 1.0;
    s.atoms_ = std::move(atoms);
    s.bounds_ = {a_min, a_max, b_max};
    return s;
}

EnvSpec EnvSpec::constant(double theta, double a, double b) { return discrete(theta, {{a, b, 1.0}}); }

EnvSpec EnvSpec::family(double theta, const std::string& name, const std::map<std::string, double>& params)
{
    check_theta(theta);
    EnvSpec s;
    s.theta_ = theta;
    s.name_ = name;
    s.params_ = params;
    if (name == "lognormal") {
        double mu = need(params, "mu"), sigma = need(params, "sigma");
        double shape = need(params, "b_shape"), scale = need(params, "b_scale");
        if (!(sigma >= 0.0))
            throw ConstraintViolation("sigma >= 0");
        if (!(shape > 0.0 && scale > 0.0))
            throw ConstraintViolation("b_shape > 0, b_scale > 0");
        s.sampler_ = [=](Engine& eng) {
            double a = std::exp(mu + sigma * standard_normal(eng));
            std::gamma_distribution<double> g(shape, scale);
            double extra = 0.0;
            while (!(extra > 0.0))
                extra = g(eng);
            return EnvStep{a, std::max(0.0, 1.0 - a) + extra};
        };
        if (sigma == 0.0)
            s.bounds_.a_min = s.bounds_.a_max = std::exp(mu);
    } else if (name == "uniform") {
        double a_lo = need(params, "a_lo"), a_hi = need(params, "a_hi");
        double b_lo = need(params, "b_lo"), b_hi = need(params, "b_hi");
        if (!(a_lo > 0.0 && a_hi >= a_lo))
            throw ConstraintViolation("0 < a_lo <= a_hi");
        if (!(b_lo > 0.0 && b_hi >= b_lo))
            throw ConstraintViolation("0 < b_lo <= b_hi");
        s.sampler_ = [=](Engine& eng) {
            double a = a_lo + (a_hi - a_lo) * uniform01(eng);
            double b = b_lo + (b_hi - b_lo) * uniform01(eng);
            return EnvStep{a, std::max(0.0, 1.0 - a) + b};
        };
        s.bounds_ = {a_lo, a_hi, std::max(0.0, 1.0 - a_lo) + b_hi};
    } else {
        throw ConstraintViolation("unknown environment family " + name);
    }
    return s;
}

EnvSpec EnvSpec::custom(double theta, Sampler sampler, std::string name, Bounds bounds)
{
    check_theta(theta);
    if (!sampler)
        throw ConstraintViolation("sampler required");
    EnvSpec s;
    s.theta_ = theta;
    s.name_ = std::move(name);
    s.sampler_ = std::move(sampler);
    s.bounds_ = bounds;
    return s;
}

EnvSpec EnvSpec::from_json(const nlohmann::json& j, std::optional<double> theta)
{
    if (!j.is_object())
        throw ConstraintViolation("environment spec must be a JSON object");
    double th;
    if (theta)
        th = *theta;
    else if (j.contains("theta") && j["theta"].is_number())
        th = j["theta"].get<double>();
    else
        throw ConstraintViolation("missing theta");
    if (j.contains("discrete")) {
        const auto& d = j["discrete"];
        if (!d.is_array())
            throw ConstraintViolation("discrete must be an array");
        std::vector<EnvAtom> atoms;
        for (const auto& e : d) {
            if (!e.is_object() || !e.contains("A") || !e.contains("B") || !e.contains("p") ||
                !e["A"].is_number() || !e["B"].is_number() || !e["p"].is_number())
                throw ConstraintViolation("discrete atoms need numeric A, B, p");
            atoms.push_back({e["A"].get<double>(), e["B"].get<double>(), e["p"].get<double>()});
        }
        return discrete(th, std::move(atoms));
    }
    if (j.contains("family")) {
        if (!j["family"].is_string())
            throw ConstraintViolation("family must be a string");
        std::map<std::string, double> params;
        if (j.contains("params")) {
            if (!j["params"].is_object())
                throw ConstraintViolation("params must be an object");
            for (auto it = j["params"].begin(); it != j["params"].end(); ++it) {
                if (!it.value().is_number())
                    throw ConstraintViolation("parameter " + it.key() + " must be numeric");
                params[it.key()] = it.value().get<double>();
            }
        }
        return family(th, j["family"].get<std::string>(), params);
    }
    throw ConstraintViolation("environment spec needs discrete or family");
}

nlohmann::json EnvSpec::to_json() const
{
    nlohmann::json j;
    j["theta"] = theta_;
    if (is_discrete()) {
        j["discrete"] = nlohmann::json::array();
        for (const EnvAtom& a : atoms_)
            j["discrete"].push_back({{"A", a.a}, {"B", a.b}, {"p", a.p}});
    } else {
        j["family"] = name_;
        j["params"] = params_;
    }
    return j;
}

EnvStep EnvSpec::draw(Engine& eng) const
{
    if (is_discrete()) {
        if (atoms_.size() == 1)
            return {atoms_[0].a, atoms_[0].b};
        double u = uniform01(eng);
        auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), u);
        std::size_t i = std::min<std::size_t>(it - cumulative_.begin(), atoms_.size() - 1);
        return {atoms_[i].a, atoms_[i].b};
    }
    EnvStep s = sampler_(eng);
    check_env_step(s);
    return s;
}

PathIterates::PathIterates(double theta, std::vector<EnvStep> steps) : theta_(theta), steps_(std::move(steps))
{
    check_theta(theta);
    std::size_t n = steps_.size();
    log_pi_.assign(n + 1, 0.0);
    r_.assign(n + 1, 0.0);
    r_dual_.assign(n + 1, 0.0);
    CompensatedSum lp, r, rd;
    for (std::size_t k = 1; k <= n; ++k) {
        const EnvStep& s = steps_[k - 1];
        check_env_step(s);
        r.add(std::exp(log_pi_[k - 1]) * s.b);
        lp.add(std::log(s.a));
        log_pi_[k] = lp.value();
        rd.add(s.b * std::exp(-log_pi_[k]));
        r_[k] = r.value();
        r_dual_[k] = rd.value();
    }
}

double PathIterates::R_over_pi(std::size_t k) const
{
    if (k == 0)
        return 0.0;
    return std::exp(std::log(r_.at(k)) - log_pi_.at(k));
}

std::vector<EnvStep> draw_steps(const EnvSpec& spec, std::size_t n, Engine& eng)
{
    std::vector<EnvStep> steps;
    steps.reserve(n);
    for (std::size_t k = 0; k < n; ++k)
        steps.push_back(spec.draw(eng));
    return steps;
}

PathIterates draw_environment(const EnvSpec& spec, std::size_t n, Engine& eng)
{
    return PathIterates(spec.theta(), draw_steps(spec, n, eng));
}

PfParams quenched_generation_law(const PathIterates& path, std::size_t n, bool reversed)
{
    if (n == 0 || n > path.n())
        throw ConstraintViolation("1 <= n <= path length");
    double b = reversed ? std::exp(path.log_pi(n) + std::log(path.R_dual(n))) : path.R(n);
    return validate_params(path.theta(), 1.0, path.pi(n), b);
}

double quenched_extinction(const PathIterates& path, std::size_t n)
{
    if (n > path.n())
        throw ConstraintViolation("n <= path length");
    if (n == 0)
        return 0.0;
    return -std::expm1(-std::log(path.pi(n) + path.R(n)) / path.theta());
}

std::string to_string(EnvVerdict v)
{
    switch (v) {
    case EnvVerdict::Subcritical:
        return "subcritical";
    case EnvVerdict::Critical:
        return "critical";
    case EnvVerdict::StronglyCritical:
        return "strongly critical";
    case EnvVerdict::Supercritical:
        return "supercritical";
    case EnvVerdict::Inconclusive:
        return "inconclusive";
    }
    return "?";
}

double gm_j_minus(const EnvSpec& spec, double x)
{
    if (!spec.is_discrete())
        throw UnsupportedCase("Goldie-Maller integrals need a finite-support law");
    CompensatedSum s;
    for (const EnvAtom& at : spec.atoms())
        s.add(at.p * std::min(x, std::max(0.0, -std::log(at.a))));
    return s.value();
}

double gm_j_plus(const EnvSpec& spec, double x)
{
    if (!spec.is_discrete())
        throw UnsupportedCase("Goldie-Maller integrals need a finite-support law");
    CompensatedSum s;
    for (const EnvAtom& at : spec.atoms())
        s.add(at.p * std::min(x, std::max(0.0, std::log(at.a))));
    return s.value();
}

namespace {

// Σ p · log x / J(log x) over atoms with x >= 1; at x = 1 the integrand is its limit 1/J'(0+).
double gm_integral(const EnvSpec& spec, bool dual)
{
    double slope = 0.0;
    for (const EnvAtom& at : spec.atoms())
        if (dual ? at.a > 1.0 : at.a < 1.0)
            slope += at.p;
    CompensatedSum total;
    for (const EnvAtom& at : spec.atoms()) {
        double x = dual ? at.b / at.a : at.b;
        if (x < 1.0)
            continue;
        double lx = std::log(x);
        double j = dual ? gm_j_plus(spec, lx) : gm_j_minus(spec, lx);
        if (lx == 0.0) {
            if (slope == 0.0)
                return std::numeric_limits<double>::infinity();
            total.add(at.p / slope);
        } else if (j == 0.0) {
            return std::numeric_limits<double>::infinity();
        } else {
            total.add(at.p * lx / j);
        }
    }
    return total.value();
}

} // namespace

ClassificationReport classify(const EnvSpec& spec, std::uint64_t budget, std::uint64_t seed)
{
    ClassificationReport rep{};
    if (spec.is_discrete()) {
        CompensatedSum m;
        double scale = 0.0;
        bool all_one = true;
        for (const EnvAtom& at : spec.atoms()) {
            double l = std::log(at.a);
            m.add(at.p * l);
            scale += at.p * std::abs(l);
            all_one = all_one && at.a == 1.0;
        }
        rep.e_log_a = m.value();
        rep.exact = true;
        rep.ci_half_width = 0.0;
        if (all_one)
            rep.verdict = EnvVerdict::StronglyCritical;
        else if (std::abs(rep.e_log_a) <= 1e-12 * scale)
            rep.verdict = EnvVerdict::Critical;
        else
            rep.verdict = rep.e_log_a < 0.0 ? EnvVerdict::Supercritical : EnvVerdict::Subcritical;
        if (rep.verdict == EnvVerdict::Critical || rep.verdict == EnvVerdict::StronglyCritical)
            rep.e_log_a = 0.0;
        GoldieMaller gm{};
        gm.i_minus = gm_integral(spec, false);
        gm.i_plus = gm_integral(spec, true);
        gm.forward_finite = rep.verdict == EnvVerdict::Supercritical && std::isfinite(gm.i_minus);
        gm.dual_finite = rep.verdict == EnvVerdict::Subcritical && std::isfinite(gm.i_plus);
        gm.trichotomy = gm.forward_finite ? "C1" : gm.dual_finite ? "C2" : "C3";
        rep.gm = gm;
        return rep;
    }
    if (budget < 2)
        throw InsufficientSamples("classification budget >= 2");
    Engine eng = make_stream(seed, {0xc1a55ULL});
    std::vector<double> logs(budget);
    bool all_one = true;
    for (double& l : logs) {
        EnvStep s = spec.draw(eng);
        l = std::log(s.a);
        all_one = all_one && s.a == 1.0;
    }
    MeanSe ms = mean_se(logs);
    rep.e_log_a = ms.mean;
    rep.exact = false;
    rep.ci_half_width = normal_upper_quantile(0.0005) * ms.se;
    if (all_one)
        rep.verdict = EnvVerdict::StronglyCritical;
    else if (ms.mean - rep.ci_half_width > 0.0)
        rep.verdict = EnvVerdict::Subcritical;
    else if (ms.mean + rep.ci_half_width < 0.0)
        rep.verdict = EnvVerdict::Supercritical;
    else
        rep.verdict = EnvVerdict::Inconclusive;
    return rep;
}

PerpetuityEstimate estimate_perpetuity(const EnvSpec& spec, double epsilon, Engine& eng, bool dual,
                                       std::uint64_t max_steps)
{
    if (!(epsilon > 0.0))
        throw ConstraintViolation("epsilon > 0");
    ClassificationReport c = classify(spec, 100000, eng());
    EnvVerdict want = dual ? EnvVerdict::Subcritical : EnvVerdict::Supercritical;
    if (c.verdict != want)
        throw NonConvergent(std::string(dual ? "dual" : "forward") + " perpetuity is not a.s. finite (" +
                            to_string(c.verdict) + ")");
    const auto& bd = spec.bounds();
    bool exact = dual ? (bd.a_min && *bd.a_min > 1.0 && bd.b_max) : (bd.a_max && *bd.a_max < 1.0 && bd.b_max);
    double geo = exact ? (dual ? 1.0 / (*bd.a_min - 1.0) : 1.0 / (1.0 - *bd.a_max)) : 0.0;
    CompensatedSum value;
    CompensatedSum lp;
    double max_b = 0.0;
    for (std::uint64_t n = 1; n <= max_steps; ++n) {
        EnvStep s = spec.draw(eng);
        max_b = std::max(max_b, s.b);
        if (dual) {
            lp.add(std::log(s.a));
            value.add(s.b * std::exp(-lp.value()));
        } else {
            value.add(std::exp(lp.value()) * s.b);
            lp.add(std::log(s.a));
        }
        double scale = std::exp(dual ? -lp.value() : lp.value());
        double rem = exact ? scale * *bd.b_max * geo : scale * max_b;
        if (rem <= epsilon * value.value())
            return {value.value(), n, rem, !exact};
    }
    throw NonConvergent("perpetuity truncation did not converge within the step cap");
}

namespace {

struct Truncation {
    double seed;
    double log_margin;
    bool heuristic;
};

Truncation truncation_rule(const EnvSpec& spec, double tol)
{
    const auto& bd = spec.bounds();
    if (bd.a_max && *bd.a_max < 1.0 && bd.b_max) {
        double hi = std::max(1.0, *bd.b_max / (1.0 - *bd.a_max));
        return {0.5 * (1.0 + hi), std::log(tol / hi), false};
    }
    ClassificationReport c = classify(spec);
    if (c.verdict != EnvVerdict::Supercritical)
        throw NotSupercritical("perpetuity truncation requires a supercritical environment");
    return {1.0, std::log(tol) - 7.0, true};
}

std::vector<double> backward(const std::vector<EnvStep>& steps, std::size_t m, double seed)
{
    std::vector<double> r(m + 2, 0.0);
    double x = seed;
    for (std::size_t j = steps.size(); j >= 1; --j) {
        x = steps[j - 1].b + steps[j - 1].a * x;
        if (j <= m + 1)
            r[j] = x;
    }
    return r;
}

} // namespace

ShiftedPerpetuities shifted_perpetuities(const EnvSpec& spec, std::vector<EnvStep>& steps, std::size_t m,
                                         double tol, Engine& eng)
{
    if (!(tol > 0.0))
        throw ConstraintViolation("tolerance > 0");
    Truncation rule = truncation_rule(spec, tol);
    while (steps.size() < m + 1)
        steps.push_back(spec.draw(eng));
    // max over j <= m+1 of log Π_{j..N} = L_N − min_{j<=m+1} L_{j−1}
    double lmin = 0.0, l = 0.0;
    for (std::size_t k = 1; k <= steps.size(); ++k) {
        if (k <= m + 1)
            lmin = std::min(lmin, l);
        l += std::log(steps[k - 1].a);
    }
    const std::size_t cap = m + 1 + 10000000;
    while (l - lmin > rule.log_margin) {
        if (steps.size() >= cap)
            throw TruncationTooCoarse("perpetuity truncation exceeded the step cap");
        steps.push_back(spec.draw(eng));
        l += std::log(steps.back().a);
    }
    ShiftedPerpetuities out;
    out.r = backward(steps, m, rule.seed);
    out.tolerance = tol;
    out.heuristic = rule.heuristic;
    out.path_length = steps.size();
    return out;
}

GenerationPath simulate_quenched_path(double theta, const std::vector<EnvStep>& steps, std::size_t n,
                                      Engine& eng, const QuenchedPathOptions& options)
{
    if (n > steps.size())
        throw ConstraintViolation("n <= path length");
    GenerationPath path;
    path.z.reserve(n + 1);
    std::uint64_t z = 1;
    path.z.push_back(z);
    for (std::size_t k = 1; k <= n; ++k) {
        if (z == 0) {
            path.z.push_back(0);
            continue;
        }
        if (options.stop_at && z >= options.stop_at) {
            path.stopped = true;
            return path;
        }
        const EnvStep& e = steps[options.reversed ? n - k : k - 1];
        auto sampler = sampler_for(pf(theta, e.a, e.b));
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

namespace {

const std::array<double, 5> kUGrid = {0.1, 0.5, 1.0, 2.0, 5.0};

// 1 − (x + y)^{−1/θ} with x + y computed in log space from log x.
double extinction_from(double log_pi, double r, double theta)
{
    double s = std::exp(log_pi) + r;
    return -std::expm1(-std::log(s) / theta);
}

double frac(std::uint64_t k, std::uint64_t n) { return n ? static_cast<double>(k) / static_cast<double>(n) : 0.0; }

std::string coverage_detail(std::uint64_t k, std::uint64_t n)
{
    return std::to_string(k) + "/" + std::to_string(n) + " environments covered";
}

bool within(double value, const MeanSe& m, double z)
{
    if (m.se == 0.0)
        return std::abs(m.mean - value) <= 1e-12 * std::max(1.0, std::abs(value));
    return std::abs(m.mean - value) <= z * m.se;
}

// Wilson score interval at z for k successes in n trials.
bool wilson_covers(std::uint64_t k, std::uint64_t n, double p, double z)
{
    double nn = static_cast<double>(n), ph = static_cast<double>(k) / nn;
    double den = 1.0 + z * z / nn;
    double mid = (ph + z * z / (2 * nn)) / den;
    double half = z * std::sqrt(ph * (1 - ph) / nn + z * z / (4 * nn * nn)) / den;
    return std::abs(p - mid) <= half;
}

nlohmann::json budget_json(const ReBudget& b)
{
    return {{"environments", b.environments}, {"paths", b.paths}, {"horizon", b.horizon},
            {"stop_at", b.stop_at}, {"coverage", b.coverage}};
}

void check_budget(const ReBudget& b)
{
    if (b.environments == 0 || b.paths == 0 || b.horizon == 0)
        throw ConstraintViolation("environments, paths and horizon must be positive");
}

struct SuperEnvResult {
    double q_inf, q_n;
    double m25, m43;
    bool c25, c43, c45, cw;
    double w_mean;
    double residual44;
    std::uint64_t stopped;
    bool heuristic;
};

} // namespace

SimReport verify_supercritical_re(const EnvSpec& spec, const ReBudget& budget, std::uint64_t seed)
{
    check_budget(budget);
    ClassificationReport cls = classify(spec, 100000, seed);
    if (cls.verdict != EnvVerdict::Supercritical)
        throw NotSupercritical("verify_supercritical_re needs a supercritical environment, got " +
                               to_string(cls.verdict));
    const double th = spec.theta();
    const std::size_t n = budget.horizon;
    const std::uint64_t M = budget.paths;
    const double z3 = 3.0;

    auto results = parallel_map(budget.environments, budget.width, [&](std::uint64_t i) {
        Engine env_eng = make_stream(seed, {1, i});
        std::vector<EnvStep> steps = draw_steps(spec, n, env_eng);
        ShiftedPerpetuities sp = shifted_perpetuities(spec, steps, n, 1e-13, env_eng);
        PathIterates it(th, std::vector<EnvStep>(steps.begin(), steps.begin() + n));
        SuperEnvResult res{};
        res.heuristic = sp.heuristic;
        res.q_inf = -std::expm1(-std::log(sp.r[1]) / th);
        res.q_n = quenched_extinction(it, n);
        std::vector<double> x25(M), x43(M), xw(M);
        std::vector<std::vector<double>> x45(kUGrid.size(), std::vector<double>(M));
        Engine eng = make_stream(seed, {2, i});
        QuenchedPathOptions opt;
        opt.stop_at = budget.stop_at;
        for (std::uint64_t j = 0; j < M; ++j) {
            GenerationPath p = simulate_quenched_path(th, steps, n, eng, opt);
            if (p.exploded)
                throw NonConvergent("population cap reached");
            std::size_t k = p.z.size() - 1;
            double z = static_cast<double>(p.z.back());
            res.stopped += p.stopped;
            if (z == 0.0) {
                x25[j] = 1.0;
                x43[j] = 1.0;
                xw[j] = 0.0;
                for (auto& v : x45)
                    v[j] = 1.0;
                continue;
            }
            if (k == n) {
                x25[j] = 0.0;
            } else {
                // P(Z_n = 0 | Z_k = z) for the law PF(θ, Π_{k+1..n}, R_{k+1..n}).
                double lp = it.log_pi(n) - it.log_pi(k);
                double r = (it.R(n) - it.R(k)) * std::exp(-it.log_pi(k));
                x25[j] = std::exp(z * std::log(extinction_from(lp, r, th)));
            }
            double q_next = -std::expm1(-std::log(sp.r[k + 1]) / th);
            x43[j] = std::exp(z * std::log(q_next));
            double scale = std::exp(it.log_pi(k) / th);
            xw[j] = scale * z;
            CpfParams tail_law = cpf(th, 1.0, sp.r[k + 1]);
            for (std::size_t u = 0; u < kUGrid.size(); ++u)
                x45[u][j] = std::exp(z * std::log(cpf_laplace(tail_law, kUGrid[u] * scale)));
        }
        MeanSe m25 = mean_se(x25), m43 = mean_se(x43), mw = mean_se(xw);
        res.m25 = m25.mean;
        res.m43 = m43.mean;
        res.c25 = within(res.q_n, m25, z3);
        res.c43 = within(res.q_inf, m43, z3);
        res.w_mean = mw.mean;
        res.cw = within(1.0, mw, z3);
        CpfParams law = cpf(th, 1.0, sp.r[1]);
        TransformMatch tm = transform_match_values(x45, [&](double u) { return cpf_laplace(law, u); },
                                                   std::span<const double>(kUGrid.data(), kUGrid.size()));
        res.c45 = tm.passed;
        // (1 − q(e))^{−θ} = R_∞ against A_1 (1 − q(e_{≥2}))^{−θ} + B_1.
        double lhs = std::pow(1.0 - res.q_inf, -th);
        double q2 = -std::expm1(-std::log(sp.r[2]) / th);
        double rhs = steps[0].a * std::pow(1.0 - q2, -th) + steps[0].b;
        res.residual44 = std::abs(lhs - rhs) / lhs;
        return res;
    });

    SimReport rep;
    rep.experiment = "gw-re-super";
    rep.seed = seed;
    rep.params = {{"env", spec.to_json()}, {"budget", budget_json(budget)}, {"u_grid", kUGrid}};
    std::uint64_t k25 = 0, k43 = 0, k45 = 0, kw = 0, stopped = 0;
    bool heuristic = false;
    double max44 = 0.0;
    std::vector<double> q_inf, gap43;
    for (const auto& r : results) {
        k25 += r.c25;
        k43 += r.c43;
        k45 += r.c45;
        kw += r.cw;
        stopped += r.stopped;
        heuristic = heuristic || r.heuristic;
        max44 = std::max(max44, r.residual44);
        q_inf.push_back(r.q_inf);
        gap43.push_back(r.m43 - r.q_inf);
    }
    const std::uint64_t E = budget.environments;
    MeanSe mq = mean_se(q_inf), mg = mean_se(gap43);
    rep.estimate("mean quenched extinction probability", mq.mean, mq.se);
    rep.estimate("mean simulated minus exact extinction", mg.mean, mg.se);
    rep.estimate("coverage extinction by horizon", frac(k25, E));
    rep.estimate("coverage ultimate extinction", frac(k43, E));
    rep.estimate("coverage martingale limit transform", frac(k45, E));
    rep.estimate("coverage martingale mean", frac(kw, E));
    rep.estimate("fraction of paths stopped early", frac(stopped, E * budget.paths));
    rep.runtime["truncation_heuristic"] = heuristic;
    std::string tol = ">= " + format_g(budget.coverage) + " of environments within 3 SE";
    rep.verdict("quenched extinction by horizon", tol, frac(k25, E) >= budget.coverage, coverage_detail(k25, E));
    rep.verdict("quenched extinction probability", tol, frac(k43, E) >= budget.coverage, coverage_detail(k43, E));
    rep.verdict("quenched martingale limit law", ">= " + format_g(budget.coverage) +
                    " of environments within the Bonferroni band on the u-grid",
                frac(k45, E) >= budget.coverage, coverage_detail(k45, E));
    rep.verdict("extinction one-step recursion", "relative residual < 1e-12", max44 < 1e-12,
                "max residual " + format_g(max44, 3));
    if (th == 1.0)
        rep.verdict("quenched martingale mean", tol, frac(kw, E) >= budget.coverage, coverage_detail(kw, E));
    return rep;
}

namespace {

double pf_plus_tv(double theta, double x, double y)
{
    if (x == y)
        return 0.0;
    TvBounds b = total_variation(pmf_table(pf_plus(theta, x), 500), pmf_table(pf_plus(theta, y), 500));
    return b.upper;
}

struct SubEnvResult {
    double identity;
    bool c_surv, c_mean, has_mean;
    std::vector<double> tv;
    bool tv_monotone;
};

const std::array<std::size_t, 4> kTvGrid = {5, 10, 20, 50};

double dual_limit(const EnvSpec& spec, std::vector<EnvStep>& steps, Engine& eng, bool& heuristic)
{
    const auto& bd = spec.bounds();
    bool exact = bd.a_min && *bd.a_min > 1.0 && bd.b_max;
    heuristic = heuristic || !exact;
    CompensatedSum v, lp;
    double max_b = 0.0;
    for (std::size_t k = 1;; ++k) {
        if (k > steps.size()) {
            if (k > 10000000)
                throw TruncationTooCoarse("dual perpetuity truncation exceeded the step cap");
            steps.push_back(spec.draw(eng));
        }
        const EnvStep& s = steps[k - 1];
        max_b = std::max(max_b, s.b);
        lp.add(std::log(s.a));
        v.add(s.b * std::exp(-lp.value()));
        double scale = std::exp(-lp.value());
        double rem = exact ? scale * *bd.b_max / (*bd.a_min - 1.0) : scale * max_b * 1e3;
        if (k >= kTvGrid.back() && rem <= 1e-15 * v.value())
            return v.value();
    }
}

} // namespace

SimReport verify_subcritical_re(const EnvSpec& spec, const ReBudget& budget, std::uint64_t seed)
{
    check_budget(budget);
    ClassificationReport cls = classify(spec, 100000, seed);
    if (cls.verdict != EnvVerdict::Subcritical)
        throw NotSubcritical("verify_subcritical_re needs a subcritical environment, got " +
                             to_string(cls.verdict));
    const double th = spec.theta();
    const std::size_t n = budget.horizon;
    const std::uint64_t M = budget.paths;

    std::vector<int> heur(budget.environments, 0);
    auto results = parallel_map(budget.environments, budget.width, [&](std::uint64_t i) {
        Engine env_eng = make_stream(seed, {1, i});
        std::vector<EnvStep> steps = draw_steps(spec, std::max(n, kTvGrid.back()), env_eng);
        PathIterates it(th, std::vector<EnvStep>(steps.begin(), steps.begin() + n));
        SubEnvResult res{};
        double pi = it.pi(n), r = it.R(n);
        double lhs = std::pow(pi, 1.0 / th) * std::pow(pi + r, -1.0 / th);
        double rhs = std::exp(-std::log1p(it.R_over_pi(n)) / th);
        res.identity = std::abs(lhs - rhs) / rhs;
        double p_surv = std::exp(-std::log(pi + r) / th);
        double cond_mean = std::exp(std::log1p(it.R_over_pi(n)) / th);

        Engine eng = make_stream(seed, {2, i});
        std::uint64_t alive = 0;
        std::vector<double> survivors;
        for (std::uint64_t j = 0; j < M; ++j) {
            GenerationPath p = simulate_quenched_path(th, steps, n, eng);
            if (p.exploded)
                throw NonConvergent("population cap reached");
            if (p.z.back() > 0) {
                ++alive;
                survivors.push_back(static_cast<double>(p.z.back()));
            }
        }
        res.c_surv = wilson_covers(alive, M, p_surv, 3.0);
        res.has_mean = th == 1.0 && survivors.size() >= 100;
        if (res.has_mean) {
            // Z_n given survival is geometric on {1, 2, ...} with mean 1 + R_n/Π_n; its exact
            // variance replaces the sample one, which is unreliable for skewed data.
            MeanSe ms = mean_se(survivors);
            ms.se = std::sqrt(cond_mean * (cond_mean - 1.0) / static_cast<double>(survivors.size()));
            res.c_mean = within(cond_mean, ms, 3.0);
        }

        bool h = false;
        double rd_inf = dual_limit(spec, steps, env_eng, h);
        heur[i] = h;
        PathIterates full(th, std::vector<EnvStep>(steps.begin(), steps.begin() + kTvGrid.back()));
        double limit = 1.0 / (1.0 + rd_inf);
        res.tv_monotone = true;
        for (std::size_t m : kTvGrid) {
            double tv = pf_plus_tv(th, 1.0 / (1.0 + full.R_dual(m)), limit);
            if (!res.tv.empty() && tv > res.tv.back() + 1e-15)
                res.tv_monotone = false;
            res.tv.push_back(tv);
        }
        return res;
    });

    SimReport rep;
    rep.experiment = "gw-re-sub";
    rep.seed = seed;
    rep.params = {{"env", spec.to_json()}, {"budget", budget_json(budget)}, {"tv_grid", kTvGrid}};
    const std::uint64_t E = budget.environments;
    double max_id = 0.0;
    std::uint64_t ks = 0, km = 0, nm = 0, ktv = 0;
    std::vector<double> tv_last;
    for (const auto& r : results) {
        max_id = std::max(max_id, r.identity);
        ks += r.c_surv;
        nm += r.has_mean;
        km += r.has_mean && r.c_mean;
        bool ok = r.tv_monotone && r.tv.back() < 1e-3;
        ktv += ok;
        tv_last.push_back(r.tv.back());
    }
    rep.runtime["truncation_heuristic"] = std::any_of(heur.begin(), heur.end(), [](int h) { return h != 0; });
    rep.estimate("max relative error of the survival identity", max_id);
    rep.estimate("coverage survival probability", frac(ks, E));
    rep.estimate("median TV at n=50", [&] {
        std::nth_element(tv_last.begin(), tv_last.begin() + tv_last.size() / 2, tv_last.end());
        return tv_last[tv_last.size() / 2];
    }());
    rep.verdict("survival identity", "relative error < 1e-14", max_id < 1e-14);
    std::string tol = ">= " + format_g(budget.coverage) + " of environments within 3 SE";
    rep.verdict("quenched survival probability", tol, frac(ks, E) >= budget.coverage, coverage_detail(ks, E));
    if (nm > 0)
        rep.verdict("quenched conditional mean", tol, frac(km, nm) >= budget.coverage, coverage_detail(km, nm));
    rep.verdict("reversed conditional law convergence", ">= 0.95 of paths with TV nonincreasing and < 1e-3 at n=50",
                frac(ktv, E) >= 0.95, std::to_string(ktv) + "/" + std::to_string(E) + " paths");
    return rep;
}

namespace {

// E(e^{−u Z_n/R^{1/θ}} | Z_n > 0) for the law PF_+(θ, 1/(1+R)).
double critical_transform(double theta, double rd, double u)
{
    double t = -std::expm1(-u * std::pow(rd, -1.0 / theta));
    double w = 1.0 / (1.0 + rd);
    double inner = w * std::pow(t, -theta) + rd * w;
    return 1.0 - std::pow(inner, -1.0 / theta);
}

struct CritEnvResult {
    double r49, r50;
    std::vector<double> resid;
};

} // namespace

SimReport verify_critical_re(const EnvSpec& spec, const ReBudget& budget, std::uint64_t seed)
{
    check_budget(budget);
    ClassificationReport cls = classify(spec, 100000, seed);
    if (cls.verdict != EnvVerdict::Critical && cls.verdict != EnvVerdict::StronglyCritical)
        throw NotCritical("verify_critical_re needs a critical environment, got " + to_string(cls.verdict));
    const double th = spec.theta();
    const std::size_t n = budget.horizon;
    std::vector<std::size_t> grid;
    for (std::size_t m = 10; m < n; m *= 10)
        grid.push_back(m);
    grid.push_back(n);
    CpfParams limit = cpf_plus(th, 1.0);

    auto results = parallel_map(budget.environments, budget.width, [&](std::uint64_t i) {
        Engine eng = make_stream(seed, {1, i});
        PathIterates it = draw_environment(spec, n, eng);
        CritEnvResult res{};
        double rd = it.R_dual(n);
        res.r49 = std::exp(-std::log1p(1.0 / rd) / th);
        res.r50 = std::exp(std::log1p(1.0 / rd) / th);
        for (std::size_t m : grid) {
            double worst = 0.0;
            for (double u : kUGrid)
                worst = std::max(worst, std::abs(critical_transform(th, it.R_dual(m), u) - cpf_laplace(limit, u)));
            res.resid.push_back(worst);
        }
        return res;
    });

    SimReport rep;
    rep.experiment = "gw-re-critical";
    rep.seed = seed;
    rep.params = {{"env", spec.to_json()}, {"budget", budget_json(budget)}, {"n_grid", grid}};
    const std::uint64_t E = budget.environments;
    std::uint64_t k49 = 0, k50 = 0, k51 = 0;
    std::vector<std::vector<double>> by_n(grid.size());
    for (const auto& r : results) {
        k49 += std::abs(r.r49 - 1.0) <= 0.05;
        k50 += std::abs(r.r50 - 1.0) <= 0.05;
        k51 += r.resid.back() < 0.01;
        for (std::size_t g = 0; g < grid.size(); ++g)
            by_n[g].push_back(r.resid[g]);
    }
    std::vector<double> medians;
    for (auto& v : by_n) {
        std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
        medians.push_back(v[v.size() / 2]);
    }
    bool decreasing = true;
    for (std::size_t g = 1; g < medians.size(); ++g) {
        decreasing = decreasing && medians[g] <= medians[g - 1];
        rep.estimate("median transform residual at n=" + std::to_string(grid[g]), medians[g]);
    }
    rep.estimate("fraction survival ratio within 0.05", frac(k49, E));
    rep.estimate("fraction conditional mean ratio within 0.05", frac(k50, E));
    rep.verdict("reversed survival ratio", ">= 0.95 of paths within 1 +- 0.05 at n=" + std::to_string(n),
                frac(k49, E) >= 0.95, std::to_string(k49) + "/" + std::to_string(E));
    rep.verdict("reversed conditional mean ratio", ">= 0.95 of paths within 1 +- 0.05 at n=" + std::to_string(n),
                frac(k50, E) >= 0.95, std::to_string(k50) + "/" + std::to_string(E));
    rep.verdict("conditional transform limit",
                "median residual nonincreasing in n and >= 0.95 of paths below 0.01 at n=" + std::to_string(n),
                decreasing && frac(k51, E) >= 0.95, std::to_string(k51) + "/" + std::to_string(E));
    return rep;
}

SimReport duality_test(const EnvSpec& spec, std::size_t n, std::uint64_t paths, std::uint64_t seed, unsigned width)
{
    if (n == 0 || paths < 10)
        throw ConstraintViolation("duality test needs n >= 1 and at least 10 paths");
    struct Pair {
        double lp1, x, lp2, y;
    };
    auto rows = parallel_map(paths, width, [&](std::uint64_t i) {
        Engine e1 = make_stream(seed, {3, i, 0}), e2 = make_stream(seed, {3, i, 1});
        PathIterates p1 = draw_environment(spec, n, e1), p2 = draw_environment(spec, n, e2);
        auto snap = [](double v) { return std::round(v * 1e9) / 1e9; };
        return Pair{snap(p1.log_pi(n)), std::log(p1.R(n)) - p1.log_pi(n), snap(p2.log_pi(n)),
                    std::log(p2.R_dual(n))};
    });
    std::vector<double> xs, ys, lp_all, v_all;
    for (const Pair& r : rows) {
        xs.push_back(r.x);
        ys.push_back(r.y);
        lp_all.push_back(r.lp1);
        lp_all.push_back(r.lp2);
        v_all.push_back(r.x);
        v_all.push_back(r.y);
    }
    auto edges = [](std::vector<double> v, int bins) {
        std::sort(v.begin(), v.end());
        std::vector<double> e;
        for (int b = 1; b < bins; ++b) {
            double q = v[v.size() * b / bins];
            if (e.empty() || q > e.back())
                e.push_back(q);
        }
        return e;
    };
    std::vector<double> e_lp = edges(lp_all, 5), e_v = edges(v_all, 5);
    auto cell = [&](double lp, double v) {
        std::size_t a = std::upper_bound(e_lp.begin(), e_lp.end(), lp) - e_lp.begin();
        std::size_t b = std::upper_bound(e_v.begin(), e_v.end(), v) - e_v.begin();
        return a * (e_v.size() + 1) + b;
    };
    std::size_t cells = (e_lp.size() + 1) * (e_v.size() + 1);
    std::vector<std::uint64_t> cx(cells, 0), cy(cells, 0);
    for (const Pair& r : rows) {
        ++cx[cell(r.lp1, r.x)];
        ++cy[cell(r.lp2, r.y)];
    }
    TwoSampleResult ks = ks_two_sample(xs, ys, 1e-3);
    TwoSampleResult chi = chi2_homogeneity(cx, cy, 1e-3);
    SimReport rep;
    rep.experiment = "duality";
    rep.seed = seed;
    rep.params = {{"env", spec.to_json()}, {"n", n}, {"paths", paths}};
    rep.tests.push_back(ks.as_test("log R_n/Pi_n vs log R_n^(-1)", "ks", 1e-3));
    rep.tests.push_back(chi.as_test("(Pi_n, R_n/Pi_n) vs (Pi_n, R_n^(-1))", "chi2-homogeneity", 1e-3));
    rep.verdict("duality in law", "two-sample tests not rejected at 0.001", !ks.rejected && !chi.rejected);
    return rep;
}

ReDecomposition decompose_re(const EnvSpec& spec, std::vector<EnvStep>& steps, std::size_t horizon, double tol,
                             Engine& eng)
{
    if (horizon == 0)
        throw ConstraintViolation("horizon >= 1");
    const double th = spec.theta();
    ShiftedPerpetuities sp = shifted_perpetuities(spec, steps, horizon, tol, eng);
    // Forward truncation: the same recursion started from 0 at the end of the path.
    std::vector<double> rf = backward(steps, horizon, 0.0);
    auto q_of = [&](double r) { return -std::expm1(-std::log(r) / th); };
    auto f = [&](const EnvStep& e, double s) { return 1.0 - std::pow(e.a * std::pow(1.0 - s, -th) + e.b, -1.0 / th); };

    ReDecomposition out;
    out.tolerance = tol;
    out.heuristic = sp.heuristic;
    out.max_residual = 0.0;
    for (std::size_t n = 1; n <= horizon; ++n) {
        const EnvStep& e = steps[n - 1];
        double q = q_of(rf[n]), q_next = q_of(rf[n + 1]);
        if (!(q > 0.0 && q_next > 0.0))
            throw DegenerateDecomposition("quenched extinction probability is 0");
        ReDecompositionStep st{q, q_next, sp.r[n], sp.r[n + 1], pf_plus(th, e.a * sp.r[n + 1] / sp.r[n]),
                               0, 0, 0, 0, 0, 0, 0};
        st.atom = 1.0 / st.q - 1.0 / st.q_next;
        st.gamma1 = 1.0 / st.q_next;
        st.a1 = e.a * std::pow(st.q / st.q_next, th);
        st.b1 = e.b * std::pow(st.q, th);
        double qb = q_of(st.r), qb_next = q_of(st.r_next);
        for (int i = 0; i <= 40; ++i) {
            double s = i / 40.0;
            double g_fwd = f(e, st.q_next * s) / st.q;
            double g_bwd = f(e, qb_next * s) / qb;
            st.g_residual = std::max(st.g_residual, std::abs(g_fwd - g_bwd));
            double h_closed = 1.0 - std::pow(st.super_part.a() * std::pow(1.0 - s, -th) + e.b / st.r, -1.0 / th);
            double h_def = (f(e, st.q_next + (1.0 - st.q_next) * s) - st.q) / (1.0 - st.q);
            st.h_residual = std::max(st.h_residual, std::abs(h_closed - h_def));
            double g_ext = st.atom + st.gamma1 - std::pow(st.a1 * std::pow(st.gamma1 - s, -th) + st.b1, -1.0 / th);
            st.remark_residual = std::max(st.remark_residual, std::abs(g_ext - g_fwd));
        }
        out.max_residual = std::max({out.max_residual, st.g_residual, st.h_residual, st.remark_residual});
        out.steps.push_back(st);
    }
    return out;
}

} // namespace pfbranch
