#include "pfbranch/suites.hpp"

#include "pfbranch/cpf.hpp"
#include "pfbranch/errors.hpp"
#include "pfbranch/gwfixed.hpp"
#include "pfbranch/gwrandenv.hpp"
#include "pfbranch/mbp.hpp"
#include "pfbranch/pgf.hpp"
#include "pfbranch/pmf.hpp"
#include "pfbranch/stats.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>

namespace pfbranch {

namespace {

const std::array<double, 5> kUGrid = {0.1, 0.5, 1.0, 2.0, 5.0};
const std::array<double, 5> kThetaGrid = {0.1, 0.25, 0.5, 0.75, 1.0};

std::uint64_t scaled(std::uint64_t base, const SuiteOptions& o)
{
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(static_cast<double>(base) * o.scale)));
}

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t k)
{
    Engine e = make_stream(seed, {tag, k});
    return e();
}

SimReport start(const std::string& experiment, const SuiteOptions& o)
{
    SimReport rep;
    rep.experiment = experiment;
    rep.seed = o.seed;
    return rep;
}

// Appends sub to rep with every name suffixed by the label.
void absorb(SimReport& rep, SimReport sub, const std::string& label)
{
    std::string tag = " [" + label + "]";
    for (auto& v : sub.verdicts)
        v.criterion += tag;
    for (auto& t : sub.tests)
        t.name += tag;
    for (auto& e : sub.estimates)
        e.name += tag;
    sub.experiment += tag;
    rep.merge(sub);
}

std::vector<double> open_unit_grid(int n)
{
    std::vector<double> s;
    for (int i = 0; i < n; ++i)
        s.push_back(static_cast<double>(i) / n);
    return s;
}

std::vector<double> closed_unit_grid(int n)
{
    std::vector<double> s;
    for (int i = 0; i <= n; ++i)
        s.push_back(static_cast<double>(i) / n);
    return s;
}

EnvSpec two_point(double theta, double a1, double a2, double b = 1.0)
{
    return EnvSpec::discrete(theta, {{a1, b, 0.5}, {a2, b, 0.5}});
}

std::string rho_label(double theta, double rho)
{
    return "theta=" + format_g(theta) + " rho=" + format_g(rho);
}

} // namespace

SimReport check_pmf_dual(const SuiteOptions& o)
{
    SimReport rep = start("pmf-dual", o);
    const std::size_t N = 200;
    double worst = 0.0;
    std::string where;
    std::vector<double> rhos;
    for (int i = 1; i <= 9; ++i)
        rhos.push_back(i / 10.0);
    for (double th : kThetaGrid) {
        for (double rho : rhos) {
            PfParams p = pf(th, 1.0, (1.0 - rho) / rho);
            std::vector<double> series = pmf_table(p, N).p;
            std::vector<double> coeff = pmf_from_coefficients(p, N);
            for (std::size_t n = 0; n <= N; ++n) {
                double d = std::abs(series[n] - coeff[n]);
                double rel = d == 0.0 ? 0.0 : d / std::abs(coeff[n]);
                if (rel > worst) {
                    worst = rel;
                    where = rho_label(th, rho) + " n=" + std::to_string(n);
                }
            }
        }
    }
    rep.params = {{"theta", kThetaGrid}, {"rho", rhos}, {"a", 1.0}, {"b", "(1-rho)/rho"}, {"n_max", N}};
    rep.estimate("max relative deviation", worst);
    rep.verdict("dual pmf oracle", "relative deviation < 1e-12 for n <= 200", worst < 1e-12,
                "max " + format_g(worst, 3) + (where.empty() ? "" : " at " + where));
    return rep;
}

SimReport check_tail_monotonicity(const SuiteOptions& o)
{
    SimReport rep = start("tail-monotonicity", o);
    const std::size_t N = 10000;
    bool first_ok = true, second_ok = true;
    std::string first_detail = "p_n >= p_{n+1} on every grid point", second_detail;
    std::uint64_t certified = 0, literal_violations = 0, literal_cases = 0;
    for (double th : kThetaGrid) {
        for (int i = 1; i <= 9; ++i) {
            double rho = i / 10.0;
            PfParams p = pf(th, 1.0, (1.0 - rho) / rho);
            std::vector<double> q = pmf_table(p, N).p;
            for (std::size_t n = 1; n < N; ++n) {
                if (q[n] < q[n + 1]) {
                    if (first_ok)
                        first_detail = "fails at " + rho_label(th, rho) + " n=" + std::to_string(n);
                    first_ok = false;
                    break;
                }
            }
            if (th == 1.0)
                continue;
            // First n >= 2 where n(n−1)p_n increases, or 0.
            std::size_t rise = 0;
            for (std::size_t n = 2; n < N && !rise; ++n) {
                double x = static_cast<double>(n) * static_cast<double>(n - 1) * q[n];
                double y = static_cast<double>(n + 1) * static_cast<double>(n) * q[n + 1];
                if (y > x * (1.0 + 1e-12))
                    rise = n;
            }
            double bound = th / (1.0 + 2.0 * th);
            if (1.0 - rho <= bound) {
                ++certified;
                if (rise && second_ok) {
                    second_ok = false;
                    second_detail = "fails at " + rho_label(th, rho) + " n=" + std::to_string(rise);
                }
            }
            if (rho <= bound) {
                ++literal_cases;
                literal_violations += rise != 0;
            }
        }
    }
    if (second_ok)
        second_detail = std::to_string(certified) + " grid points with b/(a+b) <= theta/(1+2 theta)";
    rep.params = {{"theta", kThetaGrid}, {"a", 1.0}, {"b", "(1-rho)/rho"}, {"n_max", N}};
    rep.estimate("grid points with the literal a/(a+b) condition", static_cast<double>(literal_cases));
    rep.estimate("of which n(n-1)p_n rises somewhere", static_cast<double>(literal_violations));
    rep.verdict("pmf nonincreasing", "p_n >= p_{n+1} for 1 <= n < 10^4", first_ok, first_detail);
    rep.verdict("second-order monotonicity", "n(n-1)p_n nonincreasing for 2 <= n < 10^4 (relative slack 1e-12)",
                second_ok && certified > 0, second_detail);
    return rep;
}

SimReport check_tail_constant(const SuiteOptions& o)
{
    SimReport rep = start("tail-constant", o);
    const double th = 0.5;
    PfParams p = pf(th, 1.0, 3.0);
    std::vector<double> q = pmf_table(p, 10000).p;
    const double c = 4.5 / std::sqrt(std::numbers::pi);
    std::vector<double> errs;
    for (std::size_t n : {1000u, 3000u, 10000u}) {
        double e = std::abs(q[n] * std::pow(static_cast<double>(n), 2.0 + th) / c - 1.0);
        errs.push_back(e);
        rep.estimate("|p_n n^{2+theta}/c - 1| at n=" + std::to_string(n), e);
    }
    TailAsymptotics ta = tail_asymptotics(p);
    rep.estimate("library tail constant", ta.constant.value_or(NAN));
    double ratio = q[10000] / q[5000];
    double target = std::pow(2.0, -2.5);
    double rel = std::abs(ratio / target - 1.0);
    rep.estimate("p_{2n}/p_n at n=5000", ratio);
    rep.params = {{"law", p.describe()}, {"c", c}};
    bool dec = errs[0] > errs[1] && errs[1] > errs[2];
    rep.verdict("tail constant", "error decreasing along n = 1e3, 3e3, 1e4 and < 0.1 at 1e4", dec && errs[2] < 0.1,
                "errors " + format_g(errs[0], 3) + ", " + format_g(errs[1], 3) + ", " + format_g(errs[2], 3));
    rep.verdict("tail ratio", "|p_{2n}/p_n / 2^{-2.5} - 1| < 0.02 at n = 5000", rel < 0.02,
                "relative error " + format_g(rel, 3));
    rep.verdict("library tail constant", "matches 4.5/sqrt(pi) to 1e-12",
                ta.constant && std::abs(*ta.constant / c - 1.0) < 1e-12, format_g(ta.constant.value_or(NAN), 12));
    return rep;
}

SimReport check_conjugation(const SuiteOptions& o)
{
    SimReport rep = start("conjugation", o);
    Engine eng = make_stream(o.seed, {4});
    std::vector<double> grid = open_unit_grid(200);
    double worst_sib = 0.0, worst_gsib = 0.0;
    nlohmann::json draws = nlohmann::json::array();
    for (int k = 0; k < 20; ++k) {
        double th = 0.05 + 0.95 * uniform01(eng);
        double a = 0.1 + 2.9 * uniform01(eng);
        double b = std::max(1.0 - a, 0.0) + 0.05 + 2.95 * uniform01(eng);
        double q = 0.95 * uniform01(eng);
        worst_sib = std::max(worst_sib, conjugation_check(th, a, b, grid));
        worst_gsib = std::max(worst_gsib, conjugation_check(th, a, b, grid, q));
        draws.push_back({th, a, b, q});
    }
    rep.params = {{"draws", draws}, {"grid_points", grid.size()}};
    rep.estimate("max Sibuya residual", worst_sib);
    rep.estimate("max generalized Sibuya residual", worst_gsib);
    rep.verdict("Sibuya conjugation", "sup-grid residual < 1e-12 over 20 draws", worst_sib < 1e-12,
                format_g(worst_sib, 3));
    rep.verdict("generalized Sibuya conjugation", "sup-grid residual < 1e-12 over 20 draws", worst_gsib < 1e-12,
                format_g(worst_gsib, 3));
    return rep;
}

SimReport check_gw_extinction(const SuiteOptions& o)
{
    SimReport rep = start("gw-extinction", o);
    const std::vector<PfParams> grid = {pf(0.5, 2, 1),     pf(1, 1.5, 0.5), pf(1, 1, 1),
                                        pf(0.5, 1, 2),     pf(1, 0.5, 1),   pf(0.5, 0.9, 0.4)};
    for (std::size_t k = 0; k < grid.size(); ++k) {
        GwFixedModel m = gw_model(grid[k]);
        SimPlan plan{"gw-fixed", scaled(100000, o), 20, sub_seed(o.seed, 5, k), o.width};
        absorb(rep, run_plan(plan, m), to_string(m.regime()) + " " + grid[k].describe());
    }
    GwFixedModel m = gw_model(pf(1, 0.5, 1));
    SimPlan plan{"gw-fixed", scaled(100000, o), 50, sub_seed(o.seed, 5, 100), o.width};
    SimReport ext = run_plan(plan, m);
    double f = NAN;
    for (const auto& e : ext.estimates)
        if (e.name == "extinction by 50")
            f = e.value;
    absorb(rep, ext, "theta=1 a=0.5 b=1, 50 generations");
    rep.verdict("extinction probability 0.5", "|frequency - 0.5| <= 0.005", std::abs(f - 0.5) <= 0.005,
                "frequency " + format_g(f));
    return rep;
}

SimReport check_martingale_limit(const SuiteOptions& o)
{
    SimReport rep = start("martingale-limit", o);
    const std::size_t n = 20;
    std::vector<double> abel_grid;
    for (double u = 0.01; u < 200.0; u *= 1.5)
        abel_grid.push_back(u);
    for (double th : {0.5, 1.0}) {
        const double a = 0.5, b = 1.0;
        GwFixedModel m = gw_model(pf(th, a, b));
        CpfParams lim = martingale_limit_law(m);
        std::string label = "theta=" + format_g(th);
        CpfParams stated = cpf(th, 1.0, b / (1.0 - a));
        rep.verdict("limit law parameters [" + label + "]", "CPF(theta, 1, b/(1-a)) to 1e-12",
                    std::abs(lim.alpha - 1.0) < 1e-12 && std::abs(lim.beta / stated.beta - 1.0) < 1e-12,
                    lim.describe());
        double abel = abel_residual(m, abel_grid);
        rep.estimate("Abel residual [" + label + "]", abel);
        rep.verdict("Abel equation [" + label + "]", "residual < 1e-12", abel < 1e-12, format_g(abel, 3));

        // E(e^{−u W_20} | Z_k = z) = f_{20−k}(e^{−u m^{−20}})^z once a path stops at generation k.
        const double scale20 = std::pow(a, static_cast<double>(n) / th);
        std::vector<std::array<double, 5>> tail_pgf(n + 1);
        for (std::size_t j = 0; j <= n; ++j)
            for (std::size_t u = 0; u < kUGrid.size(); ++u)
                tail_pgf[j][u] = generation_law(m, j).pgf(std::exp(-kUGrid[u] * scale20));
        SimPlan plan{"w20", scaled(100000, o), n, sub_seed(o.seed, 6, th == 1.0), o.width};
        PathOptions opt;
        opt.stop_at = 64;
        auto rows = run_replicates(plan, [&](std::uint64_t, Engine& eng) {
            GenerationPath p = simulate_generation_path(m, n, eng, opt);
            if (p.exploded)
                throw NonConvergent("population cap reached");
            std::size_t k = p.z.size() - 1;
            double z = static_cast<double>(p.z.back());
            std::array<double, 5> v;
            for (std::size_t u = 0; u < kUGrid.size(); ++u)
                v[u] = std::pow(tail_pgf[n - k][u], z);
            return v;
        });
        std::vector<std::vector<double>> values(kUGrid.size(), std::vector<double>(rows.size()));
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (std::size_t u = 0; u < kUGrid.size(); ++u)
                values[u][r] = rows[r][u];
        TransformMatch tm = transform_match_values(values, [&](double u) { return cpf_laplace(lim, u); },
                                                   std::span<const double>(kUGrid.data(), kUGrid.size()), 3.0);
        double bias = 0.0, worst = 0.0;
        for (const auto& pt : tm.points) {
            bias = std::max(bias, std::abs(normalized_transform(m, n, pt.u) - pt.target));
            worst = std::max(worst, std::abs(pt.z));
            rep.estimate("E exp(-u W_20) at u=" + format_g(pt.u) + " [" + label + "]", pt.empirical, pt.se);
        }
        rep.estimate("max |exact W_20 transform - limit| [" + label + "]", bias);
        rep.verdict("W_20 Laplace transform [" + label + "]", "within 3 SE of CPF(theta,1,b/(1-a)) on the u-grid",
                    tm.passed, "max |z| " + format_g(worst, 3));
        rep.params[label] = {{"law", m.offspring.describe()}, {"replicates", plan.replicates}, {"stop_at", 64}};
    }
    rep.params["u_grid"] = kUGrid;
    return rep;
}

SimReport check_limit_laws(const SuiteOptions& o)
{
    SimReport rep = start("limit-laws", o);
    GwFixedModel sub = gw_model(pf(1, 2, 1));
    PmfTable yaglom = pmf_table(subcritical_limits(sub).yaglom, 400);
    double prev = 1.0, tv50 = 1.0;
    bool mono = true;
    for (unsigned n = 1; n <= 50; ++n) {
        double tv = total_variation(pmf_table(conditional_law(sub, n), 400), yaglom).upper;
        mono = mono && tv <= prev + 1e-15;
        prev = tv;
        tv50 = tv;
    }
    rep.estimate("TV(conditional law, Yaglom) at n=50", tv50);
    rep.verdict("Yaglom limit", "TV < 1e-3 by n = 50, nonincreasing", mono && tv50 < 1e-3, format_g(tv50, 3));

    double worst = 0.0;
    for (auto [th, b] : {std::pair{1.0, 1.0}, {0.5, 2.0}, {0.3, 0.7}, {0.8, 5.0}}) {
        GwFixedModel c = gw_model(pf(th, 1, b));
        for (std::uint64_t n : {1ull, 10ull, 100ull, 1000ull, 10000ull, 100000ull}) {
            double exact = std::pow(1.0 + b * static_cast<double>(n), -1.0 / th);
            worst = std::max(worst, std::abs(survival_probability(c, n) / exact - 1.0));
        }
    }
    rep.estimate("max relative deviation of P(Z_n > 0)", worst);
    rep.verdict("critical survival identity", "P(Z_n>0) = (1+bn)^{-1/theta} to 1e-14 relative", worst < 1e-14,
                format_g(worst, 3));

    for (auto [th, b] : {std::pair{1.0, 1.0}, {0.5, 2.0}}) {
        GwFixedModel c = gw_model(pf(th, 1, b));
        CpfParams lim = critical_limits(c).limit;
        bool ok = true;
        double last = 0.0;
        for (double u : kUGrid) {
            double pr = 1.0;
            for (std::uint64_t n : {10ull, 100ull, 1000ull, 10000ull}) {
                double d = std::abs(critical_conditional_transform(c, n, u) - cpf_laplace(lim, u));
                ok = ok && d < pr;
                pr = d;
            }
            last = std::max(last, pr);
        }
        std::string label = "theta=" + format_g(th) + " b=" + format_g(b);
        rep.estimate("conditional transform residual at n=1e4 [" + label + "]", last);
        rep.verdict("critical conditional limit [" + label + "]",
                    "residual decreasing over n = 10..1e4 and < 1e-3 on the u-grid", ok && last < 1e-3,
                    format_g(last, 3));
    }
    return rep;
}

SimReport check_cpf_sampler(const SuiteOptions& o)
{
    SimReport rep = start("cpf-sampler", o);
    const std::uint64_t block = 1000;
    const std::vector<CpfParams> laws = {cpf_plus(0.5, 1.0), cpf(0.7, 1.0, 2.0), cpf(1.0, 2.0, 3.0)};
    for (std::size_t k = 0; k < laws.size(); ++k) {
        const CpfParams law = laws[k];
        SimPlan plan{"cpf", scaled(1000, o), 0, sub_seed(o.seed, 7, k), o.width};
        auto blocks = run_replicates(plan, [&](std::uint64_t, Engine& eng) {
            std::vector<double> x(block);
            for (auto& v : x)
                v = cpf_sample(law, eng);
            return x;
        });
        std::vector<double> all;
        all.reserve(blocks.size() * block);
        for (const auto& b : blocks)
            all.insert(all.end(), b.begin(), b.end());
        TransformMatch tm = transform_match(all, [&](double u) { return cpf_laplace(law, u); },
                                            std::span<const double>(kUGrid.data(), kUGrid.size()));
        double worst = 0.0;
        for (const auto& pt : tm.points)
            worst = std::max(worst, std::abs(pt.z));
        rep.verdict("sampler transform [" + law.describe() + "]", "Bonferroni band on the u-grid", tm.passed,
                    std::to_string(all.size()) + " draws, max |z| " + format_g(worst, 3));
    }
    return rep;
}

SimReport check_duality(const SuiteOptions& o)
{
    SimReport rep = start("duality", o);
    absorb(rep, duality_test(two_point(1, 0.5, 2), 20, scaled(100000, o), sub_seed(o.seed, 8, 0), o.width),
           "theta=1 A in {0.5,2} B=1 n=20");
    absorb(rep, duality_test(two_point(0.5, 0.5, 0.8), 10, scaled(100000, o), sub_seed(o.seed, 8, 1), o.width),
           "theta=0.5 A in {0.5,0.8} B=1 n=10");
    return rep;
}

SimReport check_re_supercritical(const SuiteOptions& o)
{
    SimReport rep = start("gw-re-super", o);
    ReBudget b;
    b.environments = scaled(1000, o);
    b.paths = scaled(1000, o);
    b.horizon = 10;
    b.width = o.width;
    for (double th : {1.0, 0.5})
        absorb(rep, verify_supercritical_re(two_point(th, 0.5, 0.8), b, sub_seed(o.seed, 9, th == 1.0)),
               "theta=" + format_g(th) + " A in {0.5,0.8} B=1");
    return rep;
}

SimReport check_re_subcritical(const SuiteOptions& o)
{
    SimReport rep = start("gw-re-sub", o);
    ReBudget b;
    b.environments = scaled(1000, o);
    b.paths = scaled(1000, o);
    b.horizon = 5;
    b.width = o.width;
    absorb(rep, verify_subcritical_re(EnvSpec::discrete(1, {{0.8, 0.5, 0.5}, {2.5, 1.0, 0.5}}), b,
                                      sub_seed(o.seed, 10, 0)),
           "theta=1 (A,B) in {(0.8,0.5),(2.5,1)}");
    b.environments = scaled(100, o);
    absorb(rep, verify_subcritical_re(two_point(0.7, 3, 5), b, sub_seed(o.seed, 10, 1)),
           "theta=0.7 A in {3,5} B=1");
    return rep;
}

SimReport check_re_critical(const SuiteOptions& o)
{
    SimReport rep = start("gw-re-critical", o);
    ReBudget b;
    b.environments = scaled(300, o);
    b.horizon = 10000;
    b.width = o.width;
    for (double th : {1.0, 0.5})
        absorb(rep, verify_critical_re(two_point(th, 0.5, 2), b, sub_seed(o.seed, 11, th == 1.0)),
               "theta=" + format_g(th) + " A in {0.5,2} B=1");
    b.environments = 3;
    absorb(rep, verify_critical_re(EnvSpec::constant(0.5, 1, 2), b, sub_seed(o.seed, 11, 2)),
           "strongly critical theta=0.5 B=2");
    return rep;
}

SimReport check_decomposition(const SuiteOptions& o)
{
    SimReport rep = start("decomposition", o);
    double worst = 0.0;
    for (const PfParams& p : {pf(1, 0.5, 1), pf(0.5, 0.6, 0.9), pf(0.2, 0.3, 2.5), pf(0.75, 0.4, 0.8)}) {
        DecompositionReport d = decompose_supercritical(gw_model(p));
        worst = std::max({worst, d.g_residual, d.h_residual});
    }
    rep.estimate("max fixed-environment pgf residual", worst);
    rep.verdict("supercritical decomposition", "pgf identities to 1e-12", worst < 1e-12, format_g(worst, 3));

    Engine eng = make_stream(o.seed, {12});
    std::vector<EnvStep> steps;
    ReDecomposition c = decompose_re(EnvSpec::constant(0.5, 0.4, 1.2), steps, 10, 1e-13, eng);
    DecompositionReport fixed = decompose_supercritical(gw_model(pf(0.5, 0.4, 1.2)));
    double dev = 0.0;
    for (const auto& st : c.steps)
        dev = std::max({dev, std::abs(st.q - fixed.q), std::abs(st.a1 - fixed.sub_part.a()),
                        std::abs(st.b1 - fixed.sub_part.b()), std::abs(st.super_part.a() - fixed.super_part.a())});
    rep.verdict("constant environment reduces to the fixed case", "parameters agree to 1e-12", dev < 1e-12,
                format_g(dev, 3));

    for (double tol : {1e-8, 1e-11}) {
        std::vector<EnvStep> path;
        ReDecomposition r = decompose_re(two_point(0.6, 0.5, 0.8, 0.9), path, 25, tol, eng);
        double remark = 0.0;
        for (const auto& st : r.steps)
            remark = std::max(remark, st.remark_residual);
        std::string label = "tol=" + format_g(tol);
        rep.estimate("max residual [" + label + "]", r.max_residual);
        rep.verdict("random-environment decomposition [" + label + "]",
                    "residual < 10 x truncation tolerance, exact truncation bound",
                    !r.heuristic && r.max_residual < 10 * tol, format_g(r.max_residual, 3));
        rep.verdict("representation identity [" + label + "]", "residual < 1e-13", remark < 1e-13,
                    format_g(remark, 3));
    }
    rep.params = {{"fixed", {"PF(1,0.5,1)", "PF(0.5,0.6,0.9)", "PF(0.2,0.3,2.5)", "PF(0.75,0.4,0.8)"}},
                  {"random", two_point(0.6, 0.5, 0.8, 0.9).to_json()},
                  {"horizon", 25}};
    return rep;
}

SimReport check_mbp(const SuiteOptions& o)
{
    SimReport rep = start("mbp", o);
    const std::vector<MbpConfig> configs = {mbp_config(0.5, 1, 0),   mbp_config(0.5, 1, 0.5), mbp_config(0.3, 1, 0.8),
                                            mbp_config(0.8, 0.5, 2), mbp_config(0.6, 1, 0.6), mbp_config(1.0, 1.3, 0.4)};
    std::vector<double> grid = closed_unit_grid(40);
    double semi = 0.0, gen = 0.0, forms = 0.0, params = 0.0, tail = 0.0;
    for (const MbpConfig& c : configs) {
        for (auto [t, u] : {std::pair{0.8, 1.9}, {0.1, 0.3}, {2.0, 3.0}}) {
            semi = std::max(semi, mbp_semigroup_residual(c, grid, t, u));
            PfParams sum = mbp_marginal(c, t + u);
            PfParams comp = compose_params(mbp_marginal(c, t), mbp_marginal(c, u));
            params = std::max({params, std::abs(comp.a() / sum.a() - 1.0), std::abs(comp.b() / sum.b() - 1.0)});
        }
        gen = std::max(gen, mbp_generator_residual(c, grid));
        for (double t : {0.1, 1.0, 3.0}) {
            PfParams law = mbp_marginal(c, t);
            for (double s : grid) {
                double x = mbp_conjugated_pgf(c, s, t);
                forms = std::max({forms, std::abs(x - mbp_closed_form_pgf(c, s, t)), std::abs(x - pgf_eval(law, s))});
            }
        }
        if (c.theta < 1.0) {
            MbpOffspringLaw f(c);
            double q = 1.0 - std::pow(1.0 + c.theta, -1.0 / (1.0 - c.theta));
            PmfTable g = pmf_table(gsib(c.theta, q), 200);
            for (std::size_t n = 0; n <= 200; ++n)
                tail = std::max(tail, std::abs(f.tail(n) / c.m - g.p[n]));
        }
    }
    rep.verdict("semigroup", "sup |F(s,t+u) - F(F(s,t),u)| < 1e-12", semi < 1e-12, format_g(semi, 3));
    rep.verdict("marginal parameter semigroup", "compose_params identity to 1e-12 relative", params < 1e-12,
                format_g(params, 3));
    rep.verdict("generator", "relative residual of d/dt F(s,0+) = nu(f(s)-s) < 1e-6", gen < 1e-6, format_g(gen, 3));
    rep.verdict("closed forms", "conjugation, closed form and marginal pgf agree to 1e-12", forms < 1e-12,
                format_g(forms, 3));
    rep.verdict("offspring tail measure", "generalized Sibuya pmf to 1e-12", tail < 1e-12, format_g(tail, 3));

    SimPlan plan{"mbp", scaled(100000, o), 0, sub_seed(o.seed, 13, 0), o.width};
    absorb(rep, run_plan(plan, mbp_config(0.5, 1, 0.5), 1.0), "theta=0.5 lambda=1 mu=0.5 t=1");
    MbpConfig yule = mbp_config(0.5, 1, 0);
    plan.master_seed = sub_seed(o.seed, 13, 1);
    absorb(rep, run_plan(plan, yule, 1.0), "Yule theta=0.5 lambda=1 t=1");
    PfParams m = mbp_marginal(yule, 1.0);
    PfParams stated = pf_plus(0.5, std::exp(-1.0));
    rep.verdict("Yule marginal", "PF_+(theta, e^{-lambda t}) to 1e-15",
                std::abs(m.a() - stated.a()) < 1e-15 && std::abs(m.b() - stated.b()) < 1e-15, m.describe());
    return rep;
}

const std::vector<std::string>& suite_names()
{
    static const std::vector<std::string> names = {"pmf-dual",  "tail",           "conjugation",
                                                   "gw-fixed",  "cpf",            "gw-re-super",
                                                   "gw-re-sub", "gw-re-critical", "decomposition",
                                                   "mbp"};
    return names;
}

SimReport run_suite(const std::string& name, const SuiteOptions& options)
{
    using Check = SimReport (*)(const SuiteOptions&);
    static const std::map<std::string, std::vector<Check>> parts = {
        {"pmf-dual", {check_pmf_dual}},
        {"tail", {check_tail_monotonicity, check_tail_constant}},
        {"conjugation", {check_conjugation}},
        {"gw-fixed", {check_gw_extinction, check_limit_laws}},
        {"cpf", {check_cpf_sampler, check_martingale_limit}},
        {"gw-re-super", {check_duality, check_re_supercritical}},
        {"gw-re-sub", {check_re_subcritical}},
        {"gw-re-critical", {check_re_critical}},
        {"decomposition", {check_decomposition}},
        {"mbp", {check_mbp}},
    };
    auto it = parts.find(name);
    if (it == parts.end())
        throw UnknownSuite("unknown suite: " + name);
    if (!(options.scale > 0.0 && std::isfinite(options.scale)))
        throw ConstraintViolation("budget scale > 0");
    auto t0 = std::chrono::steady_clock::now();
    SimReport rep;
    rep.experiment = name;
    rep.seed = options.seed;
    rep.params["scale"] = options.scale;
    for (Check c : it->second)
        rep.merge(c(options));
    rep.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rep.width = resolve_width(options.width);
    return rep;
}

} // namespace pfbranch
