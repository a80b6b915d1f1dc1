#include "pfbranch/errors.hpp"
#include "pfbranch/gwfixed.hpp"
#include "pfbranch/gwrandenv.hpp"
#include "pfbranch/pgf.hpp"
#include "pfbranch/pmf.hpp"
#include "pfbranch/stats.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace pfbranch;
using Catch::Approx;

namespace {

EnvSpec two_point(double theta, double a1, double a2, double b = 1.0)
{
    return EnvSpec::discrete(theta, {{a1, b, 0.5}, {a2, b, 0.5}});
}

} // namespace

TEST_CASE("environment specs", "[gwre]")
{
    auto j = nlohmann::json::parse(R"({"theta": 0.5, "discrete": [{"A": 0.5, "B": 1, "p": 0.25},
                                                                  {"A": 2, "B": 0.5, "p": 0.75}]})");
    EnvSpec s = EnvSpec::from_json(j);
    CHECK(s.theta() == 0.5);
    REQUIRE(s.atoms().size() == 2);
    CHECK(s.to_json() == j);
    CHECK(*s.bounds().a_max == 2.0);
    CHECK(EnvSpec::from_json(j, 0.7).theta() == 0.7);

    auto fam = nlohmann::json::parse(
        R"({"theta": 1, "family": "uniform", "params": {"a_lo": 0.3, "a_hi": 0.6, "b_lo": 0.5, "b_hi": 1}})");
    EnvSpec u = EnvSpec::from_json(fam);
    Engine eng = make_stream(1, {});
    for (int i = 0; i < 1000; ++i) {
        EnvStep e = u.draw(eng);
        CHECK(e.a + e.b >= 1.0);
        CHECK(e.a <= 0.6);
    }
    CHECK(u.to_json() == fam);

    CHECK_THROWS_AS(EnvSpec::discrete(1, {{0.3, 0.5, 1.0}}), ConstraintViolation);
    CHECK_THROWS_AS(EnvSpec::discrete(1, {{0.5, 1, 0.3}, {2, 1, 0.3}}), ConstraintViolation);
    CHECK_THROWS_AS(EnvSpec::constant(1.5, 1, 1), ConstraintViolation);
    CHECK_THROWS_AS(EnvSpec::from_json(nlohmann::json::parse(R"({"theta": 1, "family": "cauchy"})")),
                    ConstraintViolation);
    CHECK_THROWS_AS(EnvSpec::from_json(nlohmann::json::parse(R"({"discrete": []})")), ConstraintViolation);
    CHECK_THROWS_AS(EnvSpec::from_json(nlohmann::json::parse(
                        R"({"theta": 1, "family": "lognormal", "params": {"mu": 0}})")),
                    ConstraintViolation);

    EnvSpec bad = EnvSpec::custom(1, [](Engine&) { return EnvStep{0.2, 0.2}; }, "bad");
    CHECK_THROWS_AS(bad.draw(eng), ConstraintViolation);
}

TEST_CASE("path iterates", "[gwre]")
{
    Engine eng = make_stream(2, {});
    PathIterates c = draw_environment(EnvSpec::constant(0.5, 0.25, 1), 30, eng);
    GwFixedModel m = gw_model(pf(0.5, 0.25, 1));
    for (std::size_t n = 1; n <= 30; ++n) {
        CHECK(c.pi(n) == Approx(std::pow(0.25, n)).epsilon(1e-14));
        CHECK(c.R(n) == Approx(generation_law(m, n).params().b()).epsilon(1e-14));
        CHECK(c.S(n) == Approx(n * std::log(4.0)).epsilon(1e-14));
    }

    PathIterates p = draw_environment(two_point(0.7, 0.5, 2.0), 200, eng);
    for (std::size_t k = 1; k <= 200; ++k) {
        EnvStep e = p.steps()[k - 1];
        CHECK(p.log_pi(k) == Approx(p.log_pi(k - 1) + std::log(e.a)).margin(1e-12));
        CHECK(p.R(k) == Approx(p.R(k - 1) + p.pi(k - 1) * e.b).epsilon(1e-13));
        CHECK(p.R_dual(k) == Approx(p.R_dual(k - 1) + e.b / p.pi(k)).epsilon(1e-13));
        CHECK(p.R(k) >= p.R(k - 1));
        CHECK(p.R_over_pi(k) == Approx(p.R(k) / p.pi(k)).epsilon(1e-12));
    }
}

TEST_CASE("quenched laws", "[gwre]")
{
    PathIterates p(0.6, {{0.5, 1.0}, {2.0, 0.3}, {0.8, 0.7}});
    PfParams f1 = pf(0.6, 0.5, 1.0), f2 = pf(0.6, 2.0, 0.3), f3 = pf(0.6, 0.8, 0.7);
    CHECK(quenched_generation_law(p, 1) == f1);
    CHECK(quenched_generation_law(p, 1, true) == f1);
    PfParams fwd = compose_params(f1, compose_params(f2, f3));
    PfParams bwd = compose_params(f3, compose_params(f2, f1));
    PfParams q3 = quenched_generation_law(p, 3), r3 = quenched_generation_law(p, 3, true);
    CHECK(q3.a() == Approx(fwd.a()).epsilon(1e-15));
    CHECK(q3.b() == Approx(fwd.b()).epsilon(1e-15));
    CHECK(r3.a() == Approx(bwd.a()).epsilon(1e-15));
    CHECK(r3.b() == Approx(bwd.b()).epsilon(1e-14));
    CHECK_THROWS_AS(quenched_generation_law(p, 4), ConstraintViolation);

    PathIterates c(0.4, std::vector<EnvStep>(8, {0.7, 0.6}));
    CHECK(quenched_generation_law(c, 8).b() == Approx(quenched_generation_law(c, 8, true).b()).epsilon(1e-14));

    CHECK(quenched_extinction(p, 1) == Approx(pgf_eval(f1, 0.0)).epsilon(1e-15));
    CHECK(quenched_extinction(p, 3) == Approx(pgf_eval(fwd, 0.0)).epsilon(1e-14));

    PathIterates half(1.0, std::vector<EnvStep>(200, {0.5, 1.0}));
    CHECK(quenched_extinction(half, 200) == Approx(0.5).epsilon(1e-15));

    Engine eng = make_stream(3, {});
    for (int rep = 0; rep < 20; ++rep) {
        PathIterates w = draw_environment(two_point(0.5, 0.5, 1.6, 0.8), 100, eng);
        for (std::size_t n = 1; n < 100; ++n)
            REQUIRE(quenched_extinction(w, n) <= quenched_extinction(w, n + 1));
    }
}

TEST_CASE("classification", "[gwre]")
{
    CHECK(classify(EnvSpec::constant(1, 1, 2)).verdict == EnvVerdict::StronglyCritical);
    ClassificationReport c = classify(two_point(1, 0.5, 2));
    CHECK(c.verdict == EnvVerdict::Critical);
    CHECK(c.e_log_a == 0.0);
    CHECK(c.gm->trichotomy == "C3");

    ClassificationReport s = classify(EnvSpec::constant(1, 0.5, 1));
    CHECK(s.verdict == EnvVerdict::Supercritical);
    CHECK(s.e_log_a == Approx(-std::log(2.0)));
    CHECK(s.gm->trichotomy == "C1");
    CHECK(s.gm->i_minus == 1.0);

    EnvSpec sub = EnvSpec::discrete(1, {{0.8, 0.5, 0.5}, {2.5, 3.0, 0.5}});
    ClassificationReport b = classify(sub);
    CHECK(b.verdict == EnvVerdict::Subcritical);
    CHECK(b.gm->trichotomy == "C2");
    // B/A = 0.625 (below 1) and 1.2: I_+ = 0.5 log 1.2 / J^+(log 1.2), J^+(x) = 0.5 min(x, log 2.5).
    CHECK(b.gm->i_plus == Approx(1.0).epsilon(1e-14));
    CHECK(gm_j_minus(sub, 0.1) == Approx(0.5 * 0.1));
    CHECK(gm_j_minus(sub, 1.0) == Approx(-0.5 * std::log(0.8)));
    CHECK(gm_j_plus(sub, 5.0) == Approx(0.5 * std::log(2.5)));

    EnvSpec ln = EnvSpec::family(1, "lognormal", {{"mu", 0.3}, {"sigma", 1}, {"b_shape", 2}, {"b_scale", 1}});
    ClassificationReport l = classify(ln, 100000, 4);
    CHECK(l.verdict == EnvVerdict::Subcritical);
    CHECK(l.e_log_a == Approx(0.3).margin(4 * l.ci_half_width));
    CHECK_FALSE(l.gm);
    EnvSpec flat = EnvSpec::family(1, "lognormal", {{"mu", 0}, {"sigma", 1}, {"b_shape", 2}, {"b_scale", 1}});
    CHECK(classify(flat, 10000, 5).verdict == EnvVerdict::Inconclusive);
}

TEST_CASE("perpetuities", "[gwre]")
{
    Engine eng = make_stream(6, {});
    PerpetuityEstimate e = estimate_perpetuity(EnvSpec::constant(1, 0.5, 1), 1e-12, eng);
    CHECK(e.value == Approx(2.0).epsilon(2e-12));
    CHECK_FALSE(e.heuristic);
    CHECK(e.residual_bound <= 1e-12 * e.value);
    PerpetuityEstimate d = estimate_perpetuity(EnvSpec::constant(1, 2, 1), 1e-12, eng, true);
    CHECK(d.value == Approx(1.0).epsilon(2e-12));
    CHECK_THROWS_AS(estimate_perpetuity(EnvSpec::constant(1, 2, 1), 1e-9, eng), NonConvergent);
    CHECK_THROWS_AS(estimate_perpetuity(two_point(1, 0.5, 2), 1e-9, eng), NonConvergent);

    EnvSpec env = two_point(1, 0.5, 1.5, 0.6);
    REQUIRE(classify(env).verdict == EnvVerdict::Supercritical);
    const int N = 100000;
    std::vector<double> r(N), fixed(N);
    for (int i = 0; i < N; ++i) {
        PerpetuityEstimate x = estimate_perpetuity(env, 1e-10, eng);
        CHECK(x.heuristic);
        REQUIRE(x.value >= 1.0);
        r[i] = x.value;
        EnvStep s = env.draw(eng);
        fixed[i] = s.b + s.a * estimate_perpetuity(env, 1e-10, eng).value;
    }
    TwoSampleResult ks = ks_two_sample(r, fixed);
    INFO("p = " << ks.p_value);
    CHECK_FALSE(ks.rejected);
}

TEST_CASE("shifted perpetuities", "[gwre]")
{
    EnvSpec env = two_point(0.5, 0.5, 0.7);
    Engine eng = make_stream(7, {});
    std::vector<EnvStep> steps;
    ShiftedPerpetuities sp = shifted_perpetuities(env, steps, 20, 1e-13, eng);
    CHECK_FALSE(sp.heuristic);
    CHECK(steps.size() == sp.path_length);
    for (std::size_t j = 1; j <= 20; ++j)
        CHECK(sp.r[j] == steps[j - 1].b + steps[j - 1].a * sp.r[j + 1]);
    PathIterates it(0.5, steps);
    CHECK(sp.r[1] == Approx(it.R(it.n())).epsilon(1e-12));

    std::vector<EnvStep> none;
    CHECK_THROWS_AS(shifted_perpetuities(EnvSpec::constant(1, 2, 1), none, 5, 1e-10, eng), NotSupercritical);
}

TEST_CASE("duality in law", "[gwre]")
{
    SimReport r = duality_test(two_point(1, 0.5, 2), 20, 100000, 8, 1);
    INFO(r.to_json().dump(1));
    CHECK(r.all_passed());
    SimReport s = duality_test(two_point(0.5, 0.6, 1.3, 0.7), 10, 20000, 9, 2);
    CHECK(s.all_passed());
}

TEST_CASE("quenched pmf and reversal", "[gwre]")
{
    std::vector<EnvStep> steps = {{0.6, 0.8}, {1.5, 0.4}, {0.9, 0.5}, {0.7, 1.0}};
    PathIterates it(0.6, steps);
    PmfTable law = pmf_table(quenched_generation_law(it, 4), 2000);
    PmfTable rev = pmf_table(quenched_generation_law(it, 4, true), 2000);
    Engine eng = make_stream(10, {});
    const int N = 100000;
    std::vector<std::uint64_t> zf(N), zr(N);
    QuenchedPathOptions ro;
    ro.reversed = true;
    for (int i = 0; i < N; ++i) {
        zf[i] = simulate_quenched_path(0.6, steps, 4, eng).z.back();
        zr[i] = simulate_quenched_path(0.6, steps, 4, eng, ro).z.back();
    }
    GofResult g = discrete_gof(zf, law);
    INFO("forward p = " << g.p_value);
    CHECK_FALSE(g.rejected);
    GofResult h = discrete_gof(zr, rev);
    INFO("reversed p = " << h.p_value);
    CHECK_FALSE(h.rejected);

    // Annealed: fresh environment per path, forward vs reversed order.
    EnvSpec env = two_point(0.6, 0.5, 1.8, 0.7);
    std::vector<std::uint64_t> cf(41, 0), cr(41, 0);
    for (int i = 0; i < 50000; ++i) {
        std::vector<EnvStep> e = draw_steps(env, 5, eng);
        ++cf[std::min<std::uint64_t>(40, simulate_quenched_path(0.6, e, 5, eng).z.back())];
        e = draw_steps(env, 5, eng);
        ++cr[std::min<std::uint64_t>(40, simulate_quenched_path(0.6, e, 5, eng, ro).z.back())];
    }
    TwoSampleResult t = chi2_homogeneity(cf, cr);
    INFO("annealed p = " << t.p_value);
    CHECK_FALSE(t.rejected);
}

TEST_CASE("supercritical random environment", "[gwre]")
{
    ReBudget b;
    b.environments = 1000;
    b.paths = 1000;
    b.horizon = 10;
    for (double th : {1.0, 0.5}) {
        SimReport r = verify_supercritical_re(two_point(th, 0.5, 0.8), b, 11);
        INFO(r.to_json().dump(1));
        CHECK(r.all_passed());
    }
    // Constant environment: ultimate extinction 1 − R_∞^{−1/θ} with R_∞ = b/(1−a).
    b.environments = 4;
    SimReport c = verify_supercritical_re(EnvSpec::constant(1, 0.5, 1), b, 12);
    CHECK(c.all_passed());
    for (const auto& e : c.estimates)
        if (e.name == "mean quenched extinction probability")
            CHECK(e.value == Approx(0.5).epsilon(1e-12));
    CHECK_THROWS_AS(verify_supercritical_re(two_point(1, 0.5, 2), b, 1), NotSupercritical);
}

TEST_CASE("subcritical random environment", "[gwre]")
{
    ReBudget b;
    b.environments = 1000;
    b.paths = 1000;
    b.horizon = 5;
    SimReport r = verify_subcritical_re(EnvSpec::discrete(1, {{0.8, 0.5, 0.5}, {2.5, 1.0, 0.5}}), b, 13);
    INFO(r.to_json().dump(1));
    CHECK(r.all_passed());
    b.environments = 2;
    SimReport c = verify_subcritical_re(EnvSpec::constant(1, 2, 1), b, 14);
    CHECK(c.all_passed());
    SimReport h = verify_subcritical_re(two_point(0.7, 3, 5), b, 15);
    CHECK(h.all_passed());
    CHECK_THROWS_AS(verify_subcritical_re(EnvSpec::constant(1, 0.5, 1), b, 1), NotSubcritical);
}

TEST_CASE("critical random environment", "[gwre]")
{
    ReBudget b;
    b.environments = 300;
    b.horizon = 10000;
    SimReport r = verify_critical_re(two_point(1, 0.5, 2), b, 16);
    INFO(r.to_json().dump(1));
    CHECK(r.all_passed());
    SimReport h = verify_critical_re(two_point(0.5, 0.5, 2), b, 17);
    CHECK(h.all_passed());
    b.environments = 3;
    SimReport s = verify_critical_re(EnvSpec::constant(0.5, 1, 2), b, 18);
    CHECK(s.all_passed());
    CHECK_THROWS_AS(verify_critical_re(EnvSpec::constant(1, 0.5, 1), b, 1), NotCritical);
}

TEST_CASE("decomposition in random environment", "[gwre]")
{
    Engine eng = make_stream(19, {});
    std::vector<EnvStep> steps;
    EnvSpec c = EnvSpec::constant(0.5, 0.4, 1.2);
    ReDecomposition d = decompose_re(c, steps, 10, 1e-13, eng);
    DecompositionReport fixed = decompose_supercritical(gw_model(pf(0.5, 0.4, 1.2)));
    for (const auto& st : d.steps) {
        CHECK(st.q == Approx(fixed.q).epsilon(1e-12));
        CHECK(st.super_part.a() == Approx(fixed.super_part.a()).epsilon(1e-12));
        CHECK(st.a1 == Approx(fixed.sub_part.a()).epsilon(1e-12));
        CHECK(st.b1 == Approx(fixed.sub_part.b()).epsilon(1e-12));
        CHECK(st.atom == Approx(0.0).margin(1e-12));
    }

    for (double tol : {1e-8, 1e-11}) {
        EnvSpec env = two_point(0.6, 0.5, 0.8, 0.9);
        std::vector<EnvStep> path;
        ReDecomposition r = decompose_re(env, path, 25, tol, eng);
        CHECK_FALSE(r.heuristic);
        INFO("max residual " << r.max_residual);
        CHECK(r.max_residual < 10 * tol);
        for (std::size_t n = 0; n < r.steps.size(); ++n) {
            const auto& st = r.steps[n];
            CHECK(st.super_part.a() > 0.0);
            CHECK(st.super_part.a() < 1.0);
            CHECK(st.r == path[n].b + path[n].a * st.r_next);
            CHECK(st.remark_residual < 1e-13);
        }
    }
    std::vector<EnvStep> p2;
    CHECK_THROWS_AS(decompose_re(two_point(1, 0.5, 2), p2, 5, 1e-10, eng), NotSupercritical);
}
