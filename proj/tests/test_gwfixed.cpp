#include "pfbranch/errors.hpp"
#include "pfbranch/gwfixed.hpp"
#include "pfbranch/pgf.hpp"
#include "pfbranch/pmf.hpp"
#include "pfbranch/random.hpp"
#include "pfbranch/stats.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace pfbranch;
using Catch::Approx;

TEST_CASE("generation laws", "[gwfixed]")
{
    GwFixedModel m = gw_model(pf(1, 1, 1));
    CHECK(generation_law(m, 0).is_identity());
    CHECK(generation_law(m, 0).pgf(0.3) == 0.3);
    CHECK(generation_law(m, 0).prob_zero() == 0.0);
    GenerationLaw g2 = generation_law(m, 2);
    CHECK(g2.params().b() == 2.0);
    CHECK(g2.prob_zero() == Approx(2.0 / 3.0));
    GenerationLaw g3 = generation_law(gw_model(pf(0.5, 0.25, 1)), 3);
    CHECK(g3.params().a() == Approx(0.015625));
    CHECK(g3.params().b() == Approx(1.3125));
    CHECK_THROWS_AS(gw_model(validate_params(0.5, 2, 0.5, 0.5)), ConstraintViolation);
    CHECK(gw_model(pf(1, 2, 1)).regime() == Regime::Subcritical);
    CHECK(gw_model(pf(0.5, 0.5, 1)).mean() == Approx(4.0));
}

TEST_CASE("survival and extinction", "[gwfixed]")
{
    for (const PfParams& p : {pf(0.5, 0.7, 0.6), pf(1, 1, 2), pf(0.3, 1.4, 0.5)}) {
        GwFixedModel m = gw_model(p);
        for (unsigned n : {1u, 2u, 7u, 30u})
        {
            PfParams g = generation_law(m, n).params();
            CHECK(survival_probability(m, n) == Approx(std::pow(g.a() + g.b(), -1 / g.theta())).epsilon(1e-12));
        }
        GwFixedModel m3 = gw_model(p, 3);
        CHECK(extinction_by(m3, 5) == Approx(std::pow(generation_law(m, 5).prob_zero(), 3)).epsilon(1e-13));
    }
    CHECK(extinction_probability(gw_model(pf(1, 0.5, 1))) == Approx(0.5).epsilon(1e-15));
    CHECK(extinction_probability(gw_model(pf_plus(0.5, 0.4))) == 0.0);
    CHECK(extinction_probability(gw_model(pf(0.5, 1, 1))) == 1.0);
    GwFixedModel c = gw_model(pf(0.5, 1, 2));
    for (unsigned n : {1u, 10u, 1000u, 100000u})
        CHECK(survival_probability(c, n) == Approx(std::pow(1.0 + 2.0 * n, -2.0)).epsilon(1e-14));
    double s100 = 1e4 * survival_probability(c, 100);
    CHECK(std::abs(s100 / 0.25 - 1) < 2.0 / 200);
}

TEST_CASE("martingale limit", "[gwfixed]")
{
    CpfParams w = martingale_limit_law(gw_model(pf(1, 0.5, 1)));
    CHECK(w == cpf(1, 1, 2));
    CHECK(cpf_mixture_decompose(w).atom == Approx(0.5));
    std::vector<double> u{0.1, 1, 10};
    for (const PfParams& p : {pf(1, 0.5, 1), pf(0.5, 0.5, 1), pf(0.3, 0.8, 0.9), pf_plus(0.7, 0.6)}) {
        GwFixedModel m = gw_model(p);
        CHECK(abel_residual(m, u) < 1e-12);
        CHECK(cpf_mixture_decompose(martingale_limit_law(m)).atom ==
              Approx(extinction_probability(m)).margin(1e-15));
        // Exact W_n transforms approach the limit.
        double prev = 1.0;
        for (unsigned n : {5u, 10u, 20u, 40u}) {
            double d = std::abs(normalized_transform(m, n, 1.0) - cpf_laplace(martingale_limit_law(m), 1.0));
            CHECK(d <= prev);
            prev = d;
        }
        CHECK(prev < 1e-3);
    }
    CHECK_THROWS_AS(martingale_limit_law(gw_model(pf(1, 1, 1))), NotSupercritical);
}

TEST_CASE("subcritical limits", "[gwfixed]")
{
    GwFixedModel m = gw_model(pf(1, 2, 1));
    SubcriticalLimits s = subcritical_limits(m);
    CHECK(s.survival_constant == Approx(0.5));
    CHECK(s.yaglom.a() == Approx(0.5));
    CHECK(s.yaglom.b() == Approx(0.5));
    PmfTable y = pmf_table(s.yaglom, 400);
    double prev = 1.0;
    for (unsigned n = 1; n <= 50; ++n) {
        TvBounds tv = total_variation(pmf_table(conditional_law(m, n), 400), y);
        CHECK(tv.upper <= prev + 1e-15);
        prev = tv.upper;
    }
    CHECK(prev < 1e-3);
    GwFixedModel h = gw_model(pf(0.5, 2, 1));
    for (unsigned n : {10u, 40u, 80u})
        CHECK(std::pow(2.0, n / 0.5) * survival_probability(h, n) ==
              Approx(subcritical_limits(h).survival_constant).epsilon(std::max(std::pow(0.5, n) * 10, 1e-14)));
    CHECK(subcritical_limits(gw_model(pf(0.5, 2, 1e6))).survival_constant < 1e-10);
    CHECK_THROWS_AS(subcritical_limits(gw_model(pf(1, 0.5, 1))), NotSubcritical);
}

TEST_CASE("critical limits", "[gwfixed]")
{
    GwFixedModel m = gw_model(pf(0.5, 1, 2));
    CriticalLimits c = critical_limits(m);
    CHECK(c.survival_scale == Approx(0.25));
    CHECK(c.cond_mean_scale == Approx(4.0));
    CHECK(c.limit == cpf_plus(0.5, 1));
    GwFixedModel one = gw_model(pf(1, 1, 1));
    CHECK(1e6 * survival_probability(one, 1000000) == Approx(1.0).epsilon(1e-6));
    for (double u : {0.1, 0.5, 1.0, 2.0, 5.0}) {
        double prev = 1.0;
        for (unsigned n : {10u, 100u, 1000u, 10000u}) {
            double d = std::abs(critical_conditional_transform(m, n, u) - cpf_laplace(c.limit, u));
            CHECK(d < prev);
            prev = d;
        }
        CHECK(prev < 1e-3);
    }
    CHECK_THROWS_AS(critical_limits(gw_model(pf(1, 2, 1))), NotCritical);
}

TEST_CASE("supercritical decomposition", "[gwfixed]")
{
    DecompositionReport d = decompose_supercritical(gw_model(pf(1, 0.5, 1)));
    CHECK(d.q == Approx(0.5));
    CHECK(d.sub_part.gamma() == Approx(2.0));
    CHECK(d.sub_part.a() == 0.5);
    CHECK(d.sub_part.b() == Approx(0.5));
    CHECK(d.super_part == pf(1, 0.5, 0.5));
    for (const PfParams& p : {pf(1, 0.5, 1), pf(0.5, 0.6, 0.9), pf(0.2, 0.3, 2.5)}) {
        DecompositionReport r = decompose_supercritical(gw_model(p));
        CHECK(r.g_residual < 1e-12);
        CHECK(r.h_residual < 1e-12);
        CHECK(pgf_eval(r.super_part, 0.0) == 0.0);
        CHECK(moments(r.sub_part).mean < 1.0);
    }
    CHECK_THROWS_AS(decompose_supercritical(gw_model(pf_plus(0.5, 0.5))), DegenerateDecomposition);
    CHECK_THROWS_AS(decompose_supercritical(gw_model(pf(0.5, 1.5, 1))), NotSupercritical);
}

TEST_CASE("simulated paths", "[gwfixed]")
{
    GwFixedModel m = gw_model(pf(1, 1, 1));
    const int R = 100000;
    int extinct = 0;
    for (int r = 0; r < R; ++r) {
        Engine e = make_stream(41, {static_cast<std::uint64_t>(r)});
        GenerationPath p = simulate_generation_path(m, 5, e);
        REQUIRE(p.z.size() == 6);
        extinct += p.extinct();
    }
    double f = static_cast<double>(extinct) / R;
    CHECK(std::abs(f - 5.0 / 6.0) < 3 * std::sqrt(5.0 / 36.0 / R));

    GwFixedModel m3 = gw_model(pf(0.5, 0.9, 0.4), 3);
    int all = 0;
    for (int r = 0; r < 50000; ++r) {
        Engine e = make_stream(42, {static_cast<std::uint64_t>(r)});
        all += simulate_generation_path(m3, 4, e).extinct();
    }
    double q4 = extinction_by(m3, 4);
    CHECK(std::abs(all / 5e4 - q4) < 3 * std::sqrt(q4 * (1 - q4) / 5e4));

    GwFixedModel sub = gw_model(pf(0.5, 2, 1));
    int alive = 0;
    for (int r = 0; r < 100000; ++r) {
        Engine e = make_stream(43, {static_cast<std::uint64_t>(r)});
        alive += !simulate_generation_path(sub, 10, e).extinct();
    }
    double s10 = survival_probability(sub, 10);
    CHECK(std::abs(alive / 1e5 - s10) < 3 * std::sqrt(s10 * (1 - s10) / 1e5) + 1e-12);
}

TEST_CASE("generation pmf matches the iterated law", "[gwfixed]")
{
    for (const PfParams& p : {pf(0.5, 0.9, 0.4), pf(0.7, 1.2, 0.5), pf(1, 0.8, 0.6)}) {
        GwFixedModel m = gw_model(p);
        for (unsigned n : {1u, 3u, 6u}) {
            std::vector<std::uint64_t> zn;
            for (int r = 0; r < 20000; ++r) {
                Engine e = make_stream(44, {n, static_cast<std::uint64_t>(r)});
                zn.push_back(simulate_generation_path(m, n, e).z.back());
            }
            GofResult g = discrete_gof(zn, pmf_table(generation_law(m, n).params(), 4000));
            INFO(p.describe() << " n=" << n << " p=" << g.p_value);
            CHECK_FALSE(g.rejected);
            CHECK(g.tv < g.tv_threshold);
        }
    }
}

TEST_CASE("population guards", "[gwfixed]")
{
    GwFixedModel m = gw_model(pf(0.5, 0.25, 1));
    Engine e = make_stream(45, {});
    PathOptions cap;
    cap.population_cap = 1000;
    GenerationPath p = simulate_generation_path(m, 30, e, cap);
    while (p.extinct()) {
        p = simulate_generation_path(m, 30, e, cap);
    }
    CHECK(p.exploded);
    CHECK(p.z.back() == 1000);
    PathOptions stop;
    stop.stop_at = 50;
    GenerationPath s = simulate_generation_path(m, 30, e, stop);
    while (s.extinct())
        s = simulate_generation_path(m, 30, e, stop);
    CHECK(s.stopped);
    CHECK(s.z.back() >= 50);
}
