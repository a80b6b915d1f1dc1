#include "pfbranch/errors.hpp"
#include "pfbranch/pgf.hpp"
#include "pfbranch/pmf.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

using namespace pfbranch;
using Catch::Approx;

namespace {

std::vector<double> grid(double hi, int n)
{
    std::vector<double> s;
    for (int i = 0; i < n; ++i)
        s.push_back(hi * i / n);
    return s;
}

} // namespace

TEST_CASE("pgf values", "[pgf]")
{
    CHECK(pgf_eval(pf(1, 1, 1), 0.0) == 0.5);
    CHECK(pgf_eval(pf(0.5, 1, 1), 0.0) == Approx(0.75).epsilon(1e-15));
    CHECK(pgf_eval(pf(0.5, 1, 1), 1.0) == 1.0);
    CHECK(pgf_eval(validate_params(0.5, 2, 0.5, 0.5 * std::pow(1.0, -0.5)), 1.0) ==
          Approx(1.0).epsilon(1e-14));
    CHECK(pgf_eval(validate_params(-0.5, 2, 0.5, 0.5), 1.0) == Approx(1.0).epsilon(1e-14));
    CHECK(pgf_eval(gsib(0.4, 0.3), 1.0) == 1.0);
    CHECK_THROWS_AS(pgf_eval(pf(1, 1, 1), 1.5), DomainError);
    CHECK_THROWS_AS(pgf_eval(validate_params(0.5, 2, 0.5, 0.5), 2.0), DomainError);
    CHECK_THROWS_AS(pgf_eval(pf(1, 1, 1), -0.1), DomainError);
}

TEST_CASE("one_minus_pgf matches the direct complement", "[pgf]")
{
    PfParams p = pf(0.3, 0.7, 0.6);
    for (double t : {1e-4, 0.1, 0.5, 1.0})
        CHECK(one_minus_pgf(p, t) == Approx(1.0 - pgf_eval(p, 1.0 - t)).epsilon(1e-10));
    // Two-term expansion t·a^{-1/θ}(1 − b t^θ/(θa)) for tiny t.
    double t = 1e-12;
    double approx = t * std::pow(0.7, -1 / 0.3) * (1 - 0.6 * std::pow(t, 0.3) / (0.3 * 0.7));
    CHECK(one_minus_pgf(p, t) == Approx(approx).epsilon(1e-6));
    CHECK(one_minus_pgf(p, 1e-300) > 0.0);
}

TEST_CASE("h transform", "[pgf]")
{
    CHECK(h_transform(1, 1, 0) == 0.0);
    CHECK(h_transform(1, 1, 0.5) == Approx(1.0));
    CHECK(h_transform(0, 1, 0.5) == Approx(std::log(2.0)));
    CHECK_THROWS_AS(h_transform(0.5, 1, 1.0), DomainError);
    double prev = -1.0;
    for (double s : grid(0.99, 50)) {
        double h = h_transform(0.4, 1, s);
        CHECK(h > prev);
        prev = h;
    }
}

TEST_CASE("functional equation of H across cases", "[pgf]")
{
    for (const PfParams& p : {pf(0.5, 1, 1), pf(1, 0.5, 1), pf(0.3, 1.7, 0.2),
                              validate_params(0.5, 2, 0.5, 0.5), validate_params(-0.5, 2, 0.5, 0.6),
                              validate_params(0, 1, 0.4, 0.3), validate_params(0, 1.5, 0.4, 0.8)}) {
        INFO(p.describe());
        double h0 = h_transform(p.theta(), p.gamma(), pgf_eval(p, 0.0));
        for (double s : grid(std::min(1.0, p.gamma() - 1e-3), 40)) {
            double lhs = h_transform(p.theta(), p.gamma(), pgf_eval(p, s));
            double rhs = p.a() * h_transform(p.theta(), p.gamma(), s) + h0;
            CHECK(std::abs(lhs - rhs) < 1e-12 * std::max(1.0, std::abs(lhs)));
        }
    }
}

TEST_CASE("iteration", "[pgf]")
{
    PfParams it = iterate_params(pf(1, 1, 1), 2);
    CHECK(it.a() == 1.0);
    CHECK(it.b() == 2.0);
    CHECK(pgf_eval(it, 0.0) == Approx(2.0 / 3.0));
    CHECK(pgf_eval(pf(1, 1, 1), 0.5) == Approx(2.0 / 3.0));

    PfParams p = pf(0.5, 0.25, 1);
    PfParams p3 = iterate_params(p, 3);
    CHECK(p3.a() == Approx(0.015625).epsilon(1e-15));
    CHECK(p3.b() == Approx(1.3125).epsilon(1e-15));
    CHECK(iterate_params(p, 1) == p);
    CHECK_THROWS_AS(iterate_params(p, 0), ConstraintViolation);

    for (const PfParams& q : {pf(0.5, 0.25, 1), pf(0.7, 1.3, 0.4), pf(1, 1, 2), gsib(0.6, 0.2)}) {
        for (unsigned n : {2u, 5u, 9u}) {
            PfParams qn = iterate_params(q, n);
            for (double s : grid(1.0, 25)) {
                double x = s;
                for (unsigned k = 0; k < n; ++k)
                    x = pgf_eval(q, x);
                CHECK(pgf_eval(qn, s) == Approx(x).epsilon(1e-12).margin(1e-15));
            }
        }
    }
}

TEST_CASE("iteration is additive in n", "[pgf]")
{
    PfParams p = pf(0.6, 0.8, 0.5);
    for (unsigned m : {1u, 3u, 7u})
        for (unsigned n : {1u, 4u, 11u}) {
            PfParams lhs = iterate_params(p, m + n);
            PfParams rhs = compose_params(iterate_params(p, m), iterate_params(p, n));
            CHECK(lhs.a() == Approx(rhs.a()).epsilon(1e-14));
            CHECK(lhs.b() == Approx(rhs.b()).epsilon(1e-14));
        }
}

TEST_CASE("iteration guards over- and underflow", "[pgf]")
{
    CHECK_THROWS_AS(iterate_params(pf(0.5, 0.5, 1), 5000), std::underflow_error);
    CHECK_THROWS_AS(iterate_params(pf(0.5, 2, 1), 5000), std::overflow_error);
    PfParams big = iterate_params(pf(0.5, 0.5, 1), 1000);
    CHECK(big.a() == Approx(std::pow(0.5, 1000)));
    CHECK(big.b() == Approx(2.0));
}

TEST_CASE("composition", "[pgf]")
{
    PfParams c = compose_params(pf(0.5, 0.5, 0.5), pf(0.5, 2, 1));
    CHECK(c.a() == 1.0);
    CHECK(c.b() == 1.0);
    CHECK(compose_params(pf(1, 1, 1), pf(1, 1, 1)) == iterate_params(pf(1, 1, 1), 2));
    CHECK_THROWS_AS(compose_params(pf(0.5, 1, 1), pf(1, 1, 1)), ThetaMismatch);
    PfParams f1 = pf(0.4, 0.6, 0.9), f2 = pf(0.4, 1.8, 0.3);
    PfParams f12 = compose_params(f1, f2);
    for (double s : grid(1.0, 30))
        CHECK(pgf_eval(f12, s) == Approx(pgf_eval(f1, pgf_eval(f2, s))).epsilon(1e-12));
}

TEST_CASE("moments", "[pgf]")
{
    MomentReport m = moments(pf(1, 0.5, 1));
    CHECK(m.mean == 2.0);
    CHECK(m.second_derivative_at_1 == 8.0);
    m = moments(pf(0.5, 1, 1));
    CHECK(m.mean == 1.0);
    CHECK(std::isinf(m.second_derivative_at_1));
    CHECK(moments(pf(1, 1, 3)).mean == 1.0);
    CHECK_THROWS_AS(moments(validate_params(0.5, 2, 0.5, 0.4)), DefectiveLaw);
    CHECK(std::isinf(moments(gsib(0.5, 0.1)).mean));

    // A2 and A3 proper laws against finite differences of the pgf at 1.
    for (const PfParams& p : {validate_params(0.5, 2, 0.4, 0.6), validate_params(-0.5, 2, 0.4, 0.6)}) {
        INFO(p.describe());
        REQUIRE(p.proper());
        double h = 1e-4;
        double f0 = pgf_eval(p, 1.0), fm = pgf_eval(p, 1.0 - h), fp = pgf_eval(p, 1.0 + h);
        MomentReport r = moments(p);
        CHECK(r.mean == Approx((fp - fm) / (2 * h)).epsilon(1e-7));
        CHECK(r.second_derivative_at_1 == Approx((fp - 2 * f0 + fm) / (h * h)).epsilon(1e-5));
    }
}

TEST_CASE("conjugation with Sibuya laws", "[pgf]")
{
    auto s = grid(1.0, 100);
    CHECK(conjugation_check(1, 0.7, 0.9, s) == 0.0);
    CHECK(conjugation_check(0.5, 1, 1, s) < 1e-12);
    CHECK(conjugation_check(0.3, 0.5, 0.6, s) < 1e-12);
    CHECK(conjugation_check(0.3, 0.5, 0.6, s, 0.4) < 1e-12);
    CHECK(conjugation_check(1, 0.5, 0.6, s, 0.4) == 0.0);
    CHECK_THROWS_AS(conjugation_check(0.5, 0.2, 0.3, s), ConstraintViolation);
}

TEST_CASE("conditioning on a positive value", "[pgf]")
{
    PfParams c = condition_on_positive(pf(1, 1, 1));
    CHECK(c.a() == 0.5);
    CHECK(c.b() == 0.5);
    PfParams p = pf(0.35, 0.9, 0.7);
    PfParams cp = condition_on_positive(p);
    CHECK(pgf_eval(cp, 0.0) == Approx(0.0).margin(1e-15));
    PmfTable orig = pmf_table(p, 100);
    PmfTable cond = pmf_table(cp, 100);
    for (std::size_t n = 1; n <= 100; ++n)
        CHECK(cond.p[n] == Approx(orig.p[n] / (1.0 - orig.p[0])).epsilon(1e-12));
}

TEST_CASE("scaling to the unit interval", "[pgf]")
{
    PfParams p = validate_params(1, 2, 0.5, 0.5);
    PfParams u = scale_to_unit(p);
    CHECK(u.tag() == PfCase::A1);
    CHECK(u.a() == 0.5);
    CHECK(u.b() == 1.0);
    for (const PfParams& q : {p, validate_params(0.6, 1.5, 0.3, 0.7 * std::pow(0.5, -0.6)),
                              validate_params(-0.5, 2, 0.5, 0.6)}) {
        PfParams sq = scale_to_unit(q);
        double g = q.gamma();
        for (double s : grid(1.0 / g, 40))
            CHECK(std::abs(pgf_eval(sq, s) - pgf_eval(q, g * s) / g) < 1e-14);
        if (q.proper() && q.theta() > 0)
            CHECK(pgf_eval(sq, 1.0 / g) == Approx(1.0 / g).epsilon(1e-14));
    }
    CHECK_THROWS_AS(scale_to_unit(pf(0.5, 1, 1)), ConstraintViolation);
}
