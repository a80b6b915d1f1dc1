#include "pfbranch/errors.hpp"
#include "pfbranch/montecarlo.hpp"
#include "pfbranch/numerics.hpp"
#include "pfbranch/random.hpp"
#include "pfbranch/sampling.hpp"
#include "pfbranch/stats.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <boost/math/distributions/binomial.hpp>

#include <cmath>
#include <cstdlib>
#include <random>

using namespace pfbranch;
using Catch::Approx;

namespace {

std::vector<std::uint64_t> draws(const PfParams& p, std::size_t n, std::uint64_t seed)
{
    Engine eng = make_stream(seed, {});
    std::vector<std::uint64_t> x(n);
    for (auto& v : x)
        v = sample(p, eng);
    return x;
}

// Central 99.9% binomial interval for the number of rejections.
bool within_calibration(int rejections, int reps, double level)
{
    boost::math::binomial_distribution<> d(reps, level);
    double lo = boost::math::quantile(d, 0.0005), hi = boost::math::quantile(boost::math::complement(d, 0.0005));
    return rejections >= lo && rejections <= hi;
}

} // namespace

TEST_CASE("parallel map is width independent", "[montecarlo]")
{
    auto fn = [](std::uint64_t i) {
        Engine e = make_stream(7, {i});
        return uniform01(e);
    };
    auto a = parallel_map(1000, 1, fn);
    auto b = parallel_map(1000, 8, fn);
    CHECK(a == b);
    CHECK(parallel_map(0, 4, fn).empty());
    try {
        parallel_map(100, 3, [](std::uint64_t i) -> int {
            if (i == 42 || i == 77)
                throw std::runtime_error("boom");
            return 0;
        });
        FAIL("expected ReplicateError");
    } catch (const ReplicateError& e) {
        CHECK(e.index() == 42);
    }
}

TEST_CASE("thread cap from the environment", "[montecarlo]")
{
    setenv("PFBRANCH_THREADS", "2", 1);
    CHECK(resolve_width(8) == 2);
    CHECK(resolve_width(1) == 1);
    unsetenv("PFBRANCH_THREADS");
    CHECK(resolve_width(8) == 8);
    CHECK(resolve_width(0) >= 1);
}

TEST_CASE("report json", "[montecarlo]")
{
    SimReport r;
    r.experiment = "demo";
    r.seed = 3;
    r.estimate("x", 1.5, 0.1);
    r.estimate("y", INFINITY);
    r.verdict("c1", "|x-1.5| < 0.3", true);
    auto j = r.to_json();
    CHECK(j["schema_version"] == 1);
    CHECK(j["estimates"][1]["value"] == "inf");
    CHECK(j["passed"] == true);
    r.verdict("c2", "none", false);
    CHECK_FALSE(r.all_passed());
    for (const char* key : {"experiment", "params", "estimates", "tests", "verdicts", "seed", "runtime"})
        CHECK(j.contains(key));
}

TEST_CASE("goodness of fit", "[stats]")
{
    PfParams lf = pf(1, 1, 1);
    PmfTable t = pmf_table(lf, 200);
    auto x = draws(lf, 10000, 1);
    GofResult g = discrete_gof(x, t);
    CHECK_FALSE(g.rejected);
    CHECK(g.tv < g.tv_threshold);
    for (const GofBin& b : g.bins)
        CHECK(b.expected >= 5.0);

    GofResult h = discrete_gof(x, pmf_table(pf(1, 2, 1), 200));
    CHECK(h.rejected);
    CHECK(h.tv > h.tv_threshold);

    CHECK_THROWS_AS(discrete_gof(std::vector<std::uint64_t>{}, t), InsufficientSamples);
    CHECK_THROWS_AS(discrete_gof(std::vector<std::uint64_t>{0, 1}, t), InsufficientSamples);
}

TEST_CASE("goodness of fit is calibrated", "[stats]")
{
    PfParams p = pf(0.5, 0.8, 0.9);
    PmfTable t = pmf_table(p, 500);
    int rejections = 0, tv_exceed = 0;
    const int reps = 200;
    for (int r = 0; r < reps; ++r) {
        auto x = draws(p, 2000, 100 + r);
        GofResult g = discrete_gof(x, t, 0.05);
        rejections += g.rejected;
        tv_exceed += g.tv > g.tv_threshold;
    }
    INFO("rejections " << rejections << " tv " << tv_exceed);
    CHECK(within_calibration(rejections, reps, 0.05));
    CHECK(within_calibration(tv_exceed, reps, 0.05));
}

TEST_CASE("two-sample tests", "[stats]")
{
    Engine e = make_stream(11, {});
    std::normal_distribution<double> nd;
    int ks_rej = 0, chi_rej = 0;
    const int reps = 200;
    for (int r = 0; r < reps; ++r) {
        std::vector<double> x(500), y(700);
        for (auto& v : x)
            v = nd(e);
        for (auto& v : y)
            v = nd(e);
        ks_rej += ks_two_sample(x, y, 0.05).rejected;
        std::vector<std::uint64_t> cx(8, 0), cy(8, 0);
        for (double v : x)
            ++cx[std::clamp<int>(static_cast<int>(std::floor(v + 4)), 0, 7)];
        for (double v : y)
            ++cy[std::clamp<int>(static_cast<int>(std::floor(v + 4)), 0, 7)];
        chi_rej += chi2_homogeneity(cx, cy, 0.05).rejected;
    }
    INFO("ks " << ks_rej << " chi " << chi_rej);
    CHECK(within_calibration(ks_rej, reps, 0.05));
    CHECK(within_calibration(chi_rej, reps, 0.05));

    std::vector<double> x(2000), y(2000);
    for (auto& v : x)
        v = nd(e);
    for (auto& v : y)
        v = nd(e) + 0.3;
    CHECK(ks_two_sample(x, y).rejected);
    CHECK(kolmogorov_survival(1.36) == Approx(0.049).margin(1e-3));
}

TEST_CASE("transform matching", "[stats]")
{
    Engine e = make_stream(5, {});
    std::vector<double> x(100000);
    for (auto& v : x)
        v = exponential01(e);
    std::vector<double> u{0.5, 1, 2};
    TransformMatch m = transform_match(x, [](double s) { return 1 / (1 + s); }, u);
    CHECK(m.passed);
    CHECK(m.threshold == Approx(normal_upper_quantile(0.00045)));
    TransformMatch bad = transform_match(x, [](double s) { return 1 / (1 + 1.05 * s); }, u);
    CHECK_FALSE(bad.passed);

    std::vector<double> zeros(10, 0.0);
    TransformMatch z = transform_match(zeros, [](double) { return 1.0; }, u);
    CHECK(z.passed);
    for (const auto& pt : z.points) {
        CHECK(pt.empirical == 1.0);
        CHECK(pt.se == 0.0);
    }
    CHECK(bonferroni_z(1) == Approx(3.0).epsilon(1e-3));
}
