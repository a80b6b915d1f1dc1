#include "pfbranch/errors.hpp"
#include "pfbranch/pmf.hpp"
#include "pfbranch/random.hpp"
#include "pfbranch/sampling.hpp"
#include "pfbranch/stats.hpp"
#include "pfbranch/tagging.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace pfbranch;
using Catch::Approx;

namespace {

double empirical_tv(std::span<const std::uint64_t> x, const PmfTable& t)
{
    std::vector<double> freq(t.p.size(), 0.0);
    double beyond = 0;
    for (auto v : x) {
        if (v < t.p.size())
            freq[v] += 1;
        else
            beyond += 1;
    }
    double n = static_cast<double>(x.size());
    double d = std::abs(beyond / n - t.tail);
    for (std::size_t i = 0; i < freq.size(); ++i)
        d += std::abs(freq[i] / n - t.p[i]);
    return 0.5 * d;
}

} // namespace

TEST_CASE("thinning parameters", "[tagging]")
{
    PfParams p = pf(0.4, 0.8, 0.9);
    CHECK(thin(p, 1.0) == p);
    PfParams t = thin(pf(1, 1, 1), 0.5);
    CHECK(t.a() == 2.0);
    CHECK(t.b() == 1.0);
    TagSpec tags({0.2, 0.3, 0.5});
    std::size_t block[] = {0, 2};
    CHECK(thin_block(p, tags, block).a() == Approx(0.8 * std::pow(0.7, -0.4)).epsilon(1e-15));
    CHECK(thin(p, tags, 1).a() == Approx(0.8 * std::pow(0.3, -0.4)).epsilon(1e-15));
    CHECK_THROWS_AS(TagSpec({0.5, 0.6}), ConstraintViolation);
    CHECK_THROWS_AS(TagSpec({0.0, 1.0}), ConstraintViolation);
    CHECK_THROWS_AS(thin(gsib(0.5, 0.1), 0.5), UnsupportedCase);
}

TEST_CASE("coin thinning of linear-fractional draws", "[tagging]")
{
    Engine e = make_stream(21, {});
    std::vector<std::uint64_t> kept(1000000);
    for (auto& k : kept) {
        std::uint64_t x = sample(pf(1, 1, 1), e);
        k = std::binomial_distribution<std::uint64_t>(x, 0.5)(e);
    }
    CHECK(empirical_tv(kept, pmf_table(pf(1, 2, 1), 200)) < 0.005);
}

TEST_CASE("two-label marginals", "[tagging]")
{
    PfParams p = pf(0.5, 0.9, 0.6);
    TagSpec tags({0.5, 0.5});
    Engine e = make_stream(22, {});
    std::vector<std::uint64_t> c0, c1, total;
    std::vector<std::uint64_t> given3(4, 0);
    for (int r = 0; r < 1000000; ++r) {
        auto c = pf_multidim_sample(p, tags, e);
        c0.push_back(c[0]);
        c1.push_back(c[1]);
        total.push_back(c[0] + c[1]);
        if (c[0] + c[1] == 3)
            ++given3[c[0]];
    }
    PmfTable marginal = pmf_table(validate_params(0.5, 1, 0.9 * std::sqrt(2.0), 0.6), 2000);
    CHECK(empirical_tv(c0, marginal) < 0.005);
    CHECK(empirical_tv(c1, marginal) < 0.005);
    CHECK_FALSE(discrete_gof(total, pmf_table(p, 2000)).rejected);

    std::vector<double> binom{0.125, 0.375, 0.375, 0.125};
    std::vector<std::uint64_t> expanded;
    for (std::uint64_t k = 0; k < 4; ++k)
        expanded.insert(expanded.end(), given3[k], k);
    REQUIRE(expanded.size() > 1000);
    CHECK_FALSE(discrete_gof(expanded, binom).rejected);
}

TEST_CASE("multinomial split", "[tagging]")
{
    Engine e = make_stream(23, {});
    std::vector<double> g{0.2, 0.3, 0.5};
    std::vector<double> sums(3, 0.0);
    for (int r = 0; r < 10000; ++r) {
        auto c = multinomial_split(10, g, e);
        CHECK(c[0] + c[1] + c[2] == 10);
        for (int i = 0; i < 3; ++i)
            sums[i] += static_cast<double>(c[i]);
    }
    CHECK(sums[0] / 1e5 == Approx(0.2).margin(0.01));
    CHECK(sums[2] / 1e5 == Approx(0.5).margin(0.01));
    CHECK(multinomial_split(0, g, e) == std::vector<std::uint64_t>{0, 0, 0});
}
