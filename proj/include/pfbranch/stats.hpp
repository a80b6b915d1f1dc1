#pragma once

#include "pfbranch/montecarlo.hpp"
#include "pfbranch/pmf.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace pfbranch {

struct MeanSe {
    double mean;
    double se;
};

MeanSe mean_se(std::span<const double> x);

struct GofBin {
    std::uint64_t lo;
    // Inclusive; UINT64_MAX for the open tail bin.
    std::uint64_t hi;
    double expected;
    std::uint64_t observed;
};

struct GofResult {
    std::vector<GofBin> bins;
    double chi2;
    int dof;
    double p_value;
    double tv;
    // Bootstrap (1 − significance) quantile of the binned TV under the null.
    double tv_threshold;
    bool rejected;

    TestResult as_test(const std::string& name) const;
};

// Chi-square goodness of fit against a tabulated law; bins are pooled left to
// right until each expected count reaches 5. Mass beyond the table goes in
// an open tail bin.
GofResult discrete_gof(std::span<const std::uint64_t> samples, const PmfTable& table,
                       double significance = 1e-3, std::uint64_t bootstrap_seed = 0x5eedULL);

// Same, for a law given by the probabilities of 0..N; the rest is 1 − Σp.
GofResult discrete_gof(std::span<const std::uint64_t> samples, std::span<const double> probs,
                       double significance = 1e-3, std::uint64_t bootstrap_seed = 0x5eedULL);

struct TwoSampleResult {
    double statistic;
    double dof;
    double p_value;
    bool rejected;

    TestResult as_test(const std::string& name, const std::string& kind, double significance) const;
};

// Kolmogorov-Smirnov two-sample test with the asymptotic distribution.
TwoSampleResult ks_two_sample(std::vector<double> x, std::vector<double> y, double significance = 1e-3);

// Chi-square homogeneity test of two count vectors over the same cells.
// Cells with pooled expected count below 5 are merged in order.
TwoSampleResult chi2_homogeneity(std::span<const std::uint64_t> x, std::span<const std::uint64_t> y,
                                 double significance = 1e-3);

double kolmogorov_survival(double lambda);

struct TransformPoint {
    double u;
    double empirical;
    double se;
    double target;
    double z;
};

struct TransformMatch {
    std::vector<TransformPoint> points;
    double threshold;
    bool passed;
};

// Empirical E e^{-uX} against target(u) at each grid point. The default
// threshold is the Bonferroni z for an overall 0.00135 one-sided level.
TransformMatch transform_match(std::span<const double> samples, const std::function<double(double)>& target,
                               std::span<const double> u_grid, std::optional<double> z_threshold = std::nullopt);

// As above from per-point unbiased estimates, e.g. conditional expectations.
TransformMatch transform_match_values(const std::vector<std::vector<double>>& values,
                                      const std::function<double(double)>& target, std::span<const double> u_grid,
                                      std::optional<double> z_threshold = std::nullopt);

double bonferroni_z(std::size_t k);

} // namespace pfbranch
