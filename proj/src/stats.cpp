#include "pfbranch/stats.hpp"

#include "pfbranch/errors.hpp"
#include "pfbranch/numerics.hpp"
#include "pfbranch/random.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace pfbranch {

MeanSe mean_se(std::span<const double> x)
{
    if (x.empty())
        throw InsufficientSamples("empty sample");
    CompensatedSum s;
    for (double v : x)
        s.add(v);
    double m = s.value() / static_cast<double>(x.size());
    if (x.size() == 1)
        return {m, 0.0};
    CompensatedSum ss;
    for (double v : x)
        ss.add((v - m) * (v - m));
    double var = ss.value() / static_cast<double>(x.size() - 1);
    return {m, std::sqrt(var / static_cast<double>(x.size()))};
}

namespace {

double chi2_survival(double stat, double dof)
{
    if (dof <= 0)
        return 1.0;
    return boost::math::gamma_q(dof / 2, stat / 2);
}

double binned_tv(std::span<const std::uint64_t> obs, std::span<const double> prob, double n)
{
    CompensatedSum d;
    for (std::size_t i = 0; i < obs.size(); ++i)
        d.add(std::abs(static_cast<double>(obs[i]) / n - prob[i]));
    return 0.5 * d.value();
}

GofResult gof_core(std::span<const std::uint64_t> samples, std::span<const double> probs, double tail_mass,
                   double significance, std::uint64_t bootstrap_seed)
{
    if (samples.empty())
        throw InsufficientSamples("empty sample");
    const double R = static_cast<double>(samples.size());
    const std::size_t N = probs.size();
    std::vector<std::uint64_t> hist(N + 1, 0);
    for (std::uint64_t x : samples)
        ++hist[std::min<std::uint64_t>(x, N)];

    GofResult g{};
    GofBin cur{0, 0, 0.0, 0};
    bool open = false;
    for (std::size_t n = 0; n < N; ++n) {
        if (!open) {
            cur = {n, n, 0.0, 0};
            open = true;
        }
        cur.hi = n;
        cur.expected += R * probs[n];
        cur.observed += hist[n];
        if (cur.expected >= 5.0) {
            g.bins.push_back(cur);
            open = false;
        }
    }
    GofBin tail{open ? cur.lo : N, std::numeric_limits<std::uint64_t>::max(),
                (open ? cur.expected : 0.0) + R * tail_mass, (open ? cur.observed : 0) + hist[N]};
    if (tail.expected >= 5.0 || g.bins.empty()) {
        g.bins.push_back(tail);
    } else {
        GofBin& last = g.bins.back();
        last.hi = tail.hi;
        last.expected += tail.expected;
        last.observed += tail.observed;
    }
    if (g.bins.size() < 2 || g.bins.front().expected < 5.0)
        throw InsufficientSamples("fewer than two bins with expected count >= 5");

    std::vector<double> prob;
    std::vector<std::uint64_t> obs;
    CompensatedSum chi;
    for (const GofBin& b : g.bins) {
        chi.add((b.observed - b.expected) * (b.observed - b.expected) / b.expected);
        prob.push_back(b.expected / R);
        obs.push_back(b.observed);
    }
    g.chi2 = chi.value();
    g.dof = static_cast<int>(g.bins.size()) - 1;
    g.p_value = chi2_survival(g.chi2, g.dof);
    g.tv = binned_tv(obs, prob, R);

    const int reps = 1000;
    Engine eng = make_stream(bootstrap_seed, {samples.size(), g.bins.size()});
    std::vector<double> tvs;
    tvs.reserve(reps);
    std::vector<std::uint64_t> draw(prob.size());
    for (int r = 0; r < reps; ++r) {
        std::uint64_t left = samples.size();
        double mass_left = 1.0;
        for (std::size_t i = 0; i < prob.size(); ++i) {
            if (i + 1 == prob.size() || left == 0) {
                draw[i] = i + 1 == prob.size() ? left : 0;
                continue;
            }
            double p = std::clamp(prob[i] / mass_left, 0.0, 1.0);
            draw[i] = std::binomial_distribution<std::uint64_t>(left, p)(eng);
            left -= draw[i];
            mass_left -= prob[i];
        }
        tvs.push_back(binned_tv(draw, prob, R));
    }
    std::sort(tvs.begin(), tvs.end());
    auto k = static_cast<std::size_t>(std::ceil((1.0 - significance) * reps));
    g.tv_threshold = tvs[std::clamp<std::size_t>(k, 1, reps) - 1];
    g.rejected = g.p_value < significance;
    return g;
}

} // namespace

TestResult GofResult::as_test(const std::string& name) const
{
    return {name, "chi2_gof", chi2, static_cast<double>(dof), p_value, tv_threshold, !rejected};
}

GofResult discrete_gof(std::span<const std::uint64_t> samples, const PmfTable& table, double significance,
                       std::uint64_t bootstrap_seed)
{
    return gof_core(samples, table.p, table.tail, significance, bootstrap_seed);
}

GofResult discrete_gof(std::span<const std::uint64_t> samples, std::span<const double> probs, double significance,
                       std::uint64_t bootstrap_seed)
{
    CompensatedSum s;
    for (double p : probs)
        s.add(p);
    return gof_core(samples, probs, std::max(0.0, 1.0 - s.value()), significance, bootstrap_seed);
}

TestResult TwoSampleResult::as_test(const std::string& name, const std::string& kind, double significance) const
{
    return {name, kind, statistic, dof, p_value, significance, !rejected};
}

double kolmogorov_survival(double lambda)
{
    if (lambda < 0.2)
        return 1.0;
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        double term = std::exp(-2.0 * k * k * lambda * lambda);
        s += (k % 2 ? 2.0 : -2.0) * term;
        if (term < 1e-18)
            break;
    }
    return std::clamp(s, 0.0, 1.0);
}

TwoSampleResult ks_two_sample(std::vector<double> x, std::vector<double> y, double significance)
{
    if (x.empty() || y.empty())
        throw InsufficientSamples("empty sample");
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] == v)
            ++i;
        while (j < y.size() && y[j] == v)
            ++j;
        d = std::max(d, std::abs(i / nx - j / ny));
    }
    double ne = std::sqrt(nx * ny / (nx + ny));
    double p = kolmogorov_survival((ne + 0.12 + 0.11 / ne) * d);
    return {d, 0.0, p, p < significance};
}

TwoSampleResult chi2_homogeneity(std::span<const std::uint64_t> x, std::span<const std::uint64_t> y,
                                 double significance)
{
    if (x.size() != y.size())
        throw std::invalid_argument("count vectors differ in length");
    double nx = 0, ny = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        nx += static_cast<double>(x[i]);
        ny += static_cast<double>(y[i]);
    }
    if (nx == 0 || ny == 0)
        throw InsufficientSamples("empty sample");
    const double fx = nx / (nx + ny), fy = ny / (nx + ny);
    std::vector<std::pair<double, double>> cells;
    double cx = 0, cy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        cx += static_cast<double>(x[i]);
        cy += static_cast<double>(y[i]);
        double tot = cx + cy;
        if (tot * std::min(fx, fy) >= 5.0) {
            cells.emplace_back(cx, cy);
            cx = cy = 0;
        }
    }
    if (cx + cy > 0) {
        if (cells.empty())
            cells.emplace_back(cx, cy);
        else {
            cells.back().first += cx;
            cells.back().second += cy;
        }
    }
    if (cells.size() < 2)
        throw InsufficientSamples("fewer than two cells with expected count >= 5");
    CompensatedSum chi;
    for (auto [ox, oy] : cells) {
        double tot = ox + oy;
        double ex = tot * fx, ey = tot * fy;
        chi.add((ox - ex) * (ox - ex) / ex + (oy - ey) * (oy - ey) / ey);
    }
    double dof = static_cast<double>(cells.size()) - 1;
    double p = chi2_survival(chi.value(), dof);
    return {chi.value(), dof, p, p < significance};
}

double bonferroni_z(std::size_t k)
{
    return normal_upper_quantile(0.00135 / static_cast<double>(std::max<std::size_t>(k, 1)));
}

TransformMatch transform_match_values(const std::vector<std::vector<double>>& values,
                                      const std::function<double(double)>& target, std::span<const double> u_grid,
                                      std::optional<double> z_threshold)
{
    if (values.size() != u_grid.size())
        throw std::invalid_argument("one value vector per grid point");
    TransformMatch m{{}, z_threshold.value_or(bonferroni_z(u_grid.size())), true};
    for (std::size_t k = 0; k < u_grid.size(); ++k) {
        double u = u_grid[k];
        if (!(u > 0.0 && std::isfinite(u)))
            throw DomainError("transform grid points must be positive and finite");
        MeanSe e = mean_se(values[k]);
        double t = target(u);
        double diff = e.mean - t;
        double z = e.se > 0 ? diff / e.se : (std::abs(diff) <= 1e-15 ? 0.0 : std::copysign(INFINITY, diff));
        m.points.push_back({u, e.mean, e.se, t, z});
        if (!(std::abs(z) <= m.threshold))
            m.passed = false;
    }
    return m;
}

TransformMatch transform_match(std::span<const double> samples, const std::function<double(double)>& target,
                               std::span<const double> u_grid, std::optional<double> z_threshold)
{
    std::vector<std::vector<double>> values(u_grid.size());
    for (std::size_t k = 0; k < u_grid.size(); ++k) {
        values[k].reserve(samples.size());
        for (double x : samples)
            values[k].push_back(std::exp(-u_grid[k] * x));
    }
    return transform_match_values(values, target, u_grid, z_threshold);
}

} // namespace pfbranch
