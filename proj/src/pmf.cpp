#include "pfbranch/pmf.hpp"

#include "pfbranch/errors.hpp"
#include "pfbranch/numerics.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

namespace pfbranch {

CoeffTable::CoeffTable(double theta, std::size_t n_max) : theta_(theta), n_max_(n_max)
{
    if (!(theta > 0.0 && theta <= 1.0))
        throw ConstraintViolation("coeff_table requires theta in (0,1]");
    if (n_max < 2)
        throw ConstraintViolation("coeff_table requires N >= 2");
    const long double th = theta;
    rows_.resize(n_max + 1);
    rows_[2] = {0.0L, (1.0L + th) / 2.0L, 0.0L};
    for (std::size_t n = 3; n <= n_max; ++n) {
        const auto& prev = rows_[n - 1];
        std::vector<long double> row(n + 1, 0.0L);
        for (std::size_t i = 1; i < n; ++i) {
            long double keep = (static_cast<long double>(n) - 2.0L - i * th) * prev[i];
            long double shift = (1.0L + i * th) * prev[i - 1];
            row[i] = (keep + shift) / static_cast<long double>(n);
        }
        rows_[n] = std::move(row);
    }
}

long double CoeffTable::scaled(std::size_t n, std::size_t i) const
{
    if (n < 2 || n > n_max_ || i > n)
        throw std::out_of_range("coefficient index out of range");
    return rows_[n][i];
}

long double CoeffTable::log_c(std::size_t n, std::size_t i) const
{
    return std::log(scaled(n, i)) + std::lgamma(static_cast<long double>(n) + 1.0L);
}

long double CoeffTable::c(std::size_t n, std::size_t i) const
{
    long double s = scaled(n, i);
    return s == 0.0L ? 0.0L : std::exp(log_c(n, i));
}

CoeffTable coeff_table(double theta, std::size_t n_max)
{
    return CoeffTable(theta, n_max);
}

namespace {

bool supported_a1(const PfParams& p)
{
    return p.tag() == PfCase::A1 && p.theta() > 0.0;
}

bool supported_gsib(const PfParams& p)
{
    return p.tag() == PfCase::Theta0 && p.gamma() == 1.0;
}

double p0_of(const PfParams& p)
{
    if (supported_gsib(p))
        return -std::expm1((1.0 - p.a()) * std::log1p(-p.q()));
    return -std::expm1(-std::log(p.a() + p.b()) / p.theta());
}

std::vector<double> series_pmf(const PfParams& prm, std::size_t n_max)
{
    const double th = prm.theta();
    const double a = prm.a();
    const double b = prm.b();
    const double c1 = -1.0 / th;
    std::vector<double> p(n_max + 1, 0.0);
    p[0] = p0_of(prm);
    if (n_max == 0)
        return p;
    // g = A^{-1-1/θ} with A(s) = a + b(1-s)^θ; f' = a g.
    std::vector<double> alpha(n_max), kalpha(n_max), g(n_max);
    double e = 1.0;
    alpha[0] = a + b;
    for (std::size_t k = 1; k < n_max; ++k) {
        e *= (static_cast<double>(k) - 1.0 - th) / static_cast<double>(k);
        alpha[k] = b * e;
        kalpha[k] = c1 * static_cast<double>(k) * alpha[k];
    }
    g[0] = std::exp((c1 - 1.0) * std::log(a + b));
    for (std::size_t n = 1; n < n_max; ++n) {
        double s1 = 0.0, s2 = 0.0;
        for (std::size_t k = 1; k <= n; ++k) {
            s1 += kalpha[k] * g[n - k];
            s2 += alpha[k] * g[n - k];
        }
        double nd = static_cast<double>(n);
        g[n] = (s1 - nd * s2) / (nd * alpha[0]);
    }
    for (std::size_t n = 1; n <= n_max; ++n)
        p[n] = a * g[n - 1] / static_cast<double>(n);
    return p;
}

std::vector<double> gsib_pmf(const PfParams& prm, std::size_t n_max)
{
    const double a = prm.a();
    const double k = std::exp((1.0 - a) * std::log1p(-prm.q()));
    std::vector<double> p(n_max + 1, 0.0);
    p[0] = p0_of(prm);
    double s = a;
    for (std::size_t n = 1; n <= n_max; ++n) {
        if (n > 1)
            s *= (static_cast<double>(n) - 1.0 - a) / static_cast<double>(n);
        p[n] = k * s;
    }
    return p;
}

// P(X > n) for θ ∈ (0,1) via the branch cut of (a + b(1-s)^θ)^{-1/θ} on [1,∞).
TailValue cut_integral_tail(double th, double a, double b, std::uint64_t n)
{
    thread_local boost::math::quadrature::exp_sinh<double> integrator;
    const double m = static_cast<double>(n) + 1.0;
    const double cs = std::cos(std::numbers::pi * th);
    const double sn = std::sin(std::numbers::pi * th);
    auto integrand = [&](double u) {
        double t = u / m;
        double w = b * std::pow(t, th);
        double re = a + w * cs;
        double im = w * sn;
        double mod = std::hypot(re, im);
        double arg = std::atan2(im, re);
        double weight = std::exp(-m * std::log1p(t));
        return std::exp(-std::log(mod) / th) * std::sin(arg / th) * weight;
    };
    double err = 0.0;
    double l1 = 0.0;
    double val = integrator.integrate(integrand, 1e-14, &err, &l1);
    double scale = 1.0 / (std::numbers::pi * m);
    return {val * scale, (err + 64.0 * std::numeric_limits<double>::epsilon() * l1) * scale};
}

} // namespace

TailValue tail_probability(const PfParams& prm, std::uint64_t n)
{
    if (supported_gsib(prm)) {
        double a = prm.a();
        double nd = static_cast<double>(n);
        double ratio = boost::math::tgamma_delta_ratio(nd + 1.0 - a, a);
        double v = std::exp((1.0 - a) * std::log1p(-prm.q())) * ratio / std::tgamma(1.0 - a);
        return {v, 16.0 * std::numeric_limits<double>::epsilon() * v};
    }
    if (!supported_a1(prm))
        throw UnsupportedCase("tail probability requires case A1 or a generalized Sibuya law");
    const double a = prm.a();
    const double b = prm.b();
    if (prm.theta() == 1.0) {
        double v = std::exp(static_cast<double>(n) * std::log(b / (a + b))) / (a + b);
        return {v, 16.0 * std::numeric_limits<double>::epsilon() * v * (1.0 + std::log1p(static_cast<double>(n)))};
    }
    return cut_integral_tail(prm.theta(), a, b, n);
}

PmfTable pmf_table(const PfParams& params, std::size_t n_max)
{
    std::vector<double> p;
    if (supported_a1(params))
        p = series_pmf(params, n_max);
    else if (supported_gsib(params))
        p = gsib_pmf(params, n_max);
    else
        throw UnsupportedCase("pmf tables exist for case A1 and generalized Sibuya laws only");
    std::vector<double> cdf(p.size());
    CompensatedSum acc;
    for (std::size_t n = 0; n < p.size(); ++n) {
        acc.add(p[n]);
        cdf[n] = acc.value();
    }
    TailValue t = tail_probability(params, n_max);
    double rounding = static_cast<double>(n_max + 1) * std::numeric_limits<double>::epsilon();
    double rho = supported_a1(params) ? params.rho() : std::numeric_limits<double>::quiet_NaN();
    return PmfTable{params, std::move(p), std::move(cdf), t.value, t.value + t.error + rounding, rho};
}

std::vector<double> pmf_from_coefficients(const PfParams& params, std::size_t n_max)
{
    if (!supported_a1(params))
        throw UnsupportedCase("coefficient representation requires case A1");
    const long double th = params.theta();
    const double a = params.a();
    const double b = params.b();
    const long double w = static_cast<long double>(b) / (static_cast<long double>(a) + b);
    std::vector<double> p(n_max + 1, 0.0);
    p[0] = p0_of(params);
    if (n_max == 0)
        return p;
    const long double p1 = a * std::exp(-(1.0L + 1.0L / th) * std::log(static_cast<long double>(a) + b));
    p[1] = static_cast<double>(p1);
    std::vector<long double> row{0.0L, 0.0L};
    for (std::size_t n = 2; n <= n_max; ++n) {
        std::vector<long double> next(n + 1, 0.0L);
        if (n == 2) {
            next[1] = (1.0L + th) / 2.0L;
        } else {
            for (std::size_t i = 1; i < n; ++i) {
                long double keep = (static_cast<long double>(n) - 2.0L - i * th) * row[i];
                long double shift = (1.0L + i * th) * row[i - 1];
                next[i] = (keep + shift) / static_cast<long double>(n);
            }
        }
        long double acc = 0.0L;
        for (std::size_t i = n; i-- > 1;)
            acc = acc * w + next[i];
        p[n] = static_cast<double>(p1 * acc * w);
        row = std::move(next);
    }
    return p;
}

TailAsymptotics tail_asymptotics(const PfParams& params)
{
    if (!supported_a1(params))
        throw UnsupportedCase("tail asymptotics require case A1");
    const double th = params.theta();
    if (th == 1.0)
        throw UnsupportedCase("theta = 1 has a geometric tail");
    const double a = params.a();
    const double b = params.b();
    const double bound = th / (1.0 + 2.0 * th);
    TailAsymptotics out{2.0 + th, std::nullopt, b / (a + b) <= bound};
    if (a / (a + b) <= bound)
        out.constant = std::pow(a, -(th + 1.0) / th) * b * (th + 1.0) / std::tgamma(1.0 - th);
    return out;
}

TvBounds total_variation(const PmfTable& x, const PmfTable& y)
{
    std::size_t n = std::min(x.p.size(), y.p.size());
    CompensatedSum acc;
    for (std::size_t k = 0; k < n; ++k)
        acc.add(std::abs(x.p[k] - y.p[k]));
    double tx = x.tail_bound, ty = y.tail_bound;
    for (std::size_t k = n; k < x.p.size(); ++k)
        tx += x.p[k];
    for (std::size_t k = n; k < y.p.size(); ++k)
        ty += y.p[k];
    double lower = 0.5 * acc.value();
    return {lower, lower + 0.5 * (tx + ty)};
}

void write_csv(std::ostream& os, const PmfTable& table)
{
    os << "n,p_n,cdf_n\n";
    char buf[96];
    for (std::size_t n = 0; n < table.p.size(); ++n) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", n, table.p[n], table.cdf[n]);
        os << buf;
    }
}

} // namespace pfbranch
