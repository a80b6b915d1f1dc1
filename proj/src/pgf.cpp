#include "pfbranch/pgf.hpp"

#include "pfbranch/errors.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace pfbranch {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// γ − f evaluated at distance d = γ − s from γ.
double complement_at_distance(const PfParams& p, double d)
{
    double th = p.theta();
    if (p.tag() == PfCase::Theta0)
        return std::pow(p.gamma() - p.q(), 1.0 - p.a()) * std::pow(d, p.a());
    if (th > 0.0) {
        if (d == 0.0)
            return 0.0;
        if (th == 1.0)
            return d / (p.a() + p.b() * d);
        return d * std::exp(-std::log(p.a() + p.b() * std::pow(d, th)) / th);
    }
    double at = -th;
    return std::pow(p.a() * std::pow(d, at) + p.b(), 1.0 / at);
}

void check_argument(const PfParams& p, double s)
{
    if (!(s >= 0.0))
        throw DomainError("pgf argument must be >= 0");
    if (p.gamma() == 1.0 ? s > 1.0 : s >= p.gamma())
        throw DomainError("pgf argument outside [0, gamma)");
}

} // namespace

double pgf_complement(const PfParams& p, double s)
{
    check_argument(p, s);
    return complement_at_distance(p, p.gamma() - s);
}

double pgf_eval(const PfParams& p, double s)
{
    return p.gamma() - pgf_complement(p, s);
}

double one_minus_pgf(const PfParams& p, double t)
{
    if (p.gamma() != 1.0)
        throw UnsupportedCase("one_minus_pgf requires gamma = 1");
    if (!(t >= 0.0 && t <= 1.0))
        throw DomainError("one_minus_pgf argument outside [0,1]");
    return complement_at_distance(p, t);
}

double h_transform(double theta, double gamma, double s)
{
    if (!(s >= 0.0) || s >= gamma)
        throw DomainError("h_transform argument outside [0, gamma)");
    if (theta == 0.0)
        return -std::log1p(-s / gamma);
    return std::pow(gamma - s, -theta) - std::pow(gamma, -theta);
}

PfParams iterate_params(const PfParams& p, unsigned long long n)
{
    if (n == 0)
        throw ConstraintViolation("n >= 1");
    if (n == 1)
        return p;
    double nd = static_cast<double>(n);
    if (p.tag() == PfCase::Theta0) {
        if (p.gamma() != 1.0)
            throw UnsupportedCase("iteration of theta = 0 laws requires gamma = 1");
        double an = std::exp(nd * std::log(p.a()));
        if (an == 0.0)
            throw std::underflow_error("a^n underflows");
        return validate_params(0.0, 1.0, an, p.q());
    }
    if (p.tag() != PfCase::A1)
        throw UnsupportedCase("iterate_params requires case A1 or theta = 0");
    double la = std::log(p.a());
    double an = std::exp(nd * la);
    double bn;
    if (p.a() == 1.0)
        bn = p.b() * nd;
    else
        bn = p.b() * (std::expm1(nd * la) / std::expm1(la));
    if (an == 0.0)
        throw std::underflow_error("a^n underflows");
    if (!std::isfinite(an) || !std::isfinite(bn))
        throw std::overflow_error("iterated parameters overflow");
    return validate_params(p.theta(), 1.0, an, bn);
}

PfParams compose_params(const PfParams& outer, const PfParams& inner)
{
    if (outer.theta() != inner.theta())
        throw ThetaMismatch("compose_params requires equal theta");
    if (outer.tag() != PfCase::A1 || inner.tag() != PfCase::A1)
        throw UnsupportedCase("compose_params requires case A1");
    return validate_params(outer.theta(), 1.0, outer.a() * inner.a(),
                           outer.a() * inner.b() + outer.b());
}

MomentReport moments(const PfParams& p)
{
    if (!p.proper())
        throw DefectiveLaw("moments require a proper law (f(1) = 1)");
    double th = p.theta();
    double a = p.a();
    switch (p.tag()) {
    case PfCase::A1:
        if (th == 1.0)
            return {1.0 / a, 2.0 * p.b() / (a * a)};
        return {std::pow(a, -1.0 / th), kInf};
    case PfCase::A2:
        return {a, a * (1.0 - a) * (1.0 + th) / (p.gamma() - 1.0)};
    case PfCase::A3:
        if (p.gamma() == 1.0)
            return {std::pow(a, -1.0 / th), 0.0};
        return {a, a * (1.0 - a) * (1.0 + th) / (p.gamma() - 1.0)};
    case PfCase::Theta0:
        if (p.gamma() == 1.0)
            return {kInf, kInf};
        return {a, a * (1.0 - a) / (p.gamma() - 1.0)};
    case PfCase::A2Extended:
        break;
    }
    throw DefectiveLaw("moments require a proper law (f(1) = 1)");
}

double sibuya_pgf(double theta, double s, double q)
{
    if (theta == 1.0)
        return s;
    return 1.0 - std::pow(1.0 - q, 1.0 - theta) * std::pow(1.0 - s, theta);
}

double conjugation_check(double theta, double a, double b, std::span<const double> s_grid,
                         std::optional<double> gsib_q)
{
    if (!(theta > 0.0 && theta <= 1.0))
        throw ConstraintViolation("conjugation requires theta in (0,1]");
    double q = gsib_q.value_or(0.0);
    if (!(q >= 0.0 && q < 1.0))
        throw ConstraintViolation("q in [0,1)");
    PfParams f = pf(theta, a, b);
    PfParams g = linear_fractional(a, b * std::pow(1.0 - q, theta - 1.0));
    double worst = 0.0;
    for (double s : s_grid) {
        if (!(s >= 0.0 && s < 1.0))
            throw DomainError("conjugation grid must lie in [0,1)");
        // h(f(s)) from 1 − f(s) directly; f(s) may round to within 1e−10 of 1.
        double lhs = theta == 1.0 ? pgf_eval(f, s)
                                  : 1.0 - std::pow(1.0 - q, 1.0 - theta) * std::pow(pgf_complement(f, s), theta);
        double rhs = pgf_eval(g, sibuya_pgf(theta, s, q));
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

PfParams condition_on_positive(const PfParams& p)
{
    if (p.tag() != PfCase::A1)
        throw UnsupportedCase("condition_on_positive requires case A1");
    double sum = p.a() + p.b();
    return validate_params(p.theta(), 1.0, p.a() / sum, p.b() / sum);
}

PfParams scale_to_unit(const PfParams& p)
{
    if (!(p.gamma() > 1.0) || (p.tag() != PfCase::A2 && p.tag() != PfCase::A3))
        throw ConstraintViolation("scale_to_unit requires case A2 or A3 with gamma > 1");
    return validate_params(p.theta(), 1.0, p.a(), p.b() * std::pow(p.gamma(), p.theta()));
}

} // namespace pfbranch
