#include "pfbranch/numerics.hpp"

#include <boost/math/distributions/normal.hpp>

#include <numbers>
#include <stdexcept>

namespace pfbranch {

double talbot_invert(const std::function<std::complex<long double>(std::complex<long double>)>& F,
                     double t, int m)
{
    if (!(t > 0.0))
        throw std::domain_error("talbot_invert requires t > 0");
    using cld = std::complex<long double>;
    const long double pi = std::numbers::pi_v<long double>;
    const long double tt = t;
    const long double r = 2.0L * m / (5.0L * tt);
    long double acc = 0.5L * std::exp(r * tt) * F(cld(r, 0.0L)).real();
    for (int k = 1; k < m; ++k) {
        long double th = k * pi / m;
        long double cot = std::cos(th) / std::sin(th);
        cld s(r * th * cot, r * th);
        long double sigma = th + (th * cot - 1.0L) * cot;
        cld term = std::exp(tt * s) * F(s) * cld(1.0L, sigma);
        acc += term.real();
    }
    return static_cast<double>(r / m * acc);
}

double normal_upper_quantile(double p)
{
    boost::math::normal_distribution<double> nd;
    return boost::math::quantile(boost::math::complement(nd, p));
}

} // namespace pfbranch
