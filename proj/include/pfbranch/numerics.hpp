#pragma once

#include <cmath>
#include <complex>
#include <functional>

namespace pfbranch {

// Neumaier compensated summation.
class CompensatedSum {
public:
    void add(double x)
    {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// Fixed-Talbot inversion of a Laplace transform F at time t > 0.
double talbot_invert(const std::function<std::complex<long double>(std::complex<long double>)>& F,
                     double t, int m = 24);

// Upper quantile z with P(N(0,1) > z) = p.
double normal_upper_quantile(double p);

} // namespace pfbranch
