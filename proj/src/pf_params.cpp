#include "pfbranch/pf_params.hpp"

#include "pfbranch/errors.hpp"

#include <cmath>
#include <sstream>

namespace pfbranch {

namespace {

bool at_least(double x, double bound)
{
    return x >= bound - kParamTol * std::max(1.0, std::abs(bound));
}

bool at_most(double x, double bound)
{
    return x <= bound + kParamTol * std::max(1.0, std::abs(bound));
}

void require(bool ok, const std::string& what)
{
    if (!ok)
        throw ConstraintViolation(what);
}

} // namespace

std::string to_string(PfCase c)
{
    switch (c) {
    case PfCase::A1:
        return "A1";
    case PfCase::A2:
        return "A2";
    case PfCase::A3:
        return "A3";
    case PfCase::Theta0:
        return "THETA0";
    case PfCase::A2Extended:
        return "A2_EXTENDED";
    }
    return "?";
}

PfParams validate_params(double theta, double gamma, double a, double b_or_q, bool allow_extended)
{
    require(std::isfinite(theta) && std::isfinite(gamma) && std::isfinite(a) &&
                std::isfinite(b_or_q),
            "parameters must be finite");
    require(theta >= -1.0 && theta <= 1.0, "theta in [-1,1]");
    require(gamma >= 1.0, "gamma >= 1");
    require(a > 0.0, "a > 0");

    PfParams p;
    p.theta_ = theta;
    p.gamma_ = gamma;
    p.a_ = a;

    if (theta == 0.0) {
        require(a < 1.0, "a < 1");
        double q = b_or_q;
        if (gamma == 1.0)
            require(q >= 0.0 && q < 1.0, "q in [0,1)");
        else
            require(q >= 0.0 && q <= 1.0, "q in [0,1]");
        p.q_ = q;
        p.b_ = 0.0;
        p.tag_ = PfCase::Theta0;
        return p;
    }

    double b = b_or_q;
    p.b_ = b;

    if (theta > 0.0 && gamma == 1.0) {
        require(b > 0.0, "b > 0");
        require(at_least(a + b, 1.0), "a+b >= 1");
        p.tag_ = PfCase::A1;
        if (theta == 1.0 && a > 1.0)
            p.alternate_ = Alternate{(a + b - 1.0) / b, 1.0 / a, b / a};
        return p;
    }

    if (theta > 0.0) {
        require(a < 1.0, "a < 1");
        double ratio = b / (1.0 - a);
        require(at_least(ratio, std::pow(gamma, -theta)), "b/(1-a) >= gamma^-theta");
        if (at_most(ratio, std::pow(gamma - 1.0, -theta))) {
            p.tag_ = PfCase::A2;
        } else {
            require(allow_extended, "b/(1-a) <= (gamma-1)^-theta");
            p.tag_ = PfCase::A2Extended;
        }
        if (theta == 1.0 && p.tag_ == PfCase::A2 && p.proper())
            p.alternate_ = Alternate{1.0, 1.0 / a, b / a};
        return p;
    }

    double at = -theta;
    require(a < 1.0, "a < 1");
    require(b >= 0.0, "b >= 0");
    double ratio = b / (1.0 - a);
    require(at_least(ratio, std::pow(gamma - 1.0, at)), "b/(1-a) >= (gamma-1)^|theta|");
    require(at_most(ratio, std::pow(gamma, at)), "b/(1-a) <= gamma^|theta|");
    p.tag_ = PfCase::A3;
    return p;
}

bool PfParams::proper() const
{
    switch (tag_) {
    case PfCase::A1:
        return true;
    case PfCase::Theta0:
        return gamma_ == 1.0 || q_ == 1.0;
    case PfCase::A2: {
        double target = (1.0 - a_) * std::pow(gamma_ - 1.0, -theta_);
        return std::abs(b_ - target) <= kParamTol * std::max(1.0, target);
    }
    case PfCase::A3: {
        double target = (1.0 - a_) * std::pow(gamma_ - 1.0, -theta_);
        return std::abs(b_ - target) <= kParamTol * std::max(1.0, target);
    }
    case PfCase::A2Extended:
        return false;
    }
    return false;
}

double PfParams::fixed_point() const
{
    if (tag_ == PfCase::Theta0)
        return q_;
    if (tag_ == PfCase::A1 && a_ >= 1.0)
        return 1.0;
    return gamma_ - std::pow((1.0 - a_) / b_, 1.0 / theta_);
}

std::string PfParams::describe() const
{
    std::ostringstream os;
    os.precision(17);
    os << "PF(theta=" << theta_ << ", gamma=" << gamma_ << ", a=" << a_;
    if (tag_ == PfCase::Theta0)
        os << ", q=" << q_;
    else
        os << ", b=" << b_;
    os << ") [" << to_string(tag_) << "]";
    return os.str();
}

PfParams pf(double theta, double a, double b)
{
    return validate_params(theta, 1.0, a, b);
}

PfParams pf_plus(double theta, double a)
{
    if (!(a > 0.0 && a < 1.0))
        throw ConstraintViolation("PF_+ requires a in (0,1)");
    return validate_params(theta, 1.0, a, 1.0 - a);
}

PfParams linear_fractional(double a, double b)
{
    return validate_params(1.0, 1.0, a, b);
}

PfParams gsib(double a, double q)
{
    return validate_params(0.0, 1.0, a, q);
}

PfParams sibuya(double a)
{
    return validate_params(0.0, 1.0, a, 0.0);
}

PfParams canonicalize(const PfParams& p)
{
    if (p.theta() == 1.0 && p.tag() == PfCase::A2 && p.alternate())
        return validate_params(1.0, 1.0, p.alternate()->a, p.alternate()->b);
    return p;
}

} // namespace pfbranch
