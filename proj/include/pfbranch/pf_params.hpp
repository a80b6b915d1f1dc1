#pragma once

#include <optional>
#include <string>

namespace pfbranch {

enum class PfCase { A1, A2, A3, Theta0, A2Extended };

std::string to_string(PfCase c);

// The other (γ, a, b) describing the same linear-fractional law.
struct Alternate {
    double gamma;
    double a;
    double b;
};

// Parameters of a power-fractional law. Only constructed through validation,
// so every instance satisfies the constraints of its case.
class PfParams {
public:
    double theta() const { return theta_; }
    double gamma() const { return gamma_; }
    double a() const { return a_; }
    // For Theta0 laws b() is unused and q() holds the fixed point.
    double b() const { return b_; }
    double q() const { return q_; }
    PfCase tag() const { return tag_; }
    const std::optional<Alternate>& alternate() const { return alternate_; }

    // a/(a+b)
    double rho() const { return a_ / (a_ + b_); }
    // f(1) = 1
    bool proper() const;
    // Smallest fixed point of f in [0, γ).
    double fixed_point() const;

    bool operator==(const PfParams& o) const
    {
        return theta_ == o.theta_ && gamma_ == o.gamma_ && a_ == o.a_ && b_ == o.b_ &&
               q_ == o.q_ && tag_ == o.tag_;
    }

    std::string describe() const;

    friend PfParams validate_params(double theta, double gamma, double a, double b_or_q,
                                    bool allow_extended);

private:
    PfParams() = default;

    double theta_ = 1.0;
    double gamma_ = 1.0;
    double a_ = 1.0;
    double b_ = 1.0;
    double q_ = 0.0;
    PfCase tag_ = PfCase::A1;
    std::optional<Alternate> alternate_;
};

// Routes (θ, γ) to a case and checks its inequalities. For θ = 0 the last
// argument is q. Extended A2 laws (total mass above 1) are accepted only
// when allow_extended is set.
PfParams validate_params(double theta, double gamma, double a, double b_or_q,
                         bool allow_extended = false);

PfParams pf(double theta, double a, double b);
PfParams pf_plus(double theta, double a);
PfParams linear_fractional(double a, double b);
PfParams gsib(double a, double q);
PfParams sibuya(double a);

// γ = 1 form of a proper θ = 1 law given with γ > 1; other laws unchanged.
PfParams canonicalize(const PfParams& p);

inline constexpr double kParamTol = 1e-12;

} // namespace pfbranch
