#pragma once

#include "pfbranch/pf_params.hpp"

#include <optional>
#include <span>

namespace pfbranch {

double pgf_eval(const PfParams& p, double s);

// γ − f(s), evaluated without forming f(s) first.
double pgf_complement(const PfParams& p, double s);

// 1 − f(1 − t) for γ = 1 laws, accurate when t is tiny.
double one_minus_pgf(const PfParams& p, double t);

double h_transform(double theta, double gamma, double s);

PfParams iterate_params(const PfParams& p, unsigned long long n);
PfParams compose_params(const PfParams& outer, const PfParams& inner);

struct MomentReport {
    double mean;
    double second_derivative_at_1;
};

MomentReport moments(const PfParams& p);

// Sibuya / generalized Sibuya pgf with exponent theta; theta = 1 is the identity.
double sibuya_pgf(double theta, double s, double q = 0.0);

// max |h(f(s)) − g(h(s))| over the grid with f = PF(θ,a,b), h = GSib(θ,q) pgf
// (Sib(θ) when q is absent) and g = LF(a, b(1−q)^{θ−1}).
double conjugation_check(double theta, double a, double b, std::span<const double> s_grid,
                         std::optional<double> gsib_q = std::nullopt);

PfParams condition_on_positive(const PfParams& p);

PfParams scale_to_unit(const PfParams& p);

} // namespace pfbranch
