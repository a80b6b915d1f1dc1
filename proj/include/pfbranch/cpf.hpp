#pragma once

#include "pfbranch/pf_params.hpp"
#include "pfbranch/random.hpp"

#include <memory>
#include <string>
#include <vector>

namespace pfbranch {

// CPF(θ, α, β): Laplace transform 1 − (α u^{−θ} + β)^{−1/θ}.
struct CpfParams {
    double theta;
    double alpha;
    double beta;

    std::string describe() const;
    bool operator==(const CpfParams&) const = default;
};

CpfParams cpf(double theta, double alpha, double beta);
CpfParams cpf_plus(double theta, double alpha);

double cpf_laplace(const CpfParams& params, double u);
// 1 − φ(u), accurate when φ(u) is close to 1.
double cpf_laplace_complement(const CpfParams& params, double u);

struct CpfMixture {
    double atom;
    CpfParams positive;
};

CpfMixture cpf_mixture_decompose(const CpfParams& params);

// Law of Σ_{k≤N} Y_k for N ~ PF(θ,a,b) in case A1 and Y_k ~ CPF(θ,α,β).
CpfParams cpf_random_sum(const PfParams& n_params, const CpfParams& y_params);

// CDF of CPF_+(θ, 1) tabulated on a log grid by Talbot inversion of the
// transforms of F, 1 − F and the density, with cubic Hermite interpolation
// in log-log coordinates and power-law extrapolation past the ends.
class CpfPlusTable {
public:
    explicit CpfPlusTable(double theta);

    double theta() const { return theta_; }
    double cdf(double y) const;
    double survival(double y) const;
    double quantile(double u) const;
    std::size_t size() const { return x_.size(); }
    double min_y() const;
    double max_y() const;

private:
    double theta_;
    double h_;
    std::vector<double> x_;
    // log F, d log F / dx, log F̄, d log F̄ / dx at each node x = log y.
    std::vector<double> lf_, dlf_, ls_, dls_;

    double log_side(double x, bool lower) const;
    double solve_side(double target, bool lower) const;
};

std::shared_ptr<const CpfPlusTable> cpf_plus_table(double theta);

double cpf_sample(const CpfParams& params, Engine& eng);

// Mittag-Leffler(θ), transform 1/(1 + u^θ), as E^{1/θ} times a positive θ-stable draw.
double mittag_leffler_sample(double theta, Engine& eng);

// Positive stable law with transform exp(−u^θ), Kanter's representation.
double positive_stable_sample(double theta, Engine& eng);

} // namespace pfbranch
