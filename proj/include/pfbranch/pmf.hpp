#pragma once

#include "pfbranch/pf_params.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

namespace pfbranch {

// Triangular table of c_{n,i}, 2 <= n <= N, 0 <= i <= n. Entries are stored
// divided by n! to keep them bounded.
class CoeffTable {
public:
    CoeffTable(double theta, std::size_t n_max);

    double theta() const { return theta_; }
    std::size_t n_max() const { return n_max_; }
    // c_{n,i} / n!
    long double scaled(std::size_t n, std::size_t i) const;
    long double log_c(std::size_t n, std::size_t i) const;
    long double c(std::size_t n, std::size_t i) const;

private:
    double theta_;
    std::size_t n_max_;
    std::vector<std::vector<long double>> rows_;
};

CoeffTable coeff_table(double theta, std::size_t n_max);

struct PmfTable {
    PfParams params;
    std::vector<double> p;
    std::vector<double> cdf;
    // P(X > N) and an upper bound on it including numerical error.
    double tail;
    double tail_bound;
    double rho;
};

// p_0..p_N by the power-series recurrence (case A1) or closed form (θ = 0).
PmfTable pmf_table(const PfParams& params, std::size_t n_max);

// p_0..p_N from the c_{n,i} representation, case A1 only.
std::vector<double> pmf_from_coefficients(const PfParams& params, std::size_t n_max);

struct TailValue {
    double value;
    double error;
};

// P(X > n) for supported proper laws.
TailValue tail_probability(const PfParams& params, std::uint64_t n);

struct TailAsymptotics {
    double exponent;
    std::optional<double> constant;
    // b/(a+b) <= θ/(1+2θ): n(n−1)p_n is nonincreasing.
    bool monotone_certified;
};

TailAsymptotics tail_asymptotics(const PfParams& params);

struct TvBounds {
    double lower;
    double upper;
};

TvBounds total_variation(const PmfTable& x, const PmfTable& y);

void write_csv(std::ostream& os, const PmfTable& table);

} // namespace pfbranch
