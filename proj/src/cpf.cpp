#include "pfbranch/cpf.hpp"

#include "pfbranch/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

namespace pfbranch {

std::string CpfParams::describe() const
{
    std::ostringstream os;
    os.precision(17);
    os << "CPF(theta=" << theta << ", alpha=" << alpha << ", beta=" << beta << ")";
    return os.str();
}

CpfParams cpf(double theta, double alpha, double beta)
{
    if (!std::isfinite(theta) || !std::isfinite(alpha) || !std::isfinite(beta))
        throw ConstraintViolation("finite parameters");
    if (!(theta > 0.0 && theta <= 1.0))
        throw ConstraintViolation("theta in (0,1]");
    if (!(alpha > 0.0))
        throw ConstraintViolation("alpha > 0");
    if (!(beta >= 1.0 - kParamTol))
        throw ConstraintViolation("beta >= 1");
    return {theta, alpha, std::max(beta, 1.0)};
}

CpfParams cpf_plus(double theta, double alpha) { return cpf(theta, alpha, 1.0); }

namespace {

// log(1 − φ(u)) = −log1p(α u^{−θ} + β − 1)/θ
double log_complement(const CpfParams& p, double u)
{
    if (!(u >= 0.0))
        throw DomainError("u >= 0");
    if (u == 0.0)
        return -INFINITY;
    double w = p.alpha * std::exp(-p.theta * std::log(u)) + (p.beta - 1.0);
    return -std::log1p(w) / p.theta;
}

} // namespace

double cpf_laplace(const CpfParams& params, double u)
{
    if (u == 0.0)
        return 1.0;
    return -std::expm1(log_complement(params, u));
}

double cpf_laplace_complement(const CpfParams& params, double u)
{
    return std::exp(log_complement(params, u));
}

CpfMixture cpf_mixture_decompose(const CpfParams& params)
{
    double atom = -std::expm1(-std::log(params.beta) / params.theta);
    return {atom, cpf_plus(params.theta, params.alpha / params.beta)};
}

CpfParams cpf_random_sum(const PfParams& n_params, const CpfParams& y_params)
{
    if (n_params.theta() != y_params.theta)
        throw ThetaMismatch("N-law and summand law have different theta");
    if (n_params.tag() != PfCase::A1)
        throw ConstraintViolation("N-law must be case A1");
    return cpf(y_params.theta, n_params.a() * y_params.alpha, n_params.a() * y_params.beta + n_params.b());
}

namespace {

using cld = std::complex<long double>;

cld log1p_c(cld w)
{
    if (std::abs(w) < 1e-4L)
        return w * (1.0L - w * (0.5L - w * (1.0L / 3 - w * 0.25L)));
    return std::log(1.0L + w);
}

cld expm1_c(cld z)
{
    if (std::abs(z) < 1e-4L)
        return z * (1.0L + z * (0.5L + z * (1.0L / 6 + z / 24.0L)));
    return std::exp(z) - 1.0L;
}

struct NodeValues {
    double F, S, f;
};

// Fixed Talbot inversion of φ(s)/s, (1 − φ(s))/s and φ(s) for CPF_+(θ,1) at y.
NodeValues invert_node(double theta, double y)
{
    constexpr int m = 24;
    const long double pi = std::numbers::pi_v<long double>;
    const long double t = y;
    const long double r = 2.0L * m / (5.0L * t);
    const long double th_ = theta;
    auto eval = [&](cld s, long double weight_re, cld mult, long double& aF, long double& aS, long double& af) {
        cld lw = log1p_c(std::exp(-th_ * std::log(s))) / th_;
        cld comp = std::exp(-lw);
        cld phi = -expm1_c(-lw);
        cld e = std::exp(t * s) * mult;
        aF += weight_re * (e * phi / s).real();
        aS += weight_re * (e * comp / s).real();
        af += weight_re * (e * phi).real();
    };
    long double aF = 0, aS = 0, af = 0;
    eval(cld(r, 0.0L), 0.5L, cld(1.0L, 0.0L), aF, aS, af);
    for (int k = 1; k < m; ++k) {
        long double a = k * pi / m;
        long double cot = std::cos(a) / std::sin(a);
        cld s(r * a * cot, r * a);
        long double sigma = a + (a * cot - 1.0L) * cot;
        eval(s, 1.0L, cld(1.0L, sigma), aF, aS, af);
    }
    long double c = r / m;
    return {static_cast<double>(c * aF), static_cast<double>(c * aS), static_cast<double>(c * af)};
}

constexpr double kEdge = 1e-9;

} // namespace

CpfPlusTable::CpfPlusTable(double theta) : theta_(theta), h_(0.02)
{
    cpf_plus(theta, 1.0);
    struct Node {
        double x, F, S, f;
    };
    std::vector<Node> down, up;
    for (int k = 0;; --k) {
        double x = k * h_;
        NodeValues v = invert_node(theta, std::exp(x));
        if (!(v.F > 0.0) || (!down.empty() && v.F >= down.back().F))
            break;
        down.push_back({x, v.F, v.S, v.f});
        if (v.F < kEdge)
            break;
    }
    for (int k = 1;; ++k) {
        double x = k * h_;
        NodeValues v = invert_node(theta, std::exp(x));
        double prev = up.empty() ? down.front().S : up.back().S;
        if (!(v.S > 0.0) || v.S >= prev)
            break;
        up.push_back({x, v.F, v.S, v.f});
        if (v.S < kEdge)
            break;
    }
    if (down.size() < 10 || up.size() < 10)
        throw NonConvergent("CPF table construction failed");
    std::reverse(down.begin(), down.end());
    down.insert(down.end(), up.begin(), up.end());
    for (const Node& n : down) {
        double y = std::exp(n.x);
        double F = n.F > 0.5 ? 1.0 - n.S : n.F;
        double S = n.S > 0.5 ? 1.0 - n.F : n.S;
        x_.push_back(n.x);
        lf_.push_back(std::log(F));
        ls_.push_back(std::log(S));
        dlf_.push_back(y * n.f / F);
        dls_.push_back(-y * n.f / S);
    }
}

double CpfPlusTable::min_y() const { return std::exp(x_.front()); }
double CpfPlusTable::max_y() const { return std::exp(x_.back()); }

double CpfPlusTable::log_side(double x, bool lower) const
{
    const auto& v = lower ? lf_ : ls_;
    const auto& d = lower ? dlf_ : dls_;
    if (x <= x_.front())
        return lower ? v.front() + theta_ * (x - x_.front()) : std::log1p(-std::exp(lf_.front() + theta_ * (x - x_.front())));
    if (x >= x_.back())
        return lower ? std::log1p(-std::exp(ls_.back() - (1 + theta_) * (x - x_.back())))
                     : v.back() - (1 + theta_) * (x - x_.back());
    std::size_t i = std::min<std::size_t>(static_cast<std::size_t>((x - x_.front()) / h_), x_.size() - 2);
    double t = (x - x_[i]) / h_;
    double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * v[i] + (t3 - 2 * t2 + t) * h_ * d[i] + (-2 * t3 + 3 * t2) * v[i + 1] +
           (t3 - t2) * h_ * d[i + 1];
}

double CpfPlusTable::cdf(double y) const
{
    if (!(y > 0.0))
        return 0.0;
    double x = std::log(y);
    double lf = log_side(x, true);
    if (lf < std::log(0.5))
        return std::exp(lf);
    return -std::expm1(log_side(x, false));
}

double CpfPlusTable::survival(double y) const
{
    if (!(y > 0.0))
        return 1.0;
    double x = std::log(y);
    double ls = log_side(x, false);
    if (ls < std::log(0.5))
        return std::exp(ls);
    return -std::expm1(log_side(x, true));
}

double CpfPlusTable::solve_side(double target, bool lower) const
{
    const auto& v = lower ? lf_ : ls_;
    if (lower && target <= v.front())
        return x_.front() + (target - v.front()) / theta_;
    if (!lower && target <= v.back())
        return x_.back() + (target - v.back()) / (-1 - theta_);
    // First node whose value passes the target.
    std::size_t lo = 0, hi = x_.size() - 1;
    auto passed = [&](std::size_t i) { return lower ? v[i] >= target : v[i] <= target; };
    if (!passed(hi))
        return lower ? x_.back() : x_.front();
    while (hi - lo > 1) {
        std::size_t mid = (lo + hi) / 2;
        if (passed(mid))
            hi = mid;
        else
            lo = mid;
    }
    double a = x_[lo], b = x_[hi];
    double x = a + (b - a) * (target - v[lo]) / (v[hi] - v[lo]);
    for (int it = 0; it < 60; ++it) {
        double g = log_side(x, lower) - target;
        if (std::abs(g) < 1e-15)
            break;
        bool above = lower ? g > 0 : g < 0;
        if (above)
            b = x;
        else
            a = x;
        if (b - a < 1e-15 * std::max(1.0, std::abs(x)))
            break;
        const auto& d = lower ? dlf_ : dls_;
        double slope = d[lo] + (d[hi] - d[lo]) * (x - x_[lo]) / h_;
        double nx = x - g / slope;
        x = (nx > a && nx < b) ? nx : 0.5 * (a + b);
    }
    return x;
}

double CpfPlusTable::quantile(double u) const
{
    if (!(u > 0.0))
        return 0.0;
    if (u >= 1.0)
        return INFINITY;
    if (u <= 0.5)
        return std::exp(solve_side(std::log(u), true));
    return std::exp(solve_side(std::log1p(-u), false));
}

std::shared_ptr<const CpfPlusTable> cpf_plus_table(double theta)
{
    static std::mutex mu;
    static std::map<double, std::shared_ptr<const CpfPlusTable>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(theta);
    if (it != cache.end())
        return it->second;
    auto t = std::make_shared<const CpfPlusTable>(theta);
    cache.emplace(theta, t);
    return t;
}

double cpf_sample(const CpfParams& params, Engine& eng)
{
    CpfMixture m = cpf_mixture_decompose(params);
    if (m.atom > 0.0 && uniform01(eng) < m.atom)
        return 0.0;
    double scale = std::exp(-std::log(m.positive.alpha) / params.theta);
    if (params.theta == 1.0)
        return scale * exponential01(eng);
    return scale * cpf_plus_table(params.theta)->quantile(uniform01(eng));
}

double positive_stable_sample(double theta, Engine& eng)
{
    if (!(theta > 0.0 && theta <= 1.0))
        throw ConstraintViolation("theta in (0,1]");
    if (theta == 1.0)
        return 1.0;
    double u = std::numbers::pi * uniform01(eng);
    double e = exponential01(eng);
    double a = std::sin(theta * u) / std::pow(std::sin(u), 1.0 / theta);
    double b = std::pow(std::sin((1.0 - theta) * u) / e, (1.0 - theta) / theta);
    return a * b;
}

double mittag_leffler_sample(double theta, Engine& eng)
{
    double e = exponential01(eng);
    return std::pow(e, 1.0 / theta) * positive_stable_sample(theta, eng);
}

} // namespace pfbranch
