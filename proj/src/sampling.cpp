#include "pfbranch/sampling.hpp"

#include "pfbranch/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <tuple>

namespace pfbranch {

DiscreteSampler::DiscreteSampler(std::vector<double> cdf, Tail tail)
    : cdf_(std::move(cdf)), tail_(std::move(tail))
{
    if (cdf_.empty())
        throw std::invalid_argument("sampler needs a nonempty cdf table");
}

std::uint64_t DiscreteSampler::invert(double u) const
{
    if (u <= cdf_.back()) {
        auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
        return static_cast<std::uint64_t>(it - cdf_.begin());
    }
    return search_tail(1.0 - u);
}

std::uint64_t DiscreteSampler::search_tail(double v) const
{
    std::uint64_t lo = cdf_.size() - 1;
    double t_lo = tail_(lo);
    if (t_lo <= v)
        return lo + 1;
    std::uint64_t hi = 2 * lo + 1;
    double t_hi = tail_(hi);
    while (t_hi > v) {
        if (hi >= kSampleCap)
            return kSampleCap;
        lo = hi;
        t_lo = t_hi;
        hi = 2 * hi + 1;
        t_hi = tail_(hi);
    }
    bool bisect = false;
    while (hi - lo > 1) {
        std::uint64_t width = hi - lo;
        std::uint64_t mid;
        if (bisect || t_hi <= 0.0) {
            mid = lo + width / 2;
        } else {
            double llo = std::log(static_cast<double>(lo));
            double lhi = std::log(static_cast<double>(hi));
            double frac = (std::log(v) - std::log(t_lo)) / (std::log(t_hi) - std::log(t_lo));
            double guess = std::exp(llo + frac * (lhi - llo));
            if (!(guess > static_cast<double>(lo)))
                mid = lo + 1;
            else if (!(guess < static_cast<double>(hi)))
                mid = hi - 1;
            else
                mid = static_cast<std::uint64_t>(guess);
            mid = std::clamp(mid, lo + 1, hi - 1);
        }
        double t_mid = tail_(mid);
        if (t_mid <= v) {
            hi = mid;
            t_hi = t_mid;
        } else {
            lo = mid;
            t_lo = t_mid;
        }
        bisect = (hi - lo) > width / 2;
    }
    return hi;
}

namespace {

PfParams sampling_params(const PfParams& params)
{
    PfParams p = canonicalize(params);
    if (p.tag() == PfCase::A1 || (p.tag() == PfCase::Theta0 && p.gamma() == 1.0))
        return p;
    if (!p.proper())
        throw DefectiveLaw("cannot sample a law with f(1) < 1");
    throw UnsupportedCase("sampling supports case A1 and generalized Sibuya laws");
}

std::size_t table_size(const PfParams& p)
{
    std::size_t n = 64;
    while (n < 4096 && tail_probability(p, n).value > 1e-7)
        n *= 2;
    return n;
}

} // namespace

PfSampler::PfSampler(const PfParams& params)
    : params_(sampling_params(params)),
      table_(pmf_table(params_, table_size(params_))),
      sampler_(table_.cdf, [p = params_](std::uint64_t n) { return tail_probability(p, n).value; })
{
}

std::shared_ptr<const PfSampler> sampler_for(const PfParams& params)
{
    using Key = std::tuple<double, double, double, double, double, int>;
    static std::mutex mu;
    static std::map<Key, std::shared_ptr<const PfSampler>> cache;
    Key key{params.theta(), params.gamma(), params.a(), params.b(), params.q(),
            static_cast<int>(params.tag())};
    {
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(key);
        if (it != cache.end())
            return it->second;
    }
    auto made = std::make_shared<const PfSampler>(params);
    std::lock_guard<std::mutex> lock(mu);
    if (cache.size() >= 512)
        cache.clear();
    return cache.emplace(key, std::move(made)).first->second;
}

std::uint64_t sample(const PfParams& params, Engine& eng)
{
    return (*sampler_for(params))(eng);
}

} // namespace pfbranch
