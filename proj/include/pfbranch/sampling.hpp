#pragma once

#include "pfbranch/pf_params.hpp"
#include "pfbranch/pmf.hpp"
#include "pfbranch/random.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace pfbranch {

// Draws whose inverse lies beyond this value are returned saturated at it.
inline constexpr std::uint64_t kSampleCap = (std::uint64_t{1} << 63) - 1;

// Inverse-transform sampler over a tabulated cdf for 0..N and a tail
// function T(n) = P(X > n) for n >= N.
class DiscreteSampler {
public:
    using Tail = std::function<double(std::uint64_t)>;

    DiscreteSampler(std::vector<double> cdf, Tail tail);

    std::uint64_t operator()(Engine& eng) const { return invert(uniform01(eng)); }
    // Smallest n with P(X <= n) >= u.
    std::uint64_t invert(double u) const;

    const std::vector<double>& cdf() const { return cdf_; }

private:
    std::uint64_t search_tail(double v) const;

    std::vector<double> cdf_;
    Tail tail_;
};

class PfSampler {
public:
    explicit PfSampler(const PfParams& params);

    std::uint64_t operator()(Engine& eng) const { return sampler_(eng); }
    std::uint64_t invert(double u) const { return sampler_.invert(u); }

    const PfParams& params() const { return params_; }
    const PmfTable& table() const { return table_; }

private:
    PfParams params_;
    PmfTable table_;
    DiscreteSampler sampler_;
};

// Shared, immutable sampler for a parameter tuple.
std::shared_ptr<const PfSampler> sampler_for(const PfParams& params);

std::uint64_t sample(const PfParams& params, Engine& eng);

} // namespace pfbranch
