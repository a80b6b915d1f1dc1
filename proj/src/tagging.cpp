#include "pfbranch/tagging.hpp"

#include "pfbranch/errors.hpp"
#include "pfbranch/numerics.hpp"
#include "pfbranch/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace pfbranch {

TagSpec::TagSpec(std::vector<double> gamma, std::vector<std::string> labels)
    : gamma_(std::move(gamma)), labels_(std::move(labels))
{
    if (gamma_.empty())
        throw ConstraintViolation("tag spec needs at least one label");
    if (!labels_.empty() && labels_.size() != gamma_.size())
        throw ConstraintViolation("one label name per probability");
    CompensatedSum total;
    for (double g : gamma_) {
        if (!(g > 0.0 && g <= 1.0))
            throw ConstraintViolation("gamma_i in (0,1]");
        total.add(g);
    }
    if (std::abs(total.value() - 1.0) > kParamTol)
        throw ConstraintViolation("sum of gamma_i = 1");
}

double TagSpec::block_mass(std::span<const std::size_t> block) const
{
    CompensatedSum total;
    std::vector<bool> seen(gamma_.size(), false);
    for (std::size_t i : block) {
        if (i >= gamma_.size())
            throw std::out_of_range("label index out of range");
        if (seen[i])
            continue;
        seen[i] = true;
        total.add(gamma_[i]);
    }
    return std::min(total.value(), 1.0);
}

PfParams thin(const PfParams& params, double gamma_i)
{
    if (params.tag() != PfCase::A1)
        throw UnsupportedCase("thinning requires case A1");
    if (!(gamma_i > 0.0 && gamma_i <= 1.0))
        throw ConstraintViolation("gamma_i in (0,1]");
    return validate_params(params.theta(), 1.0, params.a() * std::pow(gamma_i, -params.theta()),
                           params.b());
}

PfParams thin(const PfParams& params, const TagSpec& tags, std::size_t label)
{
    return thin(params, tags.gamma(label));
}

PfParams thin_block(const PfParams& params, const TagSpec& tags, std::span<const std::size_t> block)
{
    if (block.empty())
        throw ConstraintViolation("block must be nonempty");
    return thin(params, tags.block_mass(block));
}

std::vector<std::uint64_t> multinomial_split(std::uint64_t total, std::span<const double> gamma, Engine& eng)
{
    std::vector<std::uint64_t> counts(gamma.size(), 0);
    std::uint64_t left = total;
    double mass_left = 1.0;
    for (std::size_t i = 0; i + 1 < gamma.size() && left > 0; ++i) {
        double p = std::clamp(gamma[i] / mass_left, 0.0, 1.0);
        std::binomial_distribution<std::uint64_t> bin(left, p);
        counts[i] = bin(eng);
        left -= counts[i];
        mass_left -= gamma[i];
        if (mass_left <= 0.0)
            break;
    }
    counts.back() += left;
    return counts;
}

std::vector<std::uint64_t> pf_multidim_sample(const PfParams& params, const TagSpec& tags, Engine& eng)
{
    if (params.tag() != PfCase::A1)
        throw UnsupportedCase("multidimensional sampling requires case A1");
    std::uint64_t x = sample(params, eng);
    return multinomial_split(x, tags.gammas(), eng);
}

} // namespace pfbranch
