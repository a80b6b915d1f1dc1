#pragma once

#include "pfbranch/pf_params.hpp"
#include "pfbranch/random.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pfbranch {

// Label probabilities γ_i for iid tagging of individuals.
class TagSpec {
public:
    explicit TagSpec(std::vector<double> gamma, std::vector<std::string> labels = {});

    std::size_t size() const { return gamma_.size(); }
    double gamma(std::size_t i) const { return gamma_.at(i); }
    const std::vector<double>& gammas() const { return gamma_; }
    const std::vector<std::string>& labels() const { return labels_; }
    double block_mass(std::span<const std::size_t> block) const;

private:
    std::vector<double> gamma_;
    std::vector<std::string> labels_;
};

// Law of the number of individuals carrying a label of probability gamma_i.
PfParams thin(const PfParams& params, double gamma_i);
PfParams thin(const PfParams& params, const TagSpec& tags, std::size_t label);
PfParams thin_block(const PfParams& params, const TagSpec& tags, std::span<const std::size_t> block);

// Counts per label for X ~ params with iid labels.
std::vector<std::uint64_t> pf_multidim_sample(const PfParams& params, const TagSpec& tags, Engine& eng);

// Multinomial(total, gamma) by sequential binomials.
std::vector<std::uint64_t> multinomial_split(std::uint64_t total, std::span<const double> gamma, Engine& eng);

} // namespace pfbranch
