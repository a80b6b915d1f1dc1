#pragma once

#include "pfbranch/montecarlo.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pfbranch {

struct SuiteOptions {
    std::uint64_t seed = 20241015;
    unsigned width = 0;
    // Multiplies every replicate budget; tolerances are unchanged.
    double scale = 1.0;
};

class UnknownSuite : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// pmf-dual, tail, conjugation, gw-fixed, cpf, gw-re-super, gw-re-sub,
// gw-re-critical, decomposition, mbp
const std::vector<std::string>& suite_names();

SimReport run_suite(const std::string& name, const SuiteOptions& options = {});

// Criterion groups the suites are assembled from.
SimReport check_pmf_dual(const SuiteOptions& options);
SimReport check_tail_monotonicity(const SuiteOptions& options);
SimReport check_tail_constant(const SuiteOptions& options);
SimReport check_conjugation(const SuiteOptions& options);
SimReport check_gw_extinction(const SuiteOptions& options);
SimReport check_martingale_limit(const SuiteOptions& options);
SimReport check_limit_laws(const SuiteOptions& options);
SimReport check_cpf_sampler(const SuiteOptions& options);
SimReport check_duality(const SuiteOptions& options);
SimReport check_re_supercritical(const SuiteOptions& options);
SimReport check_re_subcritical(const SuiteOptions& options);
SimReport check_re_critical(const SuiteOptions& options);
SimReport check_decomposition(const SuiteOptions& options);
SimReport check_mbp(const SuiteOptions& options);

} // namespace pfbranch
