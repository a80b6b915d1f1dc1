#include "pfbranch/montecarlo.hpp"

#include "pfbranch/errors.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

namespace pfbranch {

unsigned resolve_width(unsigned requested)
{
    unsigned w = requested;
    if (w == 0) {
        w = std::thread::hardware_concurrency();
        if (w == 0)
            w = 1;
    }
    if (const char* env = std::getenv("PFBRANCH_THREADS")) {
        char* end = nullptr;
        unsigned long cap = std::strtoul(env, &end, 10);
        if (end != env && cap >= 1)
            w = std::min<unsigned>(w, static_cast<unsigned>(cap));
    }
    return w;
}

std::string format_g(double x, int digits)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return buf;
}

void check_plan(const SimPlan& plan)
{
    if (plan.replicates == 0)
        throw ConstraintViolation("replicates >= 1");
}

bool SimReport::all_passed() const
{
    for (const auto& t : tests)
        if (!t.passed)
            return false;
    for (const auto& v : verdicts)
        if (!v.passed)
            return false;
    return true;
}

void SimReport::verdict(std::string criterion, std::string tolerance, bool passed, std::string detail)
{
    verdicts.push_back({std::move(criterion), std::move(tolerance), passed, std::move(detail)});
}

void SimReport::estimate(std::string name, double value, double se)
{
    estimates.push_back({std::move(name), value, se});
}

void SimReport::merge(const SimReport& other)
{
    if (!other.params.empty())
        params[other.experiment] = other.params;
    if (!other.runtime.empty())
        runtime[other.experiment] = other.runtime;
    elapsed_seconds += other.elapsed_seconds;
    estimates.insert(estimates.end(), other.estimates.begin(), other.estimates.end());
    tests.insert(tests.end(), other.tests.begin(), other.tests.end());
    verdicts.insert(verdicts.end(), other.verdicts.begin(), other.verdicts.end());
}

namespace {

// JSON has no inf/nan.
nlohmann::json number(double x)
{
    if (std::isfinite(x))
        return x;
    if (std::isnan(x))
        return "nan";
    return x > 0 ? "inf" : "-inf";
}

} // namespace

nlohmann::json SimReport::to_json(bool with_timing) const
{
    nlohmann::json j;
    j["schema_version"] = 1;
    j["experiment"] = experiment;
    j["params"] = params;
    j["seed"] = seed;
    j["estimates"] = nlohmann::json::array();
    for (const auto& e : estimates)
        j["estimates"].push_back({{"name", e.name}, {"value", number(e.value)}, {"se", number(e.se)}});
    j["tests"] = nlohmann::json::array();
    for (const auto& t : tests)
        j["tests"].push_back({{"name", t.name},
                              {"kind", t.kind},
                              {"statistic", number(t.statistic)},
                              {"dof", number(t.dof)},
                              {"p_value", number(t.p_value)},
                              {"threshold", number(t.threshold)},
                              {"passed", t.passed}});
    j["verdicts"] = nlohmann::json::array();
    for (const auto& v : verdicts)
        j["verdicts"].push_back(
            {{"criterion", v.criterion}, {"tolerance", v.tolerance}, {"passed", v.passed}, {"detail", v.detail}});
    j["passed"] = all_passed();
    j["runtime"] = runtime;
    if (with_timing) {
        j["runtime"]["elapsed_seconds"] = elapsed_seconds;
        j["runtime"]["width"] = width;
    }
    return j;
}

} // namespace pfbranch
