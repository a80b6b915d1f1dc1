#pragma once

#include "pfbranch/random.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

namespace pfbranch {

struct SimPlan {
    std::string experiment;
    std::uint64_t replicates = 0;
    std::uint64_t horizon = 0;
    std::uint64_t master_seed = 0;
    // 0 selects the default parallelism.
    unsigned width = 0;
};

struct Estimate {
    std::string name;
    double value;
    double se;
};

struct TestResult {
    std::string name;
    std::string kind;
    double statistic;
    double dof;
    double p_value;
    double threshold;
    bool passed;
};

struct Verdict {
    std::string criterion;
    std::string tolerance;
    bool passed;
    std::string detail;
};

struct SimReport {
    std::string experiment;
    nlohmann::json params = nlohmann::json::object();
    std::vector<Estimate> estimates;
    std::vector<TestResult> tests;
    std::vector<Verdict> verdicts;
    std::uint64_t seed = 0;
    // Deterministic run metadata.
    nlohmann::json runtime = nlohmann::json::object();
    // Wall time and width; written only by to_json(true).
    double elapsed_seconds = 0.0;
    unsigned width = 0;

    bool all_passed() const;
    void verdict(std::string criterion, std::string tolerance, bool passed, std::string detail = {});
    void estimate(std::string name, double value, double se = 0.0);
    // Appends the other report; its params and runtime are nested under its experiment name.
    void merge(const SimReport& other);
    nlohmann::json to_json(bool with_timing = false) const;
};

class ReplicateError : public std::runtime_error {
public:
    ReplicateError(std::uint64_t index, const std::string& what)
        : std::runtime_error("replicate " + std::to_string(index) + ": " + what), index_(index)
    {
    }
    std::uint64_t index() const { return index_; }

private:
    std::uint64_t index_;
};

// Requested width, or the hardware concurrency when 0, capped by PFBRANCH_THREADS.
unsigned resolve_width(unsigned requested);

// fn(i) for i in [0, count) over a static partition of `width` threads.
// Results are returned in index order, so output never depends on width.
template <class Fn>
auto parallel_map(std::uint64_t count, unsigned width, Fn&& fn)
    -> std::vector<std::invoke_result_t<Fn&, std::uint64_t>>
{
    using R = std::invoke_result_t<Fn&, std::uint64_t>;
    std::vector<R> out(count);
    unsigned w = static_cast<unsigned>(std::min<std::uint64_t>(resolve_width(width), std::max<std::uint64_t>(count, 1)));
    std::mutex mu;
    std::uint64_t bad_index = count;
    std::string bad_what;
    auto work = [&](std::uint64_t lo, std::uint64_t hi) {
        for (std::uint64_t i = lo; i < hi; ++i) {
            try {
                out[i] = fn(i);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(mu);
                if (i < bad_index) {
                    bad_index = i;
                    bad_what = e.what();
                }
                return;
            }
        }
    };
    if (w <= 1) {
        work(0, count);
    } else {
        std::uint64_t chunk = (count + w - 1) / w;
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < w; ++t) {
            std::uint64_t lo = std::min<std::uint64_t>(count, t * chunk);
            std::uint64_t hi = std::min<std::uint64_t>(count, lo + chunk);
            if (lo < hi)
                pool.emplace_back(work, lo, hi);
        }
        for (auto& th : pool)
            th.join();
    }
    if (bad_index < count)
        throw ReplicateError(bad_index, bad_what);
    return out;
}

// printf %.*g, for verdict details.
std::string format_g(double x, int digits = 6);

void check_plan(const SimPlan& plan);

// fn(i, eng) for every replicate i, where eng = make_stream(plan.master_seed, {i}).
// Exceptions surface as ReplicateError carrying the lowest failing index.
template <class Fn>
auto run_replicates(const SimPlan& plan, Fn&& fn)
{
    check_plan(plan);
    return parallel_map(plan.replicates, plan.width, [&](std::uint64_t i) {
        Engine eng = make_stream(plan.master_seed, {i});
        return fn(i, eng);
    });
}

} // namespace pfbranch
