#include "pfbranch/random.hpp"

#include <cmath>
#include <numbers>

namespace pfbranch {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Engine make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path)
{
    std::uint64_t h = splitmix64(seed ^ 0x5066627261636bULL);
    for (std::uint64_t k : path)
        h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
    std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                      static_cast<std::uint32_t>(splitmix64(h)),
                      static_cast<std::uint32_t>(splitmix64(h) >> 32)};
    return Engine(seq);
}

double exponential01(Engine& eng)
{
    return -std::log(uniform01(eng));
}

double standard_normal(Engine& eng)
{
    double u1 = uniform01(eng);
    double u2 = uniform01(eng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace pfbranch
