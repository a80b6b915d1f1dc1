#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace pfbranch {

using Engine = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

// Engine seeded from a hash of the master seed and a path of stream indices.
Engine make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

// Uniform on the open interval (0,1) with 53 random bits.
inline double uniform01(Engine& eng)
{
    return (static_cast<double>(eng() >> 11) + 0.5) * 0x1.0p-53;
}

double exponential01(Engine& eng);
double standard_normal(Engine& eng);

} // namespace pfbranch
