#pragma once

#include <cstdint>
#include <random>

namespace calibra {

// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t mix64(std::uint64_t a, std::uint64_t b) noexcept
{
    return mix64(mix64(a) ^ b);
}

/// Uniform source on the open interval (0, 1).
///
/// Backed by std::mt19937_64, whose output sequence is fixed by the standard,
/// and converted with explicit bit arithmetic so draws are reproducible across
/// standard library implementations.
class UniformSource {
public:
    explicit UniformSource(std::uint64_t seed) : engine_(seed) {}

    double operator()() noexcept
    {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace calibra
