#pragma once

#include <cstdint>
#include <random>

namespace tcpshare {

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Per-stream generator: std::mt19937_64 seeded with
/// splitmix64(seed ^ splitmix64(stream)). The engine's output sequence is
/// fixed by the standard, and `uniform()` uses the top 53 bits, so results
/// are identical across standard libraries.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream)
        : engine_(splitmix64(seed ^ splitmix64(stream)))
    {
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

} // namespace tcpshare
