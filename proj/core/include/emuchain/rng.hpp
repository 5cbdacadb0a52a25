#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace emuchain {

// Derives an independent seed from (master, tag, index, sub). All randomness
// in the library flows through this so that results depend only on the
// master seed and never on scheduling.
std::uint64_t substream_seed(std::uint64_t master, std::string_view tag,
                             std::uint64_t index = 0, std::uint64_t sub = 0) noexcept;

// Thin wrapper over mt19937_64 with distribution code written out by hand so
// draws are identical across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    static Rng substream(std::uint64_t master, std::string_view tag,
                         std::uint64_t index = 0, std::uint64_t sub = 0) {
        return Rng(substream_seed(master, tag, index, sub));
    }

    std::uint64_t next() { return engine_(); }

    // Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; consumes exactly two uniforms.
    double normal();

    double normal(double mean, double sd) { return mean + sd * normal(); }

    // Uniform integer in [0, n). n must be positive.
    std::uint64_t index(std::uint64_t n);

private:
    std::mt19937_64 engine_;
};

}  // namespace emuchain
