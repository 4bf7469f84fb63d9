// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cstdint>
#include <random>

namespace latentem::detail {

/// Seeded generator with hand-rolled draw helpers. std::mt19937_64 is
/// bit-reproducible by the standard, but the std distributions are not;
/// the helpers below keep fits byte-identical across toolchains.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n), n >= 1. Rejection sampling, no modulo bias.
    int uniform_int(int n) {
        const std::uint64_t span = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        std::uint64_t draw;
        do {
            draw = gen_();
        } while (draw >= limit);
        return static_cast<int>(draw % span);
    }

  private:
    std::mt19937_64 gen_;
};

}  // namespace latentem::detail
