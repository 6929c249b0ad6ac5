#pragma once

#include <array>
#include <cstdint>

namespace fuse {

// Philox4x32-10 counter-based generator (Salmon et al., "Parallel Random
// Numbers: As Easy as 1, 2, 3"). One block maps (key, counter) to four
// 32-bit words with no internal state, so any draw is addressable and
// independent streams are just distinct counter prefixes.
std::array<uint32_t, 4> philox4x32(uint64_t key, uint64_t counter_hi,
                                   uint64_t counter_lo);

// Natural log via frexp + atanh series, using only IEEE arithmetic in a
// fixed evaluation order. Keeps sampled values byte-identical across libm
// implementations. Accurate to a few ulp for finite positive inputs.
double portable_log(double x);

// Deterministic stream of uniforms/normals addressed by (seed, stream).
// Normals use the Marsaglia polar method with portable_log, so a trajectory
// is reproducible bit-for-bit on any IEEE-754 platform.
class CounterRng {
public:
    explicit CounterRng(uint64_t seed, uint64_t stream = 0)
        : key_(seed), stream_(stream) {}

    // Uniform on [0, 1) with 53 random bits.
    double uniform();

    // Standard normal draw.
    double normal();

    uint32_t next_u32();
    uint64_t next_u64();

private:
    uint64_t key_;
    uint64_t stream_;
    uint64_t block_index_ = 0;
    std::array<uint32_t, 4> buf_{};
    int buf_pos_ = 4; // empty
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace fuse
