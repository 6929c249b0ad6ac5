#include "fuse/rng.hpp"

#include <cmath>

namespace fuse {

std::array<uint32_t, 4> philox4x32(uint64_t key, uint64_t counter_hi,
                                   uint64_t counter_lo) {
    constexpr uint64_t M0 = 0xD2511F53ull;
    constexpr uint64_t M1 = 0xCD9E8D57ull;
    constexpr uint32_t W0 = 0x9E3779B9u;
    constexpr uint32_t W1 = 0xBB67AE85u;

    uint32_t x0 = static_cast<uint32_t>(counter_lo);
    uint32_t x1 = static_cast<uint32_t>(counter_lo >> 32);
    uint32_t x2 = static_cast<uint32_t>(counter_hi);
    uint32_t x3 = static_cast<uint32_t>(counter_hi >> 32);
    uint32_t k0 = static_cast<uint32_t>(key);
    uint32_t k1 = static_cast<uint32_t>(key >> 32);

    for (int round = 0; round < 10; ++round) {
        const uint64_t p0 = M0 * x0;
        const uint64_t p1 = M1 * x2;
        const uint32_t hi0 = static_cast<uint32_t>(p0 >> 32);
        const uint32_t lo0 = static_cast<uint32_t>(p0);
        const uint32_t hi1 = static_cast<uint32_t>(p1 >> 32);
        const uint32_t lo1 = static_cast<uint32_t>(p1);
        x0 = hi1 ^ x1 ^ k0;
        x1 = lo1;
        x2 = hi0 ^ x3 ^ k1;
        x3 = lo0;
        k0 += W0;
        k1 += W1;
    }
    return {x0, x1, x2, x3};
}

double portable_log(double x) {
    // ln(x) = e*ln2 + ln(m), x = m * 2^e with m in [sqrt(1/2), sqrt(2)).
    // ln(m) = 2*atanh(s) with s = (m-1)/(m+1), |s| <= 0.1716, series through
    // s^23 keeps the truncation below double rounding.
    constexpr double kLn2 = 0.69314718055994530942;
    constexpr double kSqrtHalf = 0.70710678118654752440;
    int e = 0;
    double m = std::frexp(x, &e); // m in [0.5, 1)
    if (m < kSqrtHalf) {
        m *= 2.0;
        e -= 1;
    }
    const double s = (m - 1.0) / (m + 1.0);
    const double s2 = s * s;
    double poly = 1.0 / 23.0;
    poly = poly * s2 + 1.0 / 21.0;
    poly = poly * s2 + 1.0 / 19.0;
    poly = poly * s2 + 1.0 / 17.0;
    poly = poly * s2 + 1.0 / 15.0;
    poly = poly * s2 + 1.0 / 13.0;
    poly = poly * s2 + 1.0 / 11.0;
    poly = poly * s2 + 1.0 / 9.0;
    poly = poly * s2 + 1.0 / 7.0;
    poly = poly * s2 + 1.0 / 5.0;
    poly = poly * s2 + 1.0 / 3.0;
    poly = poly * s2 + 1.0;
    return static_cast<double>(e) * kLn2 + 2.0 * s * poly;
}

uint32_t CounterRng::next_u32() {
    if (buf_pos_ >= 4) {
        buf_ = philox4x32(key_, stream_, block_index_++);
        buf_pos_ = 0;
    }
    return buf_[buf_pos_++];
}

uint64_t CounterRng::next_u64() {
    const uint64_t lo = next_u32();
    const uint64_t hi = next_u32();
    return (hi << 32) | lo;
}

double CounterRng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double CounterRng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    for (;;) {
        const double u = 2.0 * uniform() - 1.0;
        const double v = 2.0 * uniform() - 1.0;
        const double s = u * u + v * v;
        if (s <= 0.0 || s >= 1.0) continue;
        const double factor = std::sqrt(-2.0 * portable_log(s) / s);
        spare_ = v * factor;
        have_spare_ = true;
        return u * factor;
    }
}

} // namespace fuse
