#pragma once

#include <string>

#include "fuse/grid.hpp"

namespace fuse {

// Classifier-free guidance weight. s = 0 returns the unconditional
// prediction, s = 1 the conditional one; larger values extrapolate.
struct GuidanceParams {
    double s = 7.5;
};

// eps_hat = eps_uncond + s * (eps_cond - eps_uncond), elementwise.
// Rejects negative or non-finite s.
Grid cfg(const Grid& eps_cond, const Grid& eps_uncond,
         const GuidanceParams& p);

enum class ChannelAgg { mean, max };

ChannelAgg channel_agg_from_string(const std::string& name);
std::string to_string(ChannelAgg agg);

struct SalienceParams {
    bool blur_enabled = true;
    BlurKernel kernel = BlurKernel::gaussian(2, 1.0);
    ChannelAgg channel_agg = ChannelAgg::mean;
};

// Salience of a condition: |eps_cond - eps_uncond| reduced over channels
// (mean or max), then optionally blurred. Uses the raw prediction gap, not
// the guidance-scaled one, so the map is independent of s.
SalienceMap salience(const Grid& eps_cond, const Grid& eps_uncond,
                     const SalienceParams& p);

} // namespace fuse
