#include "fuse/guidance.hpp"

#include <algorithm>
#include <cmath>

#include "fuse/error.hpp"

namespace fuse {

ChannelAgg channel_agg_from_string(const std::string& name) {
    if (name == "mean") return ChannelAgg::mean;
    if (name == "max") return ChannelAgg::max;
    throw ParameterError("unknown channel aggregation '" + name +
                         "' (expected 'mean' or 'max')");
}

std::string to_string(ChannelAgg agg) {
    return agg == ChannelAgg::mean ? "mean" : "max";
}

Grid cfg(const Grid& eps_cond, const Grid& eps_uncond,
         const GuidanceParams& p) {
    require_same_shape(eps_cond.shape(), eps_uncond.shape(),
                       "eps_cond vs eps_uncond");
    if (!std::isfinite(p.s) || p.s < 0.0) {
        throw ParameterError("guidance scale must be finite and >= 0, got " +
                             std::to_string(p.s));
    }
    // s = 0 and s = 1 reduce to one of the inputs; return it directly so the
    // reduction is exact rather than exact-up-to-rounding.
    if (p.s == 0.0) return eps_uncond;
    if (p.s == 1.0) return eps_cond;
    Grid out(eps_cond.shape());
    for (int i = 0; i < out.size(); ++i) {
        out[i] = eps_uncond[i] + p.s * (eps_cond[i] - eps_uncond[i]);
    }
    return out;
}

SalienceMap salience(const Grid& eps_cond, const Grid& eps_uncond,
                     const SalienceParams& p) {
    require_same_shape(eps_cond.shape(), eps_uncond.shape(),
                       "eps_cond vs eps_uncond");
    const int channels = eps_cond.channels();
    const int n = eps_cond.height() * eps_cond.width();
    SalienceMap map(eps_cond.height(), eps_cond.width());
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int c = 0; c < channels; ++c) {
            const double d = std::abs(eps_cond[c * n + i] - eps_uncond[c * n + i]);
            if (p.channel_agg == ChannelAgg::mean) {
                acc += d;
            } else {
                acc = std::max(acc, d);
            }
        }
        map[i] = p.channel_agg == ChannelAgg::mean ? acc / channels : acc;
    }
    if (p.blur_enabled) {
        map = gaussian_blur(map, p.kernel);
    }
    return map;
}

} // namespace fuse
