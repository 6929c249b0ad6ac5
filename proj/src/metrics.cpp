#include "fuse/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "fuse/error.hpp"

namespace fuse {

namespace {

constexpr int kBins = 64;
constexpr double kLo = -4.0;
constexpr double kHi = 4.0;
constexpr double kSmoothing = 1e-9;

void check_complete(const Trajectory& traj) {
    const int T = traj.T();
    if (T < 1) throw ParameterError("trajectory has no sampling steps");
    for (int i = 0; i <= T; ++i) {
        if (traj.entries[static_cast<size_t>(i)].t != T - i) {
            throw ParameterError("trajectory is incomplete or out of order "
                                 "at index " +
                                 std::to_string(i));
        }
    }
}

double phi_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// KL(P||Q) with P the histogram of standardized samples (out-of-range values
// clamped into the edge bins) and Q the matching N(0,1) bin masses, both
// Laplace-smoothed.
double histogram_kl(const std::vector<double>& z) {
    std::vector<double> counts(kBins, 0.0);
    const double bin_w = (kHi - kLo) / kBins;
    for (double v : z) {
        int b = static_cast<int>(std::floor((v - kLo) / bin_w));
        b = std::clamp(b, 0, kBins - 1);
        counts[static_cast<size_t>(b)] += 1.0;
    }
    const double n = static_cast<double>(z.size());
    double kl = 0.0;
    for (int b = 0; b < kBins; ++b) {
        const double p =
            (counts[static_cast<size_t>(b)] + kSmoothing) / (n + kBins * kSmoothing);
        double q = phi_cdf(kLo + (b + 1) * bin_w) - phi_cdf(kLo + b * bin_w);
        if (b == 0) q += phi_cdf(kLo);
        if (b == kBins - 1) q += 1.0 - phi_cdf(kHi);
        q = (q + kSmoothing) / (1.0 + kBins * kSmoothing);
        kl += p * std::log(p / q);
    }
    return std::max(kl, 0.0);
}

MetricReport base_metrics(const Trajectory& traj) {
    check_complete(traj);
    MetricReport report;

    const Grid& x0 = traj.x0();
    const int n = x0.height() * x0.width();
    for (int c = 0; c < x0.channels(); ++c) {
        double mean = 0.0;
        for (int i = 0; i < n; ++i) mean += x0[c * n + i];
        mean /= n;
        double var = 0.0;
        for (int i = 0; i < n; ++i) {
            const double d = x0[c * n + i] - mean;
            var += d * d;
        }
        report.channel_mean.push_back(mean);
        report.channel_std.push_back(std::sqrt(var / n));
    }

    std::vector<const BlendMask*> masks;
    for (const auto& e : traj.entries) {
        if (e.t >= 1 && e.diag && e.diag->mask.size() > 0) {
            masks.push_back(&e.diag->mask);
        }
    }
    if (masks.size() == static_cast<size_t>(traj.T())) {
        double cov_sum = 0.0;
        for (const BlendMask* m : masks) {
            report.coverage_per_step.push_back(m->coverage());
            cov_sum += m->coverage();
        }
        report.mask_coverage = cov_sum / static_cast<double>(masks.size());
        // Last 80% of the sampling steps in time order (the tail of the
        // trajectory, smaller t).
        const size_t skip = masks.size() / 5;
        double late_sum = 0.0;
        for (size_t i = skip; i < masks.size(); ++i) {
            late_sum += report.coverage_per_step[i];
        }
        report.mask_coverage_late =
            late_sum / static_cast<double>(masks.size() - skip);
        if (masks.size() >= 2) {
            double stab_sum = 0.0;
            for (size_t i = 1; i < masks.size(); ++i) {
                int same = 0;
                for (int p = 0; p < masks[i]->size(); ++p) {
                    if ((*masks[i])[p] == (*masks[i - 1])[p]) ++same;
                }
                stab_sum += static_cast<double>(same) / masks[i]->size();
            }
            report.mask_stability = stab_sum / static_cast<double>(masks.size() - 1);
        } else {
            report.mask_stability = 1.0;
        }
    }
    return report;
}

} // namespace

MetricReport compute_metrics(const Trajectory& traj) {
    return base_metrics(traj);
}

MetricReport compute_metrics(const Trajectory& traj, const Grid& target_mean,
                             const Grid& target_std) {
    MetricReport report = base_metrics(traj);
    const Grid& x0 = traj.x0();
    require_same_shape(x0.shape(), target_mean.shape(), "x0 vs target mean");
    require_same_shape(x0.shape(), target_std.shape(), "x0 vs target std");
    std::vector<double> z(static_cast<size_t>(x0.size()));
    for (int i = 0; i < x0.size(); ++i) {
        if (!(target_std[i] > 0.0)) {
            throw ParameterError("target std must be positive at element " +
                                 std::to_string(i));
        }
        z[static_cast<size_t>(i)] = (x0[i] - target_mean[i]) / target_std[i];
    }
    report.kl_divergence = histogram_kl(z);
    return report;
}

MetricReport compute_metrics(const Trajectory& traj,
                             const GaussianSceneModel& target,
                             const std::string& condition_id) {
    const ConditionStats& st = target.stats(condition_id);
    return compute_metrics(traj, st.mean, st.stddev);
}

} // namespace fuse
