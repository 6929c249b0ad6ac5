#pragma once

#include <optional>
#include <vector>

#include "fuse/predictor.hpp"
#include "fuse/sampler.hpp"

namespace fuse {

// Per-run metrics over a finished trajectory. Mask metrics are present only
// when the trajectory carries masks (snb / fixed_mask diagnostics); the KL
// term only when a Gaussian target is supplied.
struct MetricReport {
    std::vector<double> channel_mean; // of x0, one entry per channel
    std::vector<double> channel_std;  // population std per channel

    // KL( empirical || target ) over per-pixel standardized x0 values,
    // pooled into a 64-bin histogram on [-4, 4] against N(0, 1).
    std::optional<double> kl_divergence;

    std::vector<double> coverage_per_step;   // share of mask = 1, t = T..1
    std::optional<double> mask_coverage;     // mean over all steps
    std::optional<double> mask_coverage_late; // mean over the last 80% of steps
    // Mean fraction of pixels whose mask value is unchanged between
    // consecutive steps; 1.0 for a constant mask.
    std::optional<double> mask_stability;
};

MetricReport compute_metrics(const Trajectory& traj);

// Standardizes x0 against the given per-pixel target before the KL
// histogram. Shapes must match the trajectory.
MetricReport compute_metrics(const Trajectory& traj, const Grid& target_mean,
                             const Grid& target_std);

// Convenience overload taking the target from a scene model's condition.
MetricReport compute_metrics(const Trajectory& traj,
                             const GaussianSceneModel& target,
                             const std::string& condition_id);

} // namespace fuse
