#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fuse/grid.hpp"
#include "fuse/guidance.hpp"
#include "fuse/predictor.hpp"
#include "fuse/schedule.hpp"

namespace fuse {

// Deterministic denoising update (no fresh noise):
//   x_{t-1} = sqrt(ab_{t-1}) * (x_t - sqrt(1-ab_t)*eps) / sqrt(ab_t)
//           + sqrt(1-ab_{t-1}) * eps
Grid ddim_step(const Grid& x_t, const Grid& eps_hat, const Schedule& sched,
               int t);

// Baseline blends.
Grid weighted_sum_blend(const Grid& eps_g_hat, const Grid& eps_e_hat,
                        double w);
// Selects eps_g_hat where mask = 1, eps_e_hat where mask = 0. Pure selection
// (no arithmetic), so blending two equal grids is the exact identity.
Grid fixed_mask_blend(const Grid& eps_g_hat, const Grid& eps_e_hat,
                      const BlendMask& mask);

enum class BlendMode { snb, weighted_sum, fixed_mask, single_g, single_e };

BlendMode blend_mode_from_string(const std::string& name);
std::string to_string(BlendMode mode);

// Sampling-loop parameters. Model objects and schedule are passed alongside
// so configs stay plain data.
struct FusionConfig {
    Condition c_g{"NULL"};
    Condition c_e{"NULL"};
    double s_g = 7.5; // guidance scale, general model
    double s_e = 7.5; // guidance scale, expert model
    double k_g = 100.0; // softmax temperature, general salience
    double k_e = 100.0; // softmax temperature, expert salience
    SalienceParams salience;
    BlendMode mode = BlendMode::snb;
    double weighted_w = 0.5;             // weighted_sum only
    std::optional<BlendMask> fixed_mask; // fixed_mask only
    uint64_t seed = 0;
    bool keep_diagnostics = true;
};

// Per-step observables, kept when diagnostics are enabled. The normalized
// salience maps exist only in snb mode; the mask also exists in fixed_mask
// mode (where it is the supplied static mask).
struct StepDiagnostics {
    std::optional<SalienceMap> lambda_g; // softmax-normalized general map
    std::optional<SalienceMap> lambda_e; // softmax-normalized expert map
    BlendMask mask;
};

struct SnbStepResult {
    Grid x_prev;
    StepDiagnostics diag;
};

// One fused denoising step: predict conditional/unconditional noise with
// both models on the SAME x_t, build the two salience maps, normalize with
// the per-model temperatures, take the per-pixel argmax as the mask, guide
// each model's noise, select per the mask and apply the ddim update.
SnbStepResult snb_step(const Grid& x_t, int t, const NoisePredictor& model_g,
                       const NoisePredictor& model_e, const FusionConfig& fc,
                       const Schedule& sched);

struct TrajectoryEntry {
    int t = 0;
    Grid x;
    // Diagnostics of the step that consumed this state (t -> t-1); absent at
    // t = 0 and for modes/configs without diagnostics.
    std::optional<StepDiagnostics> diag;
};

// States x_T ... x_0, in that order (entries[i].t == T - i).
struct Trajectory {
    std::vector<TrajectoryEntry> entries;

    int T() const { return static_cast<int>(entries.size()) - 1; }
    const Grid& x0() const;
};

// Full sampling loop: draw x_T elementwise from the standard normal using a
// counter-based generator keyed on cfg.seed, then iterate the configured
// blend mode from t = T down to 1. Bit-reproducible for a fixed seed.
Trajectory run_fusion(const NoisePredictor& model_g,
                      const NoisePredictor& model_e, const FusionConfig& cfg,
                      const Schedule& sched);

} // namespace fuse
