#include "fuse/sampler.hpp"

#include <cmath>

#include "fuse/error.hpp"
#include "fuse/rng.hpp"

namespace fuse {

Grid ddim_step(const Grid& x_t, const Grid& eps_hat, const Schedule& sched,
               int t) {
    require_same_shape(x_t.shape(), eps_hat.shape(), "x_t vs eps_hat");
    if (t < 1 || t > sched.T()) {
        throw ParameterError("ddim step needs t in [1, " +
                             std::to_string(sched.T()) + "], got " +
                             std::to_string(t));
    }
    const double ab_t = sched.alpha_bar_at(t);
    const double ab_prev = sched.alpha_bar_at(t - 1);
    const double sab_t = std::sqrt(ab_t);
    const double sab_prev = std::sqrt(ab_prev);
    const double s1m_t = std::sqrt(1.0 - ab_t);
    const double s1m_prev = std::sqrt(1.0 - ab_prev);
    Grid out(x_t.shape());
    for (int i = 0; i < out.size(); ++i) {
        const double x0_est = (x_t[i] - s1m_t * eps_hat[i]) / sab_t;
        out[i] = sab_prev * x0_est + s1m_prev * eps_hat[i];
    }
    return out;
}

Grid weighted_sum_blend(const Grid& eps_g_hat, const Grid& eps_e_hat,
                        double w) {
    require_same_shape(eps_g_hat.shape(), eps_e_hat.shape(),
                       "eps_g_hat vs eps_e_hat");
    if (!(w >= 0.0 && w <= 1.0)) {
        throw ParameterError("blend weight must lie in [0, 1], got " +
                             std::to_string(w));
    }
    Grid out(eps_g_hat.shape());
    for (int i = 0; i < out.size(); ++i) {
        out[i] = w * eps_g_hat[i] + (1.0 - w) * eps_e_hat[i];
    }
    return out;
}

Grid fixed_mask_blend(const Grid& eps_g_hat, const Grid& eps_e_hat,
                      const BlendMask& mask) {
    require_same_shape(eps_g_hat.shape(), eps_e_hat.shape(),
                       "eps_g_hat vs eps_e_hat");
    if (mask.height() != eps_g_hat.height() ||
        mask.width() != eps_g_hat.width()) {
        throw DimensionError("mask is " + std::to_string(mask.height()) + "x" +
                             std::to_string(mask.width()) +
                             ", noise grids are " +
                             eps_g_hat.shape().str());
    }
    const int n = eps_g_hat.height() * eps_g_hat.width();
    Grid out(eps_g_hat.shape());
    for (int c = 0; c < eps_g_hat.channels(); ++c) {
        for (int i = 0; i < n; ++i) {
            out[c * n + i] = mask[i] ? eps_g_hat[c * n + i] : eps_e_hat[c * n + i];
        }
    }
    return out;
}

BlendMode blend_mode_from_string(const std::string& name) {
    if (name == "snb") return BlendMode::snb;
    if (name == "weighted_sum") return BlendMode::weighted_sum;
    if (name == "fixed_mask") return BlendMode::fixed_mask;
    if (name == "single_g") return BlendMode::single_g;
    if (name == "single_e") return BlendMode::single_e;
    throw ParameterError("unknown blend mode '" + name + "'");
}

std::string to_string(BlendMode mode) {
    switch (mode) {
    case BlendMode::snb: return "snb";
    case BlendMode::weighted_sum: return "weighted_sum";
    case BlendMode::fixed_mask: return "fixed_mask";
    case BlendMode::single_g: return "single_g";
    case BlendMode::single_e: return "single_e";
    }
    throw ParameterError("invalid blend mode value");
}

SnbStepResult snb_step(const Grid& x_t, int t, const NoisePredictor& model_g,
                       const NoisePredictor& model_e, const FusionConfig& fc,
                       const Schedule& sched) {
    const Condition null = Condition::null();
    const Grid eps_g = model_g.predict(x_t, t, fc.c_g);
    const Grid eps_g_null = model_g.predict(x_t, t, null);
    const Grid eps_e = model_e.predict(x_t, t, fc.c_e);
    const Grid eps_e_null = model_e.predict(x_t, t, null);

    const SalienceMap sal_g = salience(eps_g, eps_g_null, fc.salience);
    const SalienceMap sal_e = salience(eps_e, eps_e_null, fc.salience);
    SalienceMap lambda_g = spatial_softmax(sal_g, fc.k_g);
    SalienceMap lambda_e = spatial_softmax(sal_e, fc.k_e);
    BlendMask mask = argmax_mask(lambda_g, lambda_e);

    const Grid eps_g_hat = cfg(eps_g, eps_g_null, GuidanceParams{fc.s_g});
    const Grid eps_e_hat = cfg(eps_e, eps_e_null, GuidanceParams{fc.s_e});
    const Grid eps = fixed_mask_blend(eps_g_hat, eps_e_hat, mask);

    SnbStepResult res;
    res.x_prev = ddim_step(x_t, eps, sched, t);
    res.diag.lambda_g = std::move(lambda_g);
    res.diag.lambda_e = std::move(lambda_e);
    res.diag.mask = std::move(mask);
    return res;
}

const Grid& Trajectory::x0() const {
    if (entries.empty() || entries.back().t != 0) {
        throw ParameterError("trajectory is incomplete (no t=0 state)");
    }
    return entries.back().x;
}

namespace {

// Single guided step shared by the baseline modes.
Grid baseline_step(const Grid& x_t, int t, const NoisePredictor& model_g,
                   const NoisePredictor& model_e, const FusionConfig& fc,
                   const Schedule& sched, std::optional<StepDiagnostics>& diag) {
    const Condition null = Condition::null();
    switch (fc.mode) {
    case BlendMode::single_g: {
        const Grid eps = cfg(model_g.predict(x_t, t, fc.c_g),
                             model_g.predict(x_t, t, null),
                             GuidanceParams{fc.s_g});
        return ddim_step(x_t, eps, sched, t);
    }
    case BlendMode::single_e: {
        const Grid eps = cfg(model_e.predict(x_t, t, fc.c_e),
                             model_e.predict(x_t, t, null),
                             GuidanceParams{fc.s_e});
        return ddim_step(x_t, eps, sched, t);
    }
    case BlendMode::weighted_sum: {
        const Grid eps_g = cfg(model_g.predict(x_t, t, fc.c_g),
                               model_g.predict(x_t, t, null),
                               GuidanceParams{fc.s_g});
        const Grid eps_e = cfg(model_e.predict(x_t, t, fc.c_e),
                               model_e.predict(x_t, t, null),
                               GuidanceParams{fc.s_e});
        return ddim_step(x_t, weighted_sum_blend(eps_g, eps_e, fc.weighted_w),
                         sched, t);
    }
    case BlendMode::fixed_mask: {
        if (!fc.fixed_mask) {
            throw ParameterError("fixed_mask mode requires a mask");
        }
        const Grid eps_g = cfg(model_g.predict(x_t, t, fc.c_g),
                               model_g.predict(x_t, t, null),
                               GuidanceParams{fc.s_g});
        const Grid eps_e = cfg(model_e.predict(x_t, t, fc.c_e),
                               model_e.predict(x_t, t, null),
                               GuidanceParams{fc.s_e});
        if (fc.keep_diagnostics) {
            diag = StepDiagnostics{std::nullopt, std::nullopt, *fc.fixed_mask};
        }
        return ddim_step(x_t,
                         fixed_mask_blend(eps_g, eps_e, *fc.fixed_mask), sched,
                         t);
    }
    default:
        throw ParameterError("invalid blend mode value");
    }
}

} // namespace

Trajectory run_fusion(const NoisePredictor& model_g,
                      const NoisePredictor& model_e, const FusionConfig& cfg,
                      const Schedule& sched) {
    require_same_shape(model_g.shape(), model_e.shape(), "model_g vs model_e");
    const GridShape shape = model_g.shape();
    const int T = sched.T();

    CounterRng rng(cfg.seed, 0);
    Grid x(shape);
    for (int i = 0; i < x.size(); ++i) x[i] = rng.normal();

    Trajectory traj;
    traj.entries.reserve(static_cast<size_t>(T) + 1);
    for (int t = T; t >= 1; --t) {
        TrajectoryEntry entry;
        entry.t = t;
        entry.x = x;
        try {
            if (cfg.mode == BlendMode::snb) {
                SnbStepResult res = snb_step(x, t, model_g, model_e, cfg, sched);
                x = std::move(res.x_prev);
                if (cfg.keep_diagnostics) entry.diag = std::move(res.diag);
            } else {
                std::optional<StepDiagnostics> diag;
                x = baseline_step(x, t, model_g, model_e, cfg, sched, diag);
                entry.diag = std::move(diag);
            }
        } catch (const Error& e) {
            throw Error("sampling failed at timestep t=" + std::to_string(t) +
                        ": " + e.what());
        }
        traj.entries.push_back(std::move(entry));
    }
    traj.entries.push_back(TrajectoryEntry{0, std::move(x), std::nullopt});
    return traj;
}

} // namespace fuse
