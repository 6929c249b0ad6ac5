#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "fuse/fixtures.hpp"
#include "fuse/metrics.hpp"
#include "fuse/sampler.hpp"

using namespace fuse;

namespace {

// Synthetic trajectory with the given per-step masks (ordered t = T..1) and
// a fixed final state.
Trajectory synthetic(const std::vector<BlendMask>& masks, Grid x0) {
    Trajectory traj;
    const int T = static_cast<int>(masks.size());
    for (int i = 0; i < T; ++i) {
        TrajectoryEntry e;
        e.t = T - i;
        e.x = x0;
        e.diag = StepDiagnostics{std::nullopt, std::nullopt,
                                 masks[static_cast<size_t>(i)]};
        traj.entries.push_back(std::move(e));
    }
    traj.entries.push_back({0, std::move(x0), std::nullopt});
    return traj;
}

} // namespace

TEST_CASE("channel moments of the final state") {
    Grid x0(GridShape{2, 1, 4},
            std::vector<double>{1.0, 2.0, 3.0, 4.0, 5.0, 5.0, 5.0, 5.0});
    const Trajectory traj = synthetic({BlendMask(1, 4, 1)}, std::move(x0));
    const MetricReport r = compute_metrics(traj);

    REQUIRE(r.channel_mean.size() == 2);
    CHECK(r.channel_mean[0] == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(r.channel_std[0] ==
          doctest::Approx(std::sqrt(1.25)).epsilon(1e-15)); // population
    CHECK(r.channel_mean[1] == 5.0);
    CHECK(r.channel_std[1] == 0.0);
    CHECK_FALSE(r.kl_divergence.has_value());
}

TEST_CASE("constant masks give stability one") {
    BlendMask half(2, 2, 0);
    half.at(0, 0) = 1;
    half.at(0, 1) = 1;
    const Trajectory traj =
        synthetic(std::vector<BlendMask>(10, half), Grid(GridShape{1, 2, 2}));
    const MetricReport r = compute_metrics(traj);

    REQUIRE(r.mask_stability.has_value());
    CHECK(*r.mask_stability == 1.0);
    REQUIRE(r.mask_coverage.has_value());
    CHECK(*r.mask_coverage == 0.5);
    CHECK(*r.mask_coverage_late == 0.5);
    REQUIRE(r.coverage_per_step.size() == 10);
    for (double c : r.coverage_per_step) CHECK(c == 0.5);
}

TEST_CASE("all-ones masks cover everything") {
    const Trajectory traj = synthetic(
        std::vector<BlendMask>(5, BlendMask(2, 2, 1)), Grid(GridShape{1, 2, 2}));
    const MetricReport r = compute_metrics(traj);
    CHECK(*r.mask_coverage == 1.0);
    CHECK(*r.mask_stability == 1.0);
}

TEST_CASE("alternating masks floor the stability") {
    std::vector<BlendMask> masks;
    for (int i = 0; i < 6; ++i) {
        masks.push_back(BlendMask(2, 2, i % 2 ? 1 : 0));
    }
    const Trajectory traj = synthetic(masks, Grid(GridShape{1, 2, 2}));
    const MetricReport r = compute_metrics(traj);
    CHECK(*r.mask_stability == 0.0);
    CHECK(*r.mask_coverage == 0.5);
}

TEST_CASE("partial mask flips scale the stability linearly") {
    // A single 1 that moves each step: two of four pixels change, two stay.
    std::vector<BlendMask> masks;
    for (int i = 0; i < 8; ++i) {
        BlendMask m(2, 2, 0);
        m[i % 4] = 1;
        masks.push_back(m);
    }
    const Trajectory traj = synthetic(masks, Grid(GridShape{1, 2, 2}));
    const MetricReport r = compute_metrics(traj);
    CHECK(*r.mask_stability == doctest::Approx(0.5));
    CHECK(*r.mask_coverage == 0.25);
}

TEST_CASE("late coverage skips the first fifth of the steps") {
    // 10 steps: first two (t = 10, 9) fully covered, the rest empty.
    std::vector<BlendMask> masks(2, BlendMask(2, 2, 1));
    masks.resize(10, BlendMask(2, 2, 0));
    const Trajectory traj = synthetic(masks, Grid(GridShape{1, 2, 2}));
    const MetricReport r = compute_metrics(traj);
    CHECK(*r.mask_coverage == doctest::Approx(0.2));
    CHECK(*r.mask_coverage_late == 0.0); // the early burst is excluded
    REQUIRE(r.coverage_per_step.size() == 10);
    CHECK(r.coverage_per_step[0] == 1.0);
    CHECK(r.coverage_per_step[9] == 0.0);
}

TEST_CASE("mask metrics appear only for fully masked trajectories") {
    // No diagnostics at all.
    Trajectory plain;
    plain.entries.push_back({2, Grid(GridShape{1, 2, 2}), std::nullopt});
    plain.entries.push_back({1, Grid(GridShape{1, 2, 2}), std::nullopt});
    plain.entries.push_back({0, Grid(GridShape{1, 2, 2}), std::nullopt});
    const MetricReport r = compute_metrics(plain);
    CHECK_FALSE(r.mask_coverage.has_value());
    CHECK_FALSE(r.mask_stability.has_value());
    CHECK(r.coverage_per_step.empty());
}

TEST_CASE("incomplete or shuffled trajectories are rejected") {
    Trajectory empty;
    CHECK_THROWS_AS(compute_metrics(empty), ParameterError);

    Trajectory gap;
    gap.entries.push_back({3, Grid(GridShape{1, 1, 1}), std::nullopt});
    gap.entries.push_back({1, Grid(GridShape{1, 1, 1}), std::nullopt});
    gap.entries.push_back({0, Grid(GridShape{1, 1, 1}), std::nullopt});
    CHECK_THROWS_AS(compute_metrics(gap), ParameterError);

    Trajectory no_end;
    no_end.entries.push_back({1, Grid(GridShape{1, 1, 1}), std::nullopt});
    CHECK_THROWS_AS(compute_metrics(no_end), ParameterError);
}

TEST_CASE("kl standardization rejects bad targets") {
    const Trajectory traj =
        synthetic({BlendMask(2, 2, 1)}, Grid(GridShape{1, 2, 2}, 1.0));
    const Grid mean(GridShape{1, 2, 2}, 0.0);
    CHECK_THROWS_AS(
        compute_metrics(traj, mean, Grid(GridShape{1, 2, 2}, 0.0)),
        ParameterError);
    CHECK_THROWS_AS(compute_metrics(traj, Grid(GridShape{1, 2, 3}, 0.0),
                                    Grid(GridShape{1, 2, 3}, 1.0)),
                    DimensionError);
    const MetricReport r =
        compute_metrics(traj, mean, Grid(GridShape{1, 2, 2}, 1.0));
    REQUIRE(r.kl_divergence.has_value());
    CHECK(*r.kl_divergence >= 0.0);
}

TEST_CASE("kl is small for a matched sampler and large for a wrong target") {
    // Single-model sampling from a known Gaussian scene; the sampled x0
    // field standardized against that scene should look standard normal.
    const GridShape s{1, 32, 32};
    const Schedule sched = make_schedule(ScheduleKind::linear, 400);
    std::map<std::string, ConditionStats> conds;
    conds["scene"] = {Grid(s, 0.25), Grid(s, 0.8)};
    const GaussianSceneModel model(sched, std::move(conds));

    FusionConfig fc;
    fc.mode = BlendMode::single_g;
    fc.c_g = Condition{"scene"};
    fc.s_g = 1.0;
    fc.seed = 11;
    const Trajectory traj = run_fusion(model, model, fc, sched);

    const MetricReport good = compute_metrics(traj, model, "scene");
    REQUIRE(good.kl_divergence.has_value());
    CHECK(*good.kl_divergence >= 0.0);
    CHECK(*good.kl_divergence < 0.1);

    // Same trajectory standardized against a shifted target distribution.
    const MetricReport bad =
        compute_metrics(traj, Grid(s, 3.0), Grid(s, 0.1));
    CHECK(*bad.kl_divergence > 1.0);
    CHECK(*good.kl_divergence < *bad.kl_divergence);

    // The scene-model overload matches the explicit-stats overload.
    const MetricReport direct = compute_metrics(
        traj, model.stats("scene").mean, model.stats("scene").stddev);
    CHECK(*direct.kl_divergence == *good.kl_divergence);
}
