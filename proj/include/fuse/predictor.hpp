#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fuse/grid.hpp"
#include "fuse/schedule.hpp"

namespace fuse {

// Condition token. "NULL" is the reserved unconditional branch and is
// accepted by every predictor.
struct Condition {
    std::string id;

    static Condition null() { return {"NULL"}; }
    bool is_null() const { return id == "NULL"; }
    bool operator==(const Condition&) const = default;
};

// Noise predictor contract: estimate the noise component of x_t given a
// condition. Implementations are immutable and predict() is pure, so calls
// may run concurrently.
class NoisePredictor {
public:
    virtual ~NoisePredictor() = default;

    virtual GridShape shape() const = 0;
    virtual int timesteps() const = 0;
    // All accepted condition ids, "NULL" included, sorted.
    virtual std::vector<std::string> condition_ids() const = 0;
    virtual Grid predict(const Grid& x_t, int t, const Condition& c) const = 0;
};

// Per-pixel mean/stddev of a Gaussian data distribution for one condition.
struct ConditionStats {
    Grid mean;
    Grid stddev;
};

// Exact minimum-MSE noise prediction when x0 ~ N(mean, stddev^2) per pixel
// and x_t = sqrt(alpha_bar)*x0 + sqrt(1-alpha_bar)*n. Posterior mean first:
//   E[x0|x_t] = (sqrt(ab)*sigma^2*x_t + (1-ab)*mu) / (ab*sigma^2 + (1-ab))
// then eps = (x_t - sqrt(ab)*E[x0|x_t]) / sqrt(1-ab).
Grid analytic_optimal_eps(const Grid& mean, const Grid& stddev,
                          double alpha_bar, const Grid& x_t);

// Analytic scene model: a handful of named per-pixel Gaussian "scenes". The
// unconditional entry is derived as the moment-matched Gaussian of the equal
// weight mixture over all conditions (mixture mean and variance), mirroring
// how a null prompt averages over the training conditions.
class GaussianSceneModel : public NoisePredictor {
public:
    GaussianSceneModel(Schedule sched,
                       std::map<std::string, ConditionStats> conditions);

    GridShape shape() const override { return shape_; }
    int timesteps() const override { return sched_.T(); }
    Grid predict(const Grid& x_t, int t, const Condition& c) const override;

    // Stats for any condition id, including the derived "NULL" entry.
    const ConditionStats& stats(const std::string& id) const;
    const Schedule& schedule() const { return sched_; }
    std::vector<std::string> condition_ids() const override;

    // JSON scene file: {"format":"gaussian-scene-v1","shape":[C,H,W],
    // "conditions":{id:{"mean":[...],"std":[...]}}} with row-major flat
    // arrays. The NULL entry is always derived, never stored.
    static GaussianSceneModel load_json(const std::filesystem::path& path,
                                        Schedule sched);
    void save_json(const std::filesystem::path& path) const;

    const std::map<std::string, ConditionStats>& entries() const {
        return entries_;
    }

private:
    Schedule sched_;
    GridShape shape_{};
    std::map<std::string, ConditionStats> entries_; // includes derived NULL
};

// Table-driven predictor: (condition id, timestep bucket) -> affine map
// eps = gain (.) x_t + bias. Buckets partition [1, T] uniformly.
class TabulatedPredictor : public NoisePredictor {
public:
    struct AffineBlock {
        Grid gain;
        Grid bias;
    };

    TabulatedPredictor(GridShape shape, int T, int buckets,
                       std::map<std::string, std::vector<AffineBlock>> blocks);

    GridShape shape() const override { return shape_; }
    int timesteps() const override { return T_; }
    int bucket_count() const { return buckets_; }
    // Bucket index for timestep t in [1, T].
    int bucket_of(int t) const;
    Grid predict(const Grid& x_t, int t, const Condition& c) const override;

    const AffineBlock& block(const std::string& id, int bucket) const;
    std::vector<std::string> condition_ids() const override;

private:
    GridShape shape_{};
    int T_ = 0;
    int buckets_ = 0;
    std::map<std::string, std::vector<AffineBlock>> blocks_;
};

// Text format "tabpred v1"; see README for the grammar. Parsing is strict:
// every declared (condition, bucket) block must appear exactly once and the
// NULL condition is mandatory.
TabulatedPredictor load_tabulated(const std::filesystem::path& path);
void save_tabulated(const TabulatedPredictor& p,
                    const std::filesystem::path& path);

// Writes a scene file for a raw condition map (no derived NULL entry).
void save_scene_json(const std::filesystem::path& path, const GridShape& shape,
                     const std::map<std::string, ConditionStats>& conditions);

} // namespace fuse
