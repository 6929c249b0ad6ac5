#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fuse/metrics.hpp"
#include "fuse/sampler.hpp"
#include "fuse/schedule.hpp"

namespace fuse {

struct ModelSpec {
    enum class Type { scene, tabulated, builtin };
    Type type = Type::scene;
    std::filesystem::path path;  // scene / tabulated file, already resolved
    std::string builtin_name;    // builtin only

    bool operator==(const ModelSpec&) const = default;
};

// One swept parameter: name in {s, s_g, s_e, k_g, k_e, w, blur_enabled} and
// the values it takes (blur_enabled uses 0/1).
struct SweepAxis {
    std::string name;
    std::vector<double> values;
};

enum class MetricSelection { moments = 1, kl = 2, mask = 4 };

struct ExperimentSpec {
    ScheduleKind schedule_kind = ScheduleKind::linear;
    int T = 0;
    ModelSpec model_g;
    ModelSpec model_e;
    FusionConfig base; // base.seed is the base seed; per-run seed = base + k
    std::optional<std::filesystem::path> fixed_mask_path;
    int seeds = 1;
    std::vector<SweepAxis> sweep;
    std::filesystem::path output;
    bool dump_steps = false;
    int metric_mask = 7; // bitwise-or of MetricSelection
};

// Strict JSON config parsing: unknown keys are errors naming the key, syntax
// errors carry line/column, relative model/mask paths resolve against the
// config file's directory, and the output directory is re-rooted under
// $FUSE_OUT when that variable is set.
ExperimentSpec parse_config(const std::filesystem::path& path);

// Loads the model a spec refers to; scene models bind the given schedule.
std::unique_ptr<NoisePredictor> load_model(const ModelSpec& spec,
                                           const Schedule& sched);

int sweep_combo_count(const ExperimentSpec& spec);
// Sweep values of one combination, keyed by axis name (combo is row-major in
// axis declaration order, first axis slowest).
std::map<std::string, double> combo_params(const ExperimentSpec& spec,
                                           int combo);
// Base config with one combination's values applied (seed untouched).
FusionConfig combo_config(const ExperimentSpec& spec, int combo);

struct RunResult {
    int combo = 0;
    int seed_index = 0;
    uint64_t seed = 0;
    std::map<std::string, double> params;
    std::filesystem::path dir;
    bool ok = false;
    std::string error;
    MetricReport metrics;
};

struct ExperimentResult {
    std::filesystem::path output;
    std::vector<RunResult> runs; // combo-major order

    bool all_ok() const;
};

// Executes all (combo x seed) runs on a bounded thread pool, writing per-run
// artifacts (x0.csv, x0.pgm, metrics.json, params.json, optional step dirs)
// plus schedule.csv and the aggregate report.csv at the experiment root.
// Per-run failures are recorded, not thrown. Identical specs rewrite
// bit-identical artifacts.
ExperimentResult run_experiment(const ExperimentSpec& spec);

} // namespace fuse
