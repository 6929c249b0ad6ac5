#include "fuse/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "fuse/error.hpp"
#include "fuse/fixtures.hpp"
#include "fuse/grid_io.hpp"

namespace fuse {

namespace {

using ordered_json = nlohmann::ordered_json;

const std::vector<std::string> kSweepAxes = {"s",   "s_g", "s_e",         "k_g",
                                             "k_e", "w",   "blur_enabled"};

void check_keys(const ordered_json& obj, const std::string& ctx,
                std::initializer_list<const char*> allowed) {
    for (const auto& [key, val] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) {
            if (key == a) {
                ok = true;
                break;
            }
        }
        if (!ok) throw ConfigError(ctx + ": unknown key '" + key + "'");
    }
}

const ordered_json& require_key(const ordered_json& obj, const std::string& ctx,
                                const char* key) {
    if (!obj.contains(key)) {
        throw ConfigError(ctx + ": missing required key '" + std::string(key) +
                          "'");
    }
    return obj.at(key);
}

double as_number(const ordered_json& v, const std::string& ctx) {
    if (!v.is_number()) throw ConfigError(ctx + ": expected a number");
    return v.get<double>();
}

int as_int(const ordered_json& v, const std::string& ctx) {
    if (!v.is_number_integer()) throw ConfigError(ctx + ": expected an integer");
    return v.get<int>();
}

bool as_bool(const ordered_json& v, const std::string& ctx) {
    if (!v.is_boolean()) throw ConfigError(ctx + ": expected a boolean");
    return v.get<bool>();
}

std::string as_string(const ordered_json& v, const std::string& ctx) {
    if (!v.is_string() || v.get<std::string>().empty()) {
        throw ConfigError(ctx + ": expected a non-empty string");
    }
    return v.get<std::string>();
}

std::filesystem::path resolve_against(const std::filesystem::path& base,
                                      const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
}

ModelSpec parse_model_spec(const ordered_json& obj, const std::string& ctx,
                           const std::filesystem::path& config_dir) {
    if (!obj.is_object()) throw ConfigError(ctx + ": expected an object");
    check_keys(obj, ctx, {"type", "path", "name"});
    ModelSpec spec;
    const std::string type = as_string(require_key(obj, ctx, "type"), ctx + ".type");
    if (type == "scene") {
        spec.type = ModelSpec::Type::scene;
    } else if (type == "tabulated") {
        spec.type = ModelSpec::Type::tabulated;
    } else if (type == "builtin") {
        spec.type = ModelSpec::Type::builtin;
    } else {
        throw ConfigError(ctx + ".type: unknown model type '" + type +
                          "' (expected scene, tabulated or builtin)");
    }
    if (spec.type == ModelSpec::Type::builtin) {
        if (obj.contains("path")) {
            throw ConfigError(ctx + ": builtin models take 'name', not 'path'");
        }
        spec.builtin_name = as_string(require_key(obj, ctx, "name"), ctx + ".name");
    } else {
        if (obj.contains("name")) {
            throw ConfigError(ctx + ": file-backed models take 'path', not 'name'");
        }
        spec.path = resolve_against(
            config_dir, as_string(require_key(obj, ctx, "path"), ctx + ".path"));
    }
    return spec;
}

} // namespace

ExperimentSpec parse_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open " + path.string());
    ordered_json doc;
    try {
        doc = ordered_json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    const std::string ctx = path.string();
    if (!doc.is_object()) throw ConfigError(ctx + ": config must be a JSON object");
    check_keys(doc, ctx,
               {"schedule", "model_g", "model_e", "condition_g", "condition_e",
                "guidance", "temperature", "salience", "blend", "seed", "seeds",
                "sweep", "output", "diagnostics", "dump_steps", "metrics"});
    const std::filesystem::path config_dir =
        path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");

    ExperimentSpec spec;

    {
        const ordered_json& sch = require_key(doc, ctx, "schedule");
        const std::string sctx = ctx + ": schedule";
        if (!sch.is_object()) throw ConfigError(sctx + ": expected an object");
        check_keys(sch, sctx, {"kind", "T"});
        spec.T = as_int(require_key(sch, sctx, "T"), sctx + ".T");
        if (spec.T < 1) throw ConfigError(sctx + ".T: must be >= 1");
        if (sch.contains("kind")) {
            try {
                spec.schedule_kind =
                    schedule_kind_from_string(as_string(sch["kind"], sctx + ".kind"));
            } catch (const ParameterError& e) {
                throw ConfigError(sctx + ".kind: " + e.what());
            }
        }
    }

    spec.model_g = parse_model_spec(require_key(doc, ctx, "model_g"),
                                    ctx + ": model_g", config_dir);
    spec.model_e = parse_model_spec(require_key(doc, ctx, "model_e"),
                                    ctx + ": model_e", config_dir);
    spec.base.c_g.id =
        as_string(require_key(doc, ctx, "condition_g"), ctx + ": condition_g");
    spec.base.c_e.id =
        as_string(require_key(doc, ctx, "condition_e"), ctx + ": condition_e");

    if (doc.contains("guidance")) {
        const ordered_json& g = doc["guidance"];
        const std::string gctx = ctx + ": guidance";
        if (!g.is_object()) throw ConfigError(gctx + ": expected an object");
        check_keys(g, gctx, {"s", "s_g", "s_e"});
        if (g.contains("s") && (g.contains("s_g") || g.contains("s_e"))) {
            throw ConfigError(gctx + ": give either 's' or 's_g'/'s_e', not both");
        }
        if (g.contains("s")) {
            spec.base.s_g = spec.base.s_e = as_number(g["s"], gctx + ".s");
        }
        if (g.contains("s_g")) spec.base.s_g = as_number(g["s_g"], gctx + ".s_g");
        if (g.contains("s_e")) spec.base.s_e = as_number(g["s_e"], gctx + ".s_e");
        if (spec.base.s_g < 0 || spec.base.s_e < 0) {
            throw ConfigError(gctx + ": guidance scales must be >= 0");
        }
    }

    if (doc.contains("temperature")) {
        const ordered_json& t = doc["temperature"];
        const std::string tctx = ctx + ": temperature";
        if (!t.is_object()) throw ConfigError(tctx + ": expected an object");
        check_keys(t, tctx, {"k", "k_g", "k_e"});
        if (t.contains("k") && (t.contains("k_g") || t.contains("k_e"))) {
            throw ConfigError(tctx + ": give either 'k' or 'k_g'/'k_e', not both");
        }
        if (t.contains("k")) {
            spec.base.k_g = spec.base.k_e = as_number(t["k"], tctx + ".k");
        }
        if (t.contains("k_g")) spec.base.k_g = as_number(t["k_g"], tctx + ".k_g");
        if (t.contains("k_e")) spec.base.k_e = as_number(t["k_e"], tctx + ".k_e");
    }

    if (doc.contains("salience")) {
        const ordered_json& s = doc["salience"];
        const std::string sctx = ctx + ": salience";
        if (!s.is_object()) throw ConfigError(sctx + ": expected an object");
        check_keys(s, sctx,
                   {"blur_enabled", "blur_radius", "blur_sigma", "channel_agg"});
        if (s.contains("blur_enabled")) {
            spec.base.salience.blur_enabled =
                as_bool(s["blur_enabled"], sctx + ".blur_enabled");
        }
        int radius = spec.base.salience.kernel.radius;
        double sigma = spec.base.salience.kernel.sigma;
        if (s.contains("blur_radius")) {
            radius = as_int(s["blur_radius"], sctx + ".blur_radius");
        }
        if (s.contains("blur_sigma")) {
            sigma = as_number(s["blur_sigma"], sctx + ".blur_sigma");
        }
        try {
            spec.base.salience.kernel = BlurKernel::gaussian(radius, sigma);
        } catch (const ParameterError& e) {
            throw ConfigError(sctx + ": " + e.what());
        }
        if (s.contains("channel_agg")) {
            try {
                spec.base.salience.channel_agg = channel_agg_from_string(
                    as_string(s["channel_agg"], sctx + ".channel_agg"));
            } catch (const ParameterError& e) {
                throw ConfigError(sctx + ".channel_agg: " + e.what());
            }
        }
    }

    if (doc.contains("blend")) {
        const ordered_json& b = doc["blend"];
        const std::string bctx = ctx + ": blend";
        if (!b.is_object()) throw ConfigError(bctx + ": expected an object");
        check_keys(b, bctx, {"mode", "w", "mask"});
        if (b.contains("mode")) {
            try {
                spec.base.mode =
                    blend_mode_from_string(as_string(b["mode"], bctx + ".mode"));
            } catch (const ParameterError& e) {
                throw ConfigError(bctx + ".mode: " + e.what());
            }
        }
        if (b.contains("w")) {
            if (spec.base.mode != BlendMode::weighted_sum) {
                throw ConfigError(bctx + ".w: only valid for weighted_sum mode");
            }
            spec.base.weighted_w = as_number(b["w"], bctx + ".w");
            if (!(spec.base.weighted_w >= 0.0 && spec.base.weighted_w <= 1.0)) {
                throw ConfigError(bctx + ".w: must lie in [0, 1]");
            }
        }
        if (spec.base.mode == BlendMode::fixed_mask) {
            spec.fixed_mask_path = resolve_against(
                config_dir, as_string(require_key(b, bctx, "mask"), bctx + ".mask"));
        } else if (b.contains("mask")) {
            throw ConfigError(bctx + ".mask: only valid for fixed_mask mode");
        }
    }

    if (doc.contains("seed")) {
        const ordered_json& s = doc["seed"];
        if (!s.is_number_integer() ||
            (s.is_number_integer() && !s.is_number_unsigned() &&
             s.get<long long>() < 0)) {
            throw ConfigError(ctx + ": seed: expected a non-negative integer");
        }
        spec.base.seed = s.get<uint64_t>();
    }
    if (doc.contains("seeds")) {
        spec.seeds = as_int(doc["seeds"], ctx + ": seeds");
        if (spec.seeds < 1) throw ConfigError(ctx + ": seeds: must be >= 1");
    }

    if (doc.contains("sweep")) {
        const ordered_json& sw = doc["sweep"];
        const std::string swctx = ctx + ": sweep";
        if (!sw.is_object()) throw ConfigError(swctx + ": expected an object");
        for (const auto& [axis, values] : sw.items()) {
            if (std::find(kSweepAxes.begin(), kSweepAxes.end(), axis) ==
                kSweepAxes.end()) {
                throw ConfigError(swctx + ": unknown axis '" + axis + "'");
            }
            if (axis == "w" && spec.base.mode != BlendMode::weighted_sum) {
                throw ConfigError(swctx +
                                  ".w: only valid for weighted_sum mode");
            }
            if (!values.is_array() || values.empty()) {
                throw ConfigError(swctx + "." + axis +
                                  ": expected a non-empty array");
            }
            SweepAxis sa;
            sa.name = axis;
            for (const auto& v : values) {
                const std::string vctx = swctx + "." + axis;
                if (axis == "blur_enabled") {
                    sa.values.push_back(as_bool(v, vctx) ? 1.0 : 0.0);
                } else {
                    const double x = as_number(v, vctx);
                    if ((axis == "s" || axis == "s_g" || axis == "s_e") && x < 0) {
                        throw ConfigError(vctx + ": guidance scales must be >= 0");
                    }
                    if (axis == "w" && !(x >= 0.0 && x <= 1.0)) {
                        throw ConfigError(vctx + ": must lie in [0, 1]");
                    }
                    sa.values.push_back(x);
                }
            }
            spec.sweep.push_back(std::move(sa));
        }
    }

    std::string output = "out";
    if (doc.contains("output")) {
        output = as_string(doc["output"], ctx + ": output");
    }
    if (const char* env_root = std::getenv("FUSE_OUT")) {
        // fs::operator/ keeps an absolute right-hand side as-is, which means
        // an absolute config output path intentionally wins over FUSE_OUT.
        spec.output = std::filesystem::path(env_root) / output;
    } else {
        spec.output = output;
    }

    if (doc.contains("diagnostics")) {
        spec.base.keep_diagnostics = as_bool(doc["diagnostics"], ctx + ": diagnostics");
    }
    if (doc.contains("dump_steps")) {
        spec.dump_steps = as_bool(doc["dump_steps"], ctx + ": dump_steps");
    }
    if (doc.contains("metrics")) {
        const ordered_json& m = doc["metrics"];
        if (!m.is_array()) throw ConfigError(ctx + ": metrics: expected an array");
        spec.metric_mask = 0;
        for (const auto& v : m) {
            const std::string name = as_string(v, ctx + ": metrics");
            if (name == "moments") {
                spec.metric_mask |= static_cast<int>(MetricSelection::moments);
            } else if (name == "kl") {
                spec.metric_mask |= static_cast<int>(MetricSelection::kl);
            } else if (name == "mask") {
                spec.metric_mask |= static_cast<int>(MetricSelection::mask);
            } else {
                throw ConfigError(ctx + ": metrics: unknown metric '" + name +
                                  "' (expected moments, kl or mask)");
            }
        }
    }
    return spec;
}

std::unique_ptr<NoisePredictor> load_model(const ModelSpec& spec,
                                           const Schedule& sched) {
    switch (spec.type) {
    case ModelSpec::Type::scene:
        return std::make_unique<GaussianSceneModel>(
            GaussianSceneModel::load_json(spec.path, sched));
    case ModelSpec::Type::tabulated:
        return std::make_unique<TabulatedPredictor>(load_tabulated(spec.path));
    case ModelSpec::Type::builtin:
        if (spec.builtin_name == "two-region-g") {
            return std::make_unique<GaussianSceneModel>(sched,
                                                        two_region_conditions_g());
        }
        if (spec.builtin_name == "two-region-e") {
            return std::make_unique<GaussianSceneModel>(sched,
                                                        two_region_conditions_e());
        }
        if (spec.builtin_name == "single-gaussian") {
            return std::make_unique<GaussianSceneModel>(
                sched, single_gaussian_conditions());
        }
        if (spec.builtin_name == "spike-g") {
            return std::make_unique<TabulatedPredictor>(
                spike_tabulated_g(sched.T()));
        }
        if (spec.builtin_name == "spike-e") {
            return std::make_unique<TabulatedPredictor>(
                spike_tabulated_e(sched.T()));
        }
        throw ConfigError("unknown builtin model '" + spec.builtin_name +
                          "' (available: two-region-g, two-region-e, "
                          "single-gaussian, spike-g, spike-e)");
    }
    throw ConfigError("invalid model spec");
}

int sweep_combo_count(const ExperimentSpec& spec) {
    int n = 1;
    for (const auto& axis : spec.sweep) {
        n *= static_cast<int>(axis.values.size());
    }
    return n;
}

std::map<std::string, double> combo_params(const ExperimentSpec& spec,
                                           int combo) {
    if (combo < 0 || combo >= sweep_combo_count(spec)) {
        throw ParameterError("combo index " + std::to_string(combo) +
                             " out of range");
    }
    std::map<std::string, double> out;
    int rem = combo;
    for (auto it = spec.sweep.rbegin(); it != spec.sweep.rend(); ++it) {
        const int n = static_cast<int>(it->values.size());
        out[it->name] = it->values[static_cast<size_t>(rem % n)];
        rem /= n;
    }
    return out;
}

FusionConfig combo_config(const ExperimentSpec& spec, int combo) {
    FusionConfig fc = spec.base;
    for (const auto& [name, value] : combo_params(spec, combo)) {
        if (name == "s") {
            fc.s_g = fc.s_e = value;
        } else if (name == "s_g") {
            fc.s_g = value;
        } else if (name == "s_e") {
            fc.s_e = value;
        } else if (name == "k_g") {
            fc.k_g = value;
        } else if (name == "k_e") {
            fc.k_e = value;
        } else if (name == "w") {
            fc.weighted_w = value;
        } else if (name == "blur_enabled") {
            fc.salience.blur_enabled = value != 0.0;
        }
    }
    return fc;
}

bool ExperimentResult::all_ok() const {
    return std::all_of(runs.begin(), runs.end(),
                       [](const RunResult& r) { return r.ok; });
}

namespace {

std::string run_dir_name(int combo, int seed_index) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "run_%03d_%03d", combo, seed_index);
    return buf;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

ordered_json metrics_json(const MetricReport& m, int metric_mask) {
    ordered_json j = ordered_json::object();
    if (metric_mask & static_cast<int>(MetricSelection::moments)) {
        j["channel_mean"] = m.channel_mean;
        j["channel_std"] = m.channel_std;
    }
    if ((metric_mask & static_cast<int>(MetricSelection::kl)) &&
        m.kl_divergence) {
        j["kl_divergence"] = *m.kl_divergence;
    }
    if ((metric_mask & static_cast<int>(MetricSelection::mask)) &&
        m.mask_coverage) {
        j["mask_coverage"] = *m.mask_coverage;
        j["mask_coverage_late"] = *m.mask_coverage_late;
        j["mask_stability"] = *m.mask_stability;
        j["coverage_per_step"] = m.coverage_per_step;
    }
    return j;
}

void dump_trajectory(const Trajectory& traj, const std::filesystem::path& dir,
                     bool dump_steps) {
    if (dump_steps) {
        for (const auto& entry : traj.entries) {
            if (entry.t == 0) continue;
            const std::filesystem::path sdir =
                dir / ("step_" + std::to_string(entry.t));
            std::filesystem::create_directories(sdir);
            write_grid_csv(entry.x, sdir / "x.csv");
            if (entry.diag) {
                write_pgm(entry.diag->mask, sdir / "mask.pgm");
                if (entry.diag->lambda_g) {
                    write_pgm(*entry.diag->lambda_g, sdir / "salience_g.pgm");
                }
                if (entry.diag->lambda_e) {
                    write_pgm(*entry.diag->lambda_e, sdir / "salience_e.pgm");
                }
            }
        }
    }
    write_grid_csv(traj.x0(), dir / "x0.csv");
    write_pgm(traj.x0(), dir / "x0.pgm");
}

} // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec) {
    const Schedule sched = make_schedule(spec.schedule_kind, spec.T);
    std::unique_ptr<NoisePredictor> model_g;
    std::unique_ptr<NoisePredictor> model_e;
    try {
        model_g = load_model(spec.model_g, sched);
        model_e = load_model(spec.model_e, sched);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }

    require_same_shape(model_g->shape(), model_e->shape(), "model_g vs model_e");
    for (const auto* m : {model_g.get(), model_e.get()}) {
        if (m->timesteps() != sched.T()) {
            throw ConfigError("model supports T=" +
                              std::to_string(m->timesteps()) +
                              " but the schedule has T=" +
                              std::to_string(sched.T()));
        }
    }
    auto check_condition = [](const NoisePredictor& m, const std::string& id,
                              const char* which) {
        const auto ids = m.condition_ids();
        if (std::find(ids.begin(), ids.end(), id) == ids.end()) {
            throw ConfigError(std::string(which) + " '" + id +
                              "' is not a condition of the model");
        }
    };
    check_condition(*model_g, spec.base.c_g.id, "condition_g");
    check_condition(*model_e, spec.base.c_e.id, "condition_e");

    ExperimentSpec local = spec;
    if (spec.base.mode == BlendMode::fixed_mask) {
        if (!spec.fixed_mask_path) {
            throw ConfigError("fixed_mask mode requires a mask path");
        }
        BlendMask mask;
        try {
            mask = read_mask_csv(*spec.fixed_mask_path);
        } catch (const Error& e) {
            throw ConfigError(e.what());
        }
        if (mask.height() != model_g->shape().height ||
            mask.width() != model_g->shape().width) {
            throw ConfigError("fixed mask is " + std::to_string(mask.height()) +
                              "x" + std::to_string(mask.width()) +
                              " but models are " + model_g->shape().str());
        }
        local.base.fixed_mask = std::move(mask);
    }

    // The KL metric needs a single analytic target; that exists exactly when
    // both sides are the same scene model and condition.
    const GaussianSceneModel* kl_target = nullptr;
    if ((spec.metric_mask & static_cast<int>(MetricSelection::kl)) &&
        spec.model_g == spec.model_e && spec.base.c_g.id == spec.base.c_e.id) {
        kl_target = dynamic_cast<const GaussianSceneModel*>(model_g.get());
    }

    std::filesystem::create_directories(local.output);
    sched.dump_csv(local.output / "schedule.csv");

    const int ncombo = sweep_combo_count(local);
    const int nruns = ncombo * local.seeds;
    ExperimentResult result;
    result.output = local.output;
    result.runs.resize(static_cast<size_t>(nruns));

    auto execute = [&](int index) {
        const int combo = index / local.seeds;
        const int seed_index = index % local.seeds;
        RunResult& r = result.runs[static_cast<size_t>(index)];
        r.combo = combo;
        r.seed_index = seed_index;
        r.seed = local.base.seed + static_cast<uint64_t>(seed_index);
        r.params = combo_params(local, combo);
        r.dir = local.output / run_dir_name(combo, seed_index);
        try {
            FusionConfig fc = combo_config(local, combo);
            fc.seed = r.seed;
            std::filesystem::create_directories(r.dir);
            const Trajectory traj = run_fusion(*model_g, *model_e, fc, sched);
            r.metrics = kl_target ? compute_metrics(traj, *kl_target,
                                                    local.base.c_g.id)
                                  : compute_metrics(traj);
            dump_trajectory(traj, r.dir, local.dump_steps);

            ordered_json params;
            params["combo"] = combo;
            params["seed_index"] = seed_index;
            params["seed"] = r.seed;
            params["schedule"] = to_string(local.schedule_kind);
            params["T"] = local.T;
            params["mode"] = to_string(fc.mode);
            params["condition_g"] = fc.c_g.id;
            params["condition_e"] = fc.c_e.id;
            params["s_g"] = fc.s_g;
            params["s_e"] = fc.s_e;
            params["k_g"] = fc.k_g;
            params["k_e"] = fc.k_e;
            if (fc.mode == BlendMode::weighted_sum) params["w"] = fc.weighted_w;
            params["blur_enabled"] = fc.salience.blur_enabled;
            params["swept"] = r.params;
            std::ofstream pf(r.dir / "params.json", std::ios::binary);
            pf << params.dump(2) << "\n";

            std::ofstream mf(r.dir / "metrics.json", std::ios::binary);
            mf << metrics_json(r.metrics, local.metric_mask).dump(2) << "\n";
            r.ok = true;
        } catch (const std::exception& e) {
            r.ok = false;
            r.error = e.what();
        }
    };

    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    const int workers = std::min<int>(static_cast<int>(hw), nruns);
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= nruns) return;
                execute(i);
            }
        });
    }
    for (auto& th : pool) th.join();

    const int channels = model_g->shape().channels;
    std::ofstream report(local.output / "report.csv", std::ios::binary);
    if (!report) {
        throw Error("cannot open " + (local.output / "report.csv").string() +
                    " for writing");
    }
    report << "run,combo,seed_index,seed";
    for (const auto& axis : local.sweep) report << "," << axis.name;
    report << ",status,error";
    for (int c = 0; c < channels; ++c) {
        report << ",mean_c" << c << ",std_c" << c;
    }
    report << ",kl,mask_coverage,mask_coverage_late,mask_stability\n";
    for (const auto& r : result.runs) {
        report << r.dir.filename().string() << "," << r.combo << ","
               << r.seed_index << "," << r.seed;
        for (const auto& axis : local.sweep) {
            report << "," << format_double(r.params.at(axis.name));
        }
        report << "," << (r.ok ? "ok" : "failed") << "," << csv_escape(r.error);
        for (int c = 0; c < channels; ++c) {
            if (r.ok) {
                report << "," << format_double(r.metrics.channel_mean[static_cast<size_t>(c)])
                       << "," << format_double(r.metrics.channel_std[static_cast<size_t>(c)]);
            } else {
                report << ",,";
            }
        }
        auto opt_field = [&](const std::optional<double>& v) {
            report << ",";
            if (r.ok && v) report << format_double(*v);
        };
        opt_field(r.metrics.kl_divergence);
        opt_field(r.metrics.mask_coverage);
        opt_field(r.metrics.mask_coverage_late);
        opt_field(r.metrics.mask_stability);
        report << "\n";
    }
    return result;
}

} // namespace fuse
