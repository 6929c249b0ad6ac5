#include "fuse/fixtures.hpp"

#include <fstream>

#include <json.hpp>

#include "fuse/error.hpp"
#include "fuse/rng.hpp"

namespace fuse {

namespace {

constexpr double kRegionMean = 1.0;
constexpr double kRegionStd = 0.4;

// mean = value on the selected half (columns [x0, x1)), 0 elsewhere.
ConditionStats half_plane_stats(int x0, int x1) {
    Grid mean(kFixtureShape);
    for (int y = 0; y < kFixtureShape.height; ++y) {
        for (int x = x0; x < x1; ++x) mean.at(0, y, x) = kRegionMean;
    }
    return {std::move(mean), Grid(kFixtureShape, kRegionStd)};
}

Grid half_plane_bias(int x0, int x1) {
    Grid bias(kFixtureShape);
    for (int y = 0; y < kFixtureShape.height; ++y) {
        for (int x = x0; x < x1; ++x) bias.at(0, y, x) = 1.0;
    }
    return bias;
}

TabulatedPredictor make_spike_predictor(int T, const std::string& cond,
                                        Grid bias) {
    std::map<std::string, std::vector<TabulatedPredictor::AffineBlock>> blocks;
    blocks["NULL"].push_back(
        {Grid(kFixtureShape), Grid(kFixtureShape)});
    blocks[cond].push_back({Grid(kFixtureShape), std::move(bias)});
    return TabulatedPredictor(kFixtureShape, T, 1, std::move(blocks));
}

} // namespace

std::map<std::string, ConditionStats> two_region_conditions_g() {
    std::map<std::string, ConditionStats> m;
    m["left"] = half_plane_stats(0, kFixtureShape.width / 2);
    m["background"] = {Grid(kFixtureShape), Grid(kFixtureShape, kRegionStd)};
    return m;
}

std::map<std::string, ConditionStats> two_region_conditions_e() {
    std::map<std::string, ConditionStats> m;
    m["right"] = half_plane_stats(kFixtureShape.width / 2, kFixtureShape.width);
    m["background"] = {Grid(kFixtureShape), Grid(kFixtureShape, kRegionStd)};
    return m;
}

std::map<std::string, ConditionStats> single_gaussian_conditions() {
    CounterRng rng(42, 7);
    Grid mean(kFixtureShape);
    Grid stddev(kFixtureShape);
    for (int i = 0; i < mean.size(); ++i) {
        mean[i] = -1.0 + 2.0 * rng.uniform();
        stddev[i] = 0.3 + 0.7 * rng.uniform();
    }
    std::map<std::string, ConditionStats> m;
    m["scene"] = {std::move(mean), std::move(stddev)};
    return m;
}

TabulatedPredictor spike_tabulated_g(int T) {
    return make_spike_predictor(T, "plateau",
                                half_plane_bias(0, kFixtureShape.width / 2));
}

TabulatedPredictor spike_tabulated_e(int T) {
    Grid bias = half_plane_bias(kFixtureShape.width / 2, kFixtureShape.width);
    bias.at(0, kSpikeY, kSpikeX) = 3.0;
    return make_spike_predictor(T, "spike", std::move(bias));
}

std::vector<std::string> builtin_fixture_names() {
    return {"two-region", "single-gaussian", "spike"};
}

namespace {

void write_json(const std::filesystem::path& path,
                const nlohmann::ordered_json& doc) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw LoadError("cannot open " + path.string() + " for writing");
    f << doc.dump(2) << "\n";
}

nlohmann::ordered_json model_ref(const std::string& type,
                                 const std::string& path) {
    return {{"type", type}, {"path", path}};
}

void export_two_region(const std::filesystem::path& dir) {
    save_scene_json(dir / "scene_g.json", kFixtureShape,
                    two_region_conditions_g());
    save_scene_json(dir / "scene_e.json", kFixtureShape,
                    two_region_conditions_e());
    nlohmann::ordered_json cfg{
        {"schedule", {{"kind", "linear"}, {"T", 50}}},
        {"model_g", model_ref("scene", "scene_g.json")},
        {"model_e", model_ref("scene", "scene_e.json")},
        {"condition_g", "left"},
        {"condition_e", "right"},
        {"guidance", {{"s", 1.0}}},
        {"temperature", {{"k_g", 100.0}, {"k_e", 100.0}}},
        {"blend", {{"mode", "snb"}}},
        {"seed", 1},
        {"seeds", 4},
        {"output", "out/two-region-snb"},
    };
    write_json(dir / "config_snb.json", cfg);
    cfg["blend"] = {{"mode", "weighted_sum"}, {"w", 0.5}};
    cfg["output"] = "out/two-region-weighted";
    write_json(dir / "config_weighted.json", cfg);
}

void export_single_gaussian(const std::filesystem::path& dir) {
    save_scene_json(dir / "scene.json", kFixtureShape,
                    single_gaussian_conditions());
    nlohmann::ordered_json cfg{
        {"schedule", {{"kind", "linear"}, {"T", 200}}},
        {"model_g", model_ref("scene", "scene.json")},
        {"model_e", model_ref("scene", "scene.json")},
        {"condition_g", "scene"},
        {"condition_e", "scene"},
        {"guidance", {{"s", 1.0}}},
        {"blend", {{"mode", "single_g"}}},
        {"seed", 0},
        {"seeds", 4},
        {"output", "out/single-gaussian"},
    };
    write_json(dir / "config.json", cfg);
}

void export_spike(const std::filesystem::path& dir) {
    const int T = 10;
    save_tabulated(spike_tabulated_g(T), dir / "model_g.tab");
    save_tabulated(spike_tabulated_e(T), dir / "model_e.tab");
    nlohmann::ordered_json cfg{
        {"schedule", {{"kind", "linear"}, {"T", T}}},
        {"model_g", model_ref("tabulated", "model_g.tab")},
        {"model_e", model_ref("tabulated", "model_e.tab")},
        {"condition_g", "plateau"},
        {"condition_e", "spike"},
        {"guidance", {{"s", 1.0}}},
        {"temperature", {{"k_g", 2.0}, {"k_e", 2.0}}},
        {"salience", {{"blur_enabled", true}}},
        {"blend", {{"mode", "snb"}}},
        {"seed", 0},
        {"dump_steps", true},
        {"output", "out/spike-blur-on"},
    };
    write_json(dir / "config_blur_on.json", cfg);
    cfg["salience"] = {{"blur_enabled", false}};
    cfg["output"] = "out/spike-blur-off";
    write_json(dir / "config_blur_off.json", cfg);
}

} // namespace

std::filesystem::path export_fixture(const std::string& name,
                                     const std::filesystem::path& root) {
    const std::filesystem::path dir = root / name;
    std::filesystem::create_directories(dir);
    if (name == "two-region") {
        export_two_region(dir);
    } else if (name == "single-gaussian") {
        export_single_gaussian(dir);
    } else if (name == "spike") {
        export_spike(dir);
    } else {
        std::string known;
        for (const auto& n : builtin_fixture_names()) {
            if (!known.empty()) known += ", ";
            known += n;
        }
        throw ParameterError("unknown fixture '" + name + "' (available: " +
                             known + ")");
    }
    return dir;
}

} // namespace fuse
