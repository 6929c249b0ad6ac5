#include "fuse/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fuse/error.hpp"
#include "fuse/grid_io.hpp"

namespace fuse {

Grid analytic_optimal_eps(const Grid& mean, const Grid& stddev,
                          double alpha_bar, const Grid& x_t) {
    require_same_shape(mean.shape(), stddev.shape(), "mean vs stddev");
    require_same_shape(mean.shape(), x_t.shape(), "model stats vs x_t");
    if (!(alpha_bar > 0.0 && alpha_bar < 1.0)) {
        throw ParameterError("alpha_bar must lie in (0, 1) for noise "
                             "prediction, got " +
                             std::to_string(alpha_bar));
    }
    const double sab = std::sqrt(alpha_bar);
    const double one_minus = 1.0 - alpha_bar;
    const double s1m = std::sqrt(one_minus);
    Grid out(x_t.shape());
    for (int i = 0; i < out.size(); ++i) {
        const double var = stddev[i] * stddev[i];
        const double e_x0 = (sab * var * x_t[i] + one_minus * mean[i]) /
                            (alpha_bar * var + one_minus);
        out[i] = (x_t[i] - sab * e_x0) / s1m;
    }
    return out;
}

GaussianSceneModel::GaussianSceneModel(
    Schedule sched, std::map<std::string, ConditionStats> conditions)
    : sched_(std::move(sched)), entries_(std::move(conditions)) {
    if (entries_.empty()) {
        throw ParameterError("scene model needs at least one condition");
    }
    if (entries_.count("NULL")) {
        throw ParameterError("the NULL entry is derived from the conditional "
                             "entries and must not be supplied");
    }
    shape_ = entries_.begin()->second.mean.shape();
    for (const auto& [id, stats] : entries_) {
        require_same_shape(shape_, stats.mean.shape(),
                           ("condition '" + id + "' mean").c_str());
        require_same_shape(shape_, stats.stddev.shape(),
                           ("condition '" + id + "' stddev").c_str());
        for (int i = 0; i < stats.stddev.size(); ++i) {
            if (!(stats.stddev[i] > 0.0)) {
                throw ParameterError("condition '" + id +
                                     "' has non-positive stddev at element " +
                                     std::to_string(i));
            }
        }
    }
    // Equal-weight mixture marginal, moment matched to a Gaussian.
    const double n = static_cast<double>(entries_.size());
    Grid mix_mean(shape_);
    Grid second_moment(shape_);
    for (const auto& [id, stats] : entries_) {
        for (int i = 0; i < mix_mean.size(); ++i) {
            mix_mean[i] += stats.mean[i] / n;
            second_moment[i] +=
                (stats.stddev[i] * stats.stddev[i] + stats.mean[i] * stats.mean[i]) / n;
        }
    }
    Grid mix_std(shape_);
    for (int i = 0; i < mix_std.size(); ++i) {
        mix_std[i] = std::sqrt(second_moment[i] - mix_mean[i] * mix_mean[i]);
    }
    entries_["NULL"] = ConditionStats{std::move(mix_mean), std::move(mix_std)};
}

const ConditionStats& GaussianSceneModel::stats(const std::string& id) const {
    auto it = entries_.find(id);
    if (it == entries_.end()) {
        throw ConditionError("unknown condition '" + id + "'");
    }
    return it->second;
}

std::vector<std::string> GaussianSceneModel::condition_ids() const {
    std::vector<std::string> ids;
    for (const auto& [id, stats] : entries_) ids.push_back(id);
    return ids;
}

Grid GaussianSceneModel::predict(const Grid& x_t, int t,
                                 const Condition& c) const {
    if (t == 0) {
        throw ParameterError("t=0 carries no noise to predict");
    }
    if (t < 1 || t > sched_.T()) {
        throw ParameterError("timestep " + std::to_string(t) +
                             " outside predictor range [1, " +
                             std::to_string(sched_.T()) + "]");
    }
    require_same_shape(shape_, x_t.shape(), "scene model vs x_t");
    const ConditionStats& st = stats(c.id);
    return analytic_optimal_eps(st.mean, st.stddev, sched_.alpha_bar_at(t), x_t);
}

namespace {

Grid grid_from_flat(const nlohmann::json& arr, const GridShape& shape,
                    const std::string& where) {
    if (!arr.is_array() || static_cast<int>(arr.size()) != shape.volume()) {
        throw LoadError(where + ": expected a flat array of " +
                        std::to_string(shape.volume()) + " numbers");
    }
    std::vector<double> v;
    v.reserve(arr.size());
    for (const auto& x : arr) {
        if (!x.is_number()) throw LoadError(where + ": non-numeric entry");
        v.push_back(x.get<double>());
    }
    return Grid(shape, std::move(v));
}

} // namespace

GaussianSceneModel GaussianSceneModel::load_json(
    const std::filesystem::path& path, Schedule sched) {
    std::ifstream f(path);
    if (!f) throw LoadError("cannot open " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
        throw LoadError(path.string() + ": " + e.what());
    }
    const std::string ctx = path.string();
    for (const auto& [key, val] : doc.items()) {
        if (key != "format" && key != "shape" && key != "conditions") {
            throw LoadError(ctx + ": unknown key '" + key + "'");
        }
    }
    if (doc.value("format", "") != "gaussian-scene-v1") {
        throw LoadError(ctx + ": missing or unsupported format tag (expected "
                        "'gaussian-scene-v1')");
    }
    if (!doc.contains("shape") || !doc["shape"].is_array() ||
        doc["shape"].size() != 3) {
        throw LoadError(ctx + ": 'shape' must be [channels, height, width]");
    }
    GridShape shape{doc["shape"][0].get<int>(), doc["shape"][1].get<int>(),
                    doc["shape"][2].get<int>()};
    if (shape.channels < 1 || shape.height < 1 || shape.width < 1) {
        throw LoadError(ctx + ": shape entries must be positive");
    }
    if (!doc.contains("conditions") || !doc["conditions"].is_object() ||
        doc["conditions"].empty()) {
        throw LoadError(ctx + ": 'conditions' must be a non-empty object");
    }
    std::map<std::string, ConditionStats> conditions;
    for (const auto& [id, entry] : doc["conditions"].items()) {
        if (id == "NULL") {
            throw LoadError(ctx + ": the NULL entry is derived and must not "
                            "be stored");
        }
        for (const auto& [key, val] : entry.items()) {
            if (key != "mean" && key != "std") {
                throw LoadError(ctx + ": condition '" + id +
                                "' has unknown key '" + key + "'");
            }
        }
        if (!entry.contains("mean") || !entry.contains("std")) {
            throw LoadError(ctx + ": condition '" + id +
                            "' needs both 'mean' and 'std'");
        }
        conditions[id] = ConditionStats{
            grid_from_flat(entry["mean"], shape, ctx + ": '" + id + "'.mean"),
            grid_from_flat(entry["std"], shape, ctx + ": '" + id + "'.std")};
    }
    return GaussianSceneModel(std::move(sched), std::move(conditions));
}

void save_scene_json(const std::filesystem::path& path, const GridShape& shape,
                     const std::map<std::string, ConditionStats>& conditions) {
    nlohmann::json doc;
    doc["format"] = "gaussian-scene-v1";
    doc["shape"] = {shape.channels, shape.height, shape.width};
    nlohmann::json conds = nlohmann::json::object();
    for (const auto& [id, stats] : conditions) {
        if (id == "NULL") continue;
        conds[id]["mean"] = std::vector<double>(stats.mean.values().begin(),
                                                stats.mean.values().end());
        conds[id]["std"] = std::vector<double>(stats.stddev.values().begin(),
                                               stats.stddev.values().end());
    }
    doc["conditions"] = std::move(conds);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw LoadError("cannot open " + path.string() + " for writing");
    f << doc.dump(2) << "\n";
}

void GaussianSceneModel::save_json(const std::filesystem::path& path) const {
    save_scene_json(path, shape_, entries_);
}

TabulatedPredictor::TabulatedPredictor(
    GridShape shape, int T, int buckets,
    std::map<std::string, std::vector<AffineBlock>> blocks)
    : shape_(shape), T_(T), buckets_(buckets), blocks_(std::move(blocks)) {
    if (shape_.channels < 1 || shape_.height < 1 || shape_.width < 1) {
        throw LoadError("tabulated predictor shape must be positive, got " +
                        shape_.str());
    }
    if (T_ < 1) throw LoadError("tabulated predictor needs timesteps >= 1");
    if (buckets_ < 1) throw LoadError("tabulated predictor needs buckets >= 1");
    if (!blocks_.count("NULL")) {
        throw LoadError("tabulated predictor is missing the NULL condition");
    }
    for (const auto& [id, vec] : blocks_) {
        if (static_cast<int>(vec.size()) != buckets_) {
            throw LoadError("condition '" + id + "' has " +
                            std::to_string(vec.size()) + " blocks, expected " +
                            std::to_string(buckets_));
        }
        for (int b = 0; b < buckets_; ++b) {
            require_same_shape(shape_, vec[b].gain.shape(),
                               ("condition '" + id + "' gain").c_str());
            require_same_shape(shape_, vec[b].bias.shape(),
                               ("condition '" + id + "' bias").c_str());
        }
    }
}

int TabulatedPredictor::bucket_of(int t) const {
    if (t < 1 || t > T_) {
        throw ParameterError("timestep " + std::to_string(t) +
                             " outside predictor range [1, " +
                             std::to_string(T_) + "]");
    }
    const int b = static_cast<int>((static_cast<long long>(t) - 1) * buckets_ / T_);
    return b >= buckets_ ? buckets_ - 1 : b;
}

const TabulatedPredictor::AffineBlock&
TabulatedPredictor::block(const std::string& id, int bucket) const {
    auto it = blocks_.find(id);
    if (it == blocks_.end()) {
        throw ConditionError("unknown condition '" + id + "'");
    }
    if (bucket < 0 || bucket >= buckets_) {
        throw ParameterError("bucket " + std::to_string(bucket) +
                             " outside [0, " + std::to_string(buckets_ - 1) +
                             "]");
    }
    return it->second[static_cast<size_t>(bucket)];
}

std::vector<std::string> TabulatedPredictor::condition_ids() const {
    std::vector<std::string> ids;
    for (const auto& [id, vec] : blocks_) ids.push_back(id);
    return ids;
}

Grid TabulatedPredictor::predict(const Grid& x_t, int t,
                                 const Condition& c) const {
    require_same_shape(shape_, x_t.shape(), "tabulated predictor vs x_t");
    const AffineBlock& ab = block(c.id, bucket_of(t));
    Grid out(shape_);
    for (int i = 0; i < out.size(); ++i) {
        out[i] = ab.gain[i] * x_t[i] + ab.bias[i];
    }
    return out;
}

namespace {

bool valid_token(const std::string& id) {
    if (id.empty()) return false;
    for (char ch : id) {
        const bool ok = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
                        (ch >= '0' && ch <= '9') || ch == '_' || ch == '-' ||
                        ch == '.';
        if (!ok) return false;
    }
    return true;
}

// Line-oriented reader that tracks position for error messages.
struct LineReader {
    std::istream& in;
    std::string src;
    int lineno = 0;

    // Next non-empty line; returns false at EOF.
    bool next(std::string& line) {
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) return true;
        }
        return false;
    }

    std::string where() const { return src + ":" + std::to_string(lineno); }

    [[noreturn]] void fail(const std::string& msg) const {
        throw LoadError(where() + ": " + msg);
    }

    std::string expect(const std::string& what) {
        std::string line;
        if (!next(line)) fail("unexpected end of file, expected " + what);
        return line;
    }
};

Grid read_block_grid(LineReader& r, const GridShape& shape) {
    Grid g(shape);
    for (int c = 0; c < shape.channels; ++c) {
        const std::string header = r.expect("'# channel' header");
        if (header != "# channel " + std::to_string(c)) {
            r.fail("expected '# channel " + std::to_string(c) + "', got '" +
                   header + "'");
        }
        for (int y = 0; y < shape.height; ++y) {
            std::string line = r.expect("a data row");
            std::stringstream row(line);
            std::string field;
            int x = 0;
            while (std::getline(row, field, ',')) {
                if (x >= shape.width) r.fail("row has too many fields");
                try {
                    size_t pos = 0;
                    g.at(c, y, x) = std::stod(field, &pos);
                    if (pos != field.size()) throw std::invalid_argument("junk");
                } catch (const std::exception&) {
                    r.fail("invalid number '" + field + "'");
                }
                ++x;
            }
            if (x != shape.width) {
                r.fail("row has " + std::to_string(x) + " fields, expected " +
                       std::to_string(shape.width));
            }
        }
    }
    return g;
}

int parse_header_int(LineReader& r, const std::string& keyword,
                     const std::string& line) {
    std::stringstream ss(line);
    std::string kw;
    int value = 0;
    if (!(ss >> kw >> value) || kw != keyword || !(ss >> std::ws).eof()) {
        r.fail("expected '" + keyword + " <integer>', got '" + line + "'");
    }
    return value;
}

} // namespace

TabulatedPredictor load_tabulated(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw LoadError("cannot open " + path.string());
    LineReader r{f, path.string()};

    if (r.expect("'tabpred v1' magic") != "tabpred v1") {
        r.fail("not a tabpred v1 file");
    }
    GridShape shape{};
    {
        std::string line = r.expect("'shape C H W'");
        std::stringstream ss(line);
        std::string kw;
        if (!(ss >> kw >> shape.channels >> shape.height >> shape.width) ||
            kw != "shape" || !(ss >> std::ws).eof()) {
            r.fail("expected 'shape C H W', got '" + line + "'");
        }
    }
    const int T = parse_header_int(r, "timesteps", r.expect("'timesteps T'"));
    const int buckets = parse_header_int(r, "buckets", r.expect("'buckets B'"));
    const int ncond =
        parse_header_int(r, "conditions", r.expect("'conditions N'"));
    if (ncond < 1) r.fail("need at least one condition");

    std::set<std::string> declared;
    for (int i = 0; i < ncond; ++i) {
        std::string line = r.expect("'condition <id>'");
        std::stringstream ss(line);
        std::string kw, id;
        if (!(ss >> kw >> id) || kw != "condition" || !(ss >> std::ws).eof()) {
            r.fail("expected 'condition <id>', got '" + line + "'");
        }
        if (!valid_token(id)) r.fail("invalid condition id '" + id + "'");
        if (!declared.insert(id).second) {
            r.fail("duplicate condition '" + id + "'");
        }
    }

    std::map<std::string, std::vector<TabulatedPredictor::AffineBlock>> blocks;
    for (const auto& id : declared) {
        blocks[id].resize(static_cast<size_t>(std::max(buckets, 0)));
    }
    std::set<std::pair<std::string, int>> seen;
    const int expected_blocks = ncond * buckets;
    for (int i = 0; i < expected_blocks; ++i) {
        std::string line = r.expect("'block <id> <bucket>'");
        std::stringstream ss(line);
        std::string kw, id;
        int bucket = -1;
        if (!(ss >> kw >> id >> bucket) || kw != "block" ||
            !(ss >> std::ws).eof()) {
            r.fail("expected 'block <id> <bucket>', got '" + line + "'");
        }
        if (!declared.count(id)) r.fail("undeclared condition '" + id + "'");
        if (bucket < 0 || bucket >= buckets) {
            r.fail("bucket " + std::to_string(bucket) + " outside [0, " +
                   std::to_string(buckets - 1) + "]");
        }
        if (!seen.insert({id, bucket}).second) {
            r.fail("duplicate block for condition '" + id + "' bucket " +
                   std::to_string(bucket));
        }
        if (r.expect("'gain'") != "gain") r.fail("expected 'gain'");
        Grid gain = read_block_grid(r, shape);
        if (r.expect("'bias'") != "bias") r.fail("expected 'bias'");
        Grid bias = read_block_grid(r, shape);
        blocks[id][static_cast<size_t>(bucket)] =
            TabulatedPredictor::AffineBlock{std::move(gain), std::move(bias)};
    }
    if (r.expect("'end'") != "end") r.fail("expected 'end'");
    return TabulatedPredictor(shape, T, buckets, std::move(blocks));
}

void save_tabulated(const TabulatedPredictor& p,
                    const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw LoadError("cannot open " + path.string() + " for writing");
    const auto ids = p.condition_ids();
    for (const auto& id : ids) {
        if (!valid_token(id)) {
            throw LoadError("condition id '" + id +
                            "' cannot be serialized (allowed: [A-Za-z0-9_.-])");
        }
    }
    const GridShape shape = p.shape();
    f << "tabpred v1\n";
    f << "shape " << shape.channels << " " << shape.height << " "
      << shape.width << "\n";
    f << "timesteps " << p.timesteps() << "\n";
    f << "buckets " << p.bucket_count() << "\n";
    f << "conditions " << ids.size() << "\n";
    for (const auto& id : ids) f << "condition " << id << "\n";
    for (const auto& id : ids) {
        for (int b = 0; b < p.bucket_count(); ++b) {
            const auto& blk = p.block(id, b);
            f << "block " << id << " " << b << "\n";
            f << "gain\n";
            write_grid_csv(blk.gain, f);
            f << "bias\n";
            write_grid_csv(blk.bias, f);
        }
    }
    f << "end\n";
}

} // namespace fuse
