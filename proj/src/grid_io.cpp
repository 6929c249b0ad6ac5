#include "fuse/grid_io.hpp"

#include <algorithm>
#include <charconv>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

namespace fuse {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_grid_csv(const Grid& g, std::ostream& out) {
    for (int c = 0; c < g.channels(); ++c) {
        out << "# channel " << c << "\n";
        for (int y = 0; y < g.height(); ++y) {
            for (int x = 0; x < g.width(); ++x) {
                if (x) out << ",";
                out << format_double(g.at(c, y, x));
            }
            out << "\n";
        }
    }
}

void write_grid_csv(const Grid& g, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw LoadError("cannot open " + path.string() + " for writing");
    write_grid_csv(g, f);
}

static double parse_double_field(const std::string& field, const std::string& where) {
    try {
        size_t pos = 0;
        double v = std::stod(field, &pos);
        while (pos < field.size() && std::isspace(static_cast<unsigned char>(field[pos]))) ++pos;
        if (pos != field.size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        throw LoadError(where + ": invalid number '" + field + "'");
    }
}

Grid read_grid_csv(std::istream& in, const std::string& source_name) {
    std::vector<std::vector<double>> channels; // flattened per channel
    std::vector<double>* current = nullptr;
    int width = -1;
    std::string line;
    int lineno = 0;
    auto where = [&] { return source_name + ":" + std::to_string(lineno); };
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.rfind("# channel ", 0) == 0) {
            int idx = -1;
            try {
                idx = std::stoi(line.substr(10));
            } catch (const std::exception&) {
                throw LoadError(where() + ": malformed channel header '" + line + "'");
            }
            if (idx != static_cast<int>(channels.size())) {
                throw LoadError(where() + ": expected channel " +
                                std::to_string(channels.size()) + ", got " + line);
            }
            channels.emplace_back();
            current = &channels.back();
            continue;
        }
        if (line[0] == '#') continue; // other comments tolerated
        if (!current) throw LoadError(where() + ": data before first channel header");
        std::stringstream row(line);
        std::string field;
        int count = 0;
        while (std::getline(row, field, ',')) {
            current->push_back(parse_double_field(field, where()));
            ++count;
        }
        if (width < 0) width = count;
        if (count != width) {
            throw LoadError(where() + ": row has " + std::to_string(count) +
                            " fields, expected " + std::to_string(width));
        }
    }
    if (channels.empty()) throw LoadError(source_name + ": no channel blocks found");
    const size_t per_channel = channels[0].size();
    for (size_t c = 0; c < channels.size(); ++c) {
        if (channels[c].size() != per_channel) {
            throw LoadError(source_name + ": channel " + std::to_string(c) +
                            " has a different element count than channel 0");
        }
    }
    if (per_channel == 0 || width <= 0 || per_channel % width != 0) {
        throw LoadError(source_name + ": inconsistent row/column layout");
    }
    const int height = static_cast<int>(per_channel) / width;
    std::vector<double> values;
    values.reserve(channels.size() * per_channel);
    for (const auto& c : channels) values.insert(values.end(), c.begin(), c.end());
    return Grid({static_cast<int>(channels.size()), height, width}, std::move(values));
}

Grid read_grid_csv(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw LoadError("cannot open " + path.string());
    return read_grid_csv(f, path.string());
}

static void write_pgm_raw(const std::vector<double>& v, int h, int w,
                          const std::filesystem::path& path, const std::string& note) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (double x : v) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    const double span = hi - lo;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw LoadError("cannot open " + path.string() + " for writing");
    f << "P5\n" << w << " " << h << "\n255\n";
    for (double x : v) {
        int byte = span > 0.0 ? static_cast<int>(std::lround((x - lo) / span * 255.0)) : 0;
        f.put(static_cast<char>(std::clamp(byte, 0, 255)));
    }
    std::ofstream side(path.string() + ".txt", std::ios::binary);
    side << "min " << format_double(lo) << "\n"
         << "max " << format_double(hi) << "\n"
         << "mapping affine [min,max] -> [0,255]\n";
    if (!note.empty()) side << "note " << note << "\n";
}

void write_pgm(const Grid& g, const std::filesystem::path& path) {
    const int n = g.height() * g.width();
    std::vector<double> v(static_cast<size_t>(n), 0.0);
    for (int c = 0; c < g.channels(); ++c)
        for (int i = 0; i < n; ++i) v[i] += g[c * n + i];
    for (double& x : v) x /= g.channels();
    write_pgm_raw(v, g.height(), g.width(), path,
                  g.channels() > 1 ? "channel mean of " + g.shape().str() : "");
}

void write_pgm(const SalienceMap& m, const std::filesystem::path& path) {
    write_pgm_raw({m.values().begin(), m.values().end()}, m.height(), m.width(), path, "");
}

void write_pgm(const BlendMask& m, const std::filesystem::path& path) {
    std::vector<double> v(m.values().begin(), m.values().end());
    write_pgm_raw(v, m.height(), m.width(), path, "binary mask");
}

BlendMask read_mask_csv(const std::filesystem::path& path) {
    Grid g = read_grid_csv(path);
    if (g.channels() != 1) {
        throw LoadError(path.string() + ": mask must be single-channel, got " +
                        g.shape().str());
    }
    BlendMask mask(g.height(), g.width());
    for (int i = 0; i < g.size(); ++i) {
        if (g[i] != 0.0 && g[i] != 1.0) {
            throw LoadError(path.string() + ": mask entry " + std::to_string(i) +
                            " is " + format_double(g[i]) + ", expected 0 or 1");
        }
        mask[i] = g[i] == 1.0 ? 1 : 0;
    }
    return mask;
}

void write_mask_csv(const BlendMask& m, const std::filesystem::path& path) {
    Grid g({1, m.height(), m.width()});
    for (int i = 0; i < m.size(); ++i) g[i] = m[i];
    write_grid_csv(g, path);
}

} // namespace fuse
