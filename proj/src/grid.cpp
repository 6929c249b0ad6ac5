#include "fuse/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace fuse {

std::string GridShape::str() const {
    return std::to_string(channels) + "x" + std::to_string(height) + "x" +
           std::to_string(width);
}

void require_same_shape(const GridShape& a, const GridShape& b, const char* what) {
    if (!(a == b)) {
        throw DimensionError(std::string(what) + ": shape mismatch " + a.str() +
                             " vs " + b.str());
    }
}

static void require_positive_shape(const GridShape& s) {
    if (s.channels <= 0 || s.height <= 0 || s.width <= 0) {
        throw DimensionError("grid dimensions must be positive, got " + s.str());
    }
}

Grid::Grid(GridShape shape, double fill) : shape_(shape) {
    require_positive_shape(shape);
    v_.assign(static_cast<size_t>(shape.volume()), fill);
}

Grid::Grid(GridShape shape, std::vector<double> values)
    : shape_(shape), v_(std::move(values)) {
    require_positive_shape(shape);
    if (static_cast<int>(v_.size()) != shape.volume()) {
        throw DimensionError("grid value count " + std::to_string(v_.size()) +
                             " does not match shape " + shape.str());
    }
}

bool Grid::all_finite() const {
    return std::all_of(v_.begin(), v_.end(),
                       [](double x) { return std::isfinite(x); });
}

SalienceMap::SalienceMap(int height, int width, double fill)
    : height_(height), width_(width) {
    if (height <= 0 || width <= 0) {
        throw DimensionError("salience map dimensions must be positive");
    }
    v_.assign(static_cast<size_t>(height) * width, fill);
}

SalienceMap::SalienceMap(int height, int width, std::vector<double> values)
    : height_(height), width_(width), v_(std::move(values)) {
    if (height <= 0 || width <= 0) {
        throw DimensionError("salience map dimensions must be positive");
    }
    if (static_cast<int>(v_.size()) != height * width) {
        throw DimensionError("salience map value count does not match " +
                             std::to_string(height) + "x" + std::to_string(width));
    }
}

double SalienceMap::sum() const {
    return std::accumulate(v_.begin(), v_.end(), 0.0);
}

BlendMask::BlendMask(int height, int width, uint8_t fill)
    : height_(height), width_(width) {
    if (height <= 0 || width <= 0) {
        throw DimensionError("blend mask dimensions must be positive");
    }
    v_.assign(static_cast<size_t>(height) * width, fill);
}

double BlendMask::coverage() const {
    size_t ones = 0;
    for (uint8_t m : v_) ones += m;
    return static_cast<double>(ones) / static_cast<double>(v_.size());
}

BlurKernel BlurKernel::gaussian(int radius, double sigma) {
    if (radius < 0) throw ParameterError("blur radius must be non-negative");
    if (!(sigma > 0.0)) throw ParameterError("blur sigma must be positive");
    BlurKernel k;
    k.radius = radius;
    k.sigma = sigma;
    const int w = k.width();
    k.weights.resize(static_cast<size_t>(w) * w);
    double sum = 0.0;
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            double v = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            k.weights[(dy + radius) * w + (dx + radius)] = v;
            sum += v;
        }
    }
    for (double& v : k.weights) v /= sum;
    return k;
}

Grid add(const Grid& a, const Grid& b) {
    require_same_shape(a.shape(), b.shape(), "add");
    Grid out(a.shape());
    for (int i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

Grid sub(const Grid& a, const Grid& b) {
    require_same_shape(a.shape(), b.shape(), "sub");
    Grid out(a.shape());
    for (int i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

Grid mul(const Grid& a, const Grid& b) {
    require_same_shape(a.shape(), b.shape(), "mul");
    Grid out(a.shape());
    for (int i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

Grid scale(const Grid& a, double s) {
    Grid out(a.shape());
    for (int i = 0; i < a.size(); ++i) out[i] = a[i] * s;
    return out;
}

Grid abs(const Grid& a) {
    Grid out(a.shape());
    for (int i = 0; i < a.size(); ++i) out[i] = std::fabs(a[i]);
    return out;
}

static int clamp_index(int i, int n) {
    return std::clamp(i, 0, n - 1);
}

Grid gaussian_blur(const Grid& g, const BlurKernel& kernel) {
    const int h = g.height(), w = g.width(), r = kernel.radius;
    if (r >= std::min(h, w)) {
        throw DimensionError("blur radius " + std::to_string(r) +
                             " too large for grid " + g.shape().str());
    }
    Grid out(g.shape());
    for (int c = 0; c < g.channels(); ++c) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double acc = 0.0;
                for (int dy = -r; dy <= r; ++dy) {
                    const int yy = clamp_index(y + dy, h);
                    for (int dx = -r; dx <= r; ++dx) {
                        const int xx = clamp_index(x + dx, w);
                        acc += kernel.weight(dy, dx) * g.at(c, yy, xx);
                    }
                }
                out.at(c, y, x) = acc;
            }
        }
    }
    return out;
}

SalienceMap gaussian_blur(const SalienceMap& m, const BlurKernel& kernel) {
    Grid g({1, m.height(), m.width()},
           std::vector<double>(m.values().begin(), m.values().end()));
    Grid blurred = gaussian_blur(g, kernel);
    return SalienceMap(m.height(), m.width(),
                       std::vector<double>(blurred.values().begin(),
                                           blurred.values().end()));
}

SalienceMap spatial_softmax(const SalienceMap& m, double k) {
    SalienceMap out(m.height(), m.width());
    double hi = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < m.size(); ++i) hi = std::max(hi, k * m[i]);
    double z = 0.0;
    for (int i = 0; i < m.size(); ++i) {
        out[i] = std::exp(k * m[i] - hi);
        z += out[i];
    }
    for (int i = 0; i < out.size(); ++i) out[i] /= z;
    return out;
}

BlendMask argmax_mask(const SalienceMap& a, const SalienceMap& b) {
    if (a.height() != b.height() || a.width() != b.width()) {
        throw DimensionError("argmax_mask: shape mismatch " +
                             std::to_string(a.height()) + "x" + std::to_string(a.width()) +
                             " vs " + std::to_string(b.height()) + "x" +
                             std::to_string(b.width()));
    }
    BlendMask mask(a.height(), a.width());
    for (int i = 0; i < a.size(); ++i) mask[i] = a[i] >= b[i] ? 1 : 0;
    return mask;
}

} // namespace fuse
