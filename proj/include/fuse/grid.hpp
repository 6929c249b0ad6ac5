#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fuse/error.hpp"

namespace fuse {

struct GridShape {
    int channels = 0;
    int height   = 0;
    int width    = 0;

    bool operator==(const GridShape&) const = default;
    int volume() const { return channels * height * width; }
    std::string str() const;
};

// Dense C x H x W array of doubles, row-major (channel, row, column).
class Grid {
public:
    Grid() = default;
    explicit Grid(GridShape shape, double fill = 0.0);
    Grid(GridShape shape, std::vector<double> values);

    const GridShape& shape() const { return shape_; }
    int channels() const { return shape_.channels; }
    int height() const { return shape_.height; }
    int width() const { return shape_.width; }
    int size() const { return static_cast<int>(v_.size()); }

    double& at(int c, int y, int x) { return v_[index(c, y, x)]; }
    double at(int c, int y, int x) const { return v_[index(c, y, x)]; }
    double& operator[](int i) { return v_[i]; }
    double operator[](int i) const { return v_[i]; }

    std::span<double> values() { return v_; }
    std::span<const double> values() const { return v_; }

    bool all_finite() const;

private:
    int index(int c, int y, int x) const {
        return (c * shape_.height + y) * shape_.width + x;
    }

    GridShape shape_{};
    std::vector<double> v_;
};

// Single-channel H x W map of non-negative saliency values.
class SalienceMap {
public:
    SalienceMap() = default;
    SalienceMap(int height, int width, double fill = 0.0);
    SalienceMap(int height, int width, std::vector<double> values);

    int height() const { return height_; }
    int width() const { return width_; }
    int size() const { return static_cast<int>(v_.size()); }

    double& at(int y, int x) { return v_[y * width_ + x]; }
    double at(int y, int x) const { return v_[y * width_ + x]; }
    double& operator[](int i) { return v_[i]; }
    double operator[](int i) const { return v_[i]; }

    std::span<double> values() { return v_; }
    std::span<const double> values() const { return v_; }

    double sum() const;

private:
    int height_ = 0;
    int width_  = 0;
    std::vector<double> v_;
};

// Binary H x W blend mask; 1 selects the first (general) model, 0 the second.
class BlendMask {
public:
    BlendMask() = default;
    BlendMask(int height, int width, uint8_t fill = 0);

    int height() const { return height_; }
    int width() const { return width_; }
    int size() const { return static_cast<int>(v_.size()); }

    uint8_t& at(int y, int x) { return v_[y * width_ + x]; }
    uint8_t at(int y, int x) const { return v_[y * width_ + x]; }
    uint8_t& operator[](int i) { return v_[i]; }
    uint8_t operator[](int i) const { return v_[i]; }

    std::span<const uint8_t> values() const { return v_; }

    bool operator==(const BlendMask&) const = default;

    // Fraction of elements equal to 1.
    double coverage() const;

private:
    int height_ = 0;
    int width_  = 0;
    std::vector<uint8_t> v_;
};

// Normalized 2D convolution kernel, (2*radius+1)^2 weights summing to 1.
struct BlurKernel {
    int radius = 0;
    double sigma = 1.0;
    std::vector<double> weights;

    static BlurKernel gaussian(int radius, double sigma);

    int width() const { return 2 * radius + 1; }
    double weight(int dy, int dx) const {
        return weights[(dy + radius) * width() + (dx + radius)];
    }
};

// Elementwise kernels. Two-grid ops throw DimensionError on shape mismatch.
Grid add(const Grid& a, const Grid& b);
Grid sub(const Grid& a, const Grid& b);
Grid mul(const Grid& a, const Grid& b);
Grid scale(const Grid& a, double s);
Grid abs(const Grid& a);

// Per-channel 2D convolution with edge-replicate padding.
Grid gaussian_blur(const Grid& g, const BlurKernel& kernel);
SalienceMap gaussian_blur(const SalienceMap& m, const BlurKernel& kernel);

// out[i] = exp(k*m[i] - max_j k*m[j]) / sum_j exp(k*m[j] - max_j k*m[j]).
// Output sums to 1; overflow-safe via max subtraction.
SalienceMap spatial_softmax(const SalienceMap& m, double k);

// M[i] = 1 where a[i] >= b[i], else 0. Ties go to the first argument.
BlendMask argmax_mask(const SalienceMap& a, const SalienceMap& b);

void require_same_shape(const GridShape& a, const GridShape& b, const char* what);

} // namespace fuse
