#pragma once
#include <cstdint>
#include <vector>

#include "tabx/error.hpp"

namespace tabx {

// 8-bit grayscale raster, row-major. 0 = black ink, 255 = white paper.
struct GrayImage {
    int width = 0, height = 0;
    std::vector<uint8_t> v;

    GrayImage() = default;
    GrayImage(int w, int h, uint8_t fill = 255) : width(w), height(h), v(size_t(w) * h, fill) {}
    uint8_t at(int x, int y) const { return v[size_t(y) * width + x]; }
    uint8_t& at(int x, int y) { return v[size_t(y) * width + x]; }
    bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
    bool operator==(const GrayImage&) const = default;
};

// Per-pixel table probability in [0,1], row-major.
struct ProbMask {
    int width = 0, height = 0;
    std::vector<double> v;

    ProbMask() = default;
    ProbMask(int w, int h, double fill = 0.0) : width(w), height(h), v(size_t(w) * h, fill) {}
    double at(int x, int y) const { return v[size_t(y) * width + x]; }
    double& at(int x, int y) { return v[size_t(y) * width + x]; }
};

// Boolean raster (thresholded mask).
struct BoolMask {
    int width = 0, height = 0;
    std::vector<uint8_t> v; // 0/1

    BoolMask() = default;
    BoolMask(int w, int h, uint8_t fill = 0) : width(w), height(h), v(size_t(w) * h, fill) {}
    uint8_t at(int x, int y) const { return v[size_t(y) * width + x]; }
    uint8_t& at(int x, int y) { return v[size_t(y) * width + x]; }
};

// One 8-connected component of a boolean mask, kept at page resolution.
struct RegionMask {
    int width = 0, height = 0;
    std::vector<uint8_t> v; // 0/1
    int label = 0;
    long long pixel_count = 0;

    uint8_t at(int x, int y) const { return v[size_t(y) * width + x]; }
    uint8_t& at(int x, int y) { return v[size_t(y) * width + x]; }
};

// 3-class segmentation labels.
enum ClassLabel : uint8_t { OTHER = 0, TABLE = 1, SEPARATOR = 2 };

struct ClassGrid {
    int width = 0, height = 0;
    std::vector<uint8_t> v; // ClassLabel values

    ClassGrid() = default;
    ClassGrid(int w, int h) : width(w), height(h), v(size_t(w) * h, OTHER) {}
    uint8_t at(int x, int y) const { return v[size_t(y) * width + x]; }
    uint8_t& at(int x, int y) { return v[size_t(y) * width + x]; }
};

} // namespace tabx
