#pragma once
#include <string>

namespace tabx {

// Axis-aligned pixel box. Half-open: covers [left, left+width) x [top, top+height),
// which keeps every area/overlap computation exact in integers.
struct BBox {
    int left = 0, top = 0, width = 0, height = 0;

    int right() const { return left + width; }
    int bottom() const { return top + height; }
    long long area() const { return (long long)width * (long long)height; }
    bool operator==(const BBox&) const = default;
};

// Half-open 1-D pixel span [lo, hi).
struct Interval {
    int lo = 0, hi = 0;

    int length() const { return hi - lo; }
    bool operator==(const Interval&) const = default;
};

// One OCR word plus its layout ids.
struct WordRecord {
    std::string text;
    BBox box;
    double conf = 0.0; // percent, 0..100
    int page = 0, block = 0, par = 0, line = 0, word = 0;
};

// |a∩b| / |a∪b| with union = |a|+|b|−|a∩b|; 0 when both operands are empty.
double interval_iou(const Interval& a, const Interval& b);
double box_iou(const BBox& a, const BBox& b);

// Smallest box containing both.
BBox box_union(const BBox& a, const BBox& b);

} // namespace tabx
