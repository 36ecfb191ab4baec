#include "tabx/geometry.hpp"

#include <algorithm>

namespace tabx {

double interval_iou(const Interval& a, const Interval& b) {
    long long inter = std::max(0, std::min(a.hi, b.hi) - std::max(a.lo, b.lo));
    long long uni = (long long)a.length() + (long long)b.length() - inter;
    if (uni <= 0) return 0.0;
    return double(inter) / double(uni);
}

double box_iou(const BBox& a, const BBox& b) {
    long long iw = std::max(0, std::min(a.right(), b.right()) - std::max(a.left, b.left));
    long long ih = std::max(0, std::min(a.bottom(), b.bottom()) - std::max(a.top, b.top));
    long long inter = iw * ih;
    long long uni = a.area() + b.area() - inter;
    if (uni <= 0) return 0.0;
    return double(inter) / double(uni);
}

BBox box_union(const BBox& a, const BBox& b) {
    int l = std::min(a.left, b.left);
    int t = std::min(a.top, b.top);
    int r = std::max(a.right(), b.right());
    int bo = std::max(a.bottom(), b.bottom());
    return BBox{l, t, r - l, bo - t};
}

} // namespace tabx
