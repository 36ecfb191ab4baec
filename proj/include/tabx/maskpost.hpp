#pragma once
#include <vector>

#include "tabx/geometry.hpp"
#include "tabx/image.hpp"

namespace tabx {

// Pixel true iff probability >= t.
BoolMask threshold_mask(const ProbMask& m, double t);

// Maximal 8-connected components of the true pixels, ordered by their first pixel
// in row-major scan order. Labels are 0,1,2,... in that order.
std::vector<RegionMask> connected_regions(const BoolMask& mask);

// Keep regions whose pixel count is >= min_frac * page_area (inclusive boundary;
// guarded against float dust so 100 pixels on a 10,000-pixel page at 1% survive).
std::vector<RegionMask> filter_small_regions(const std::vector<RegionMask>& regions,
                                             long long page_area, double min_frac = 0.01);

// Minimal enclosing axis-aligned box of the region's true pixels.
BBox rectanglize(const RegionMask& region);

// TABLE inside any box; SEPARATOR on background pixels that at least two distinct
// boxes reach when each box is expanded by `band` pixels (Chebyshev); OTHER elsewhere.
ClassGrid generate_separator_labels(const std::vector<BBox>& boxes, int width, int height, int band = 5);

struct PrResult {
    double recall = 0.0, precision = 0.0;
    bool recall_defined = false, precision_defined = false;
    int matches = 0;
};

// Greedy one-to-one matching by descending IOU; a pair matches iff IOU >= match_iou.
// Undefined ratios (empty denominator) are reported as 0 with the flag cleared.
PrResult detection_pr(const std::vector<BBox>& pred, const std::vector<BBox>& truth,
                      double match_iou = 0.5);

// Full pipeline (threshold -> regions -> 1% filter -> rectanglize) per mask, scored
// as sum of greedy-matched IOUs over the total number of truth boxes. Returns the
// argmax threshold from `grid` and its mean IOU; ties break toward the larger t.
std::pair<double, double> tune_threshold(const std::vector<ProbMask>& masks,
                                         const std::vector<std::vector<BBox>>& truth,
                                         const std::vector<double>& grid,
                                         double min_frac = 0.01);

// One mask through the detection pipeline at threshold t.
std::vector<BBox> detect_boxes(const ProbMask& mask, double t, double min_frac = 0.01);

// Box-list CSV: header "page,left,top,width,height", one row per box.
std::string boxes_to_csv(const std::vector<std::pair<int, BBox>>& rows);
std::vector<std::pair<int, BBox>> boxes_from_csv(std::istream& in);

} // namespace tabx
