#include "tabx/maskpost.hpp"

#include <algorithm>
#include <istream>
#include <sstream>
#include <tuple>

namespace tabx {

BoolMask threshold_mask(const ProbMask& m, double t) {
    if (t < 0.0 || t > 1.0) throw InputError("threshold_mask: t outside [0,1]");
    BoolMask out(m.width, m.height);
    for (size_t i = 0; i < m.v.size(); ++i) out.v[i] = m.v[i] >= t ? 1 : 0;
    return out;
}

std::vector<RegionMask> connected_regions(const BoolMask& mask) {
    std::vector<RegionMask> regions;
    std::vector<uint8_t> seen(mask.v.size(), 0);
    std::vector<int> stack;
    const int w = mask.width, h = mask.height;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            int idx = y * w + x;
            if (!mask.v[idx] || seen[idx]) continue;
            RegionMask r;
            r.width = w;
            r.height = h;
            r.v.assign(mask.v.size(), 0);
            r.label = int(regions.size());
            stack.clear();
            stack.push_back(idx);
            seen[idx] = 1;
            while (!stack.empty()) {
                int cur = stack.back();
                stack.pop_back();
                r.v[cur] = 1;
                r.pixel_count++;
                int cx = cur % w, cy = cur / w;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dx == 0 && dy == 0) continue;
                        int nx = cx + dx, ny = cy + dy;
                        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                        int nidx = ny * w + nx;
                        if (mask.v[nidx] && !seen[nidx]) {
                            seen[nidx] = 1;
                            stack.push_back(nidx);
                        }
                    }
                }
            }
            regions.push_back(std::move(r));
        }
    }
    return regions;
}

std::vector<RegionMask> filter_small_regions(const std::vector<RegionMask>& regions,
                                             long long page_area, double min_frac) {
    if (page_area <= 0) throw InputError("filter_small_regions: page_area must be positive");
    std::vector<RegionMask> kept;
    for (const auto& r : regions)
        if (double(r.pixel_count) >= min_frac * double(page_area) - 1e-9) kept.push_back(r);
    return kept;
}

BBox rectanglize(const RegionMask& region) {
    int minx = region.width, miny = region.height, maxx = -1, maxy = -1;
    for (int y = 0; y < region.height; ++y) {
        const uint8_t* row = &region.v[size_t(y) * region.width];
        for (int x = 0; x < region.width; ++x) {
            if (!row[x]) continue;
            minx = std::min(minx, x);
            maxx = std::max(maxx, x);
            miny = std::min(miny, y);
            maxy = std::max(maxy, y);
        }
    }
    if (maxx < 0) throw InputError("rectanglize: empty region");
    return BBox{minx, miny, maxx - minx + 1, maxy - miny + 1};
}

ClassGrid generate_separator_labels(const std::vector<BBox>& boxes, int width, int height, int band) {
    if (width <= 0 || height <= 0) throw InputError("generate_separator_labels: bad grid size");
    if (band <= 0) throw InputError("generate_separator_labels: band must be positive");
    for (const auto& b : boxes)
        if (b.left < 0 || b.top < 0 || b.right() > width || b.bottom() > height || b.width <= 0 || b.height <= 0)
            throw InputError("generate_separator_labels: box out of grid");

    ClassGrid g(width, height);
    for (const auto& b : boxes)
        for (int y = b.top; y < b.bottom(); ++y)
            for (int x = b.left; x < b.right(); ++x)
                g.at(x, y) = TABLE;

    // count, per pixel, how many distinct expanded boxes reach it
    std::vector<uint8_t> reach(size_t(width) * height, 0);
    for (const auto& b : boxes) {
        int x0 = std::max(0, b.left - band), x1 = std::min(width, b.right() + band);
        int y0 = std::max(0, b.top - band), y1 = std::min(height, b.bottom() + band);
        for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x) {
                uint8_t& c = reach[size_t(y) * width + x];
                if (c < 255) c++;
            }
    }
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            if (g.at(x, y) == OTHER && reach[size_t(y) * width + x] >= 2) g.at(x, y) = SEPARATOR;
    return g;
}

namespace {

// all candidate pairs sorted by descending IOU, ties by indices: deterministic greedy
std::vector<std::tuple<double, int, int>> iou_pairs(const std::vector<BBox>& pred,
                                                    const std::vector<BBox>& truth) {
    std::vector<std::tuple<double, int, int>> pairs;
    for (int i = 0; i < int(pred.size()); ++i)
        for (int j = 0; j < int(truth.size()); ++j) {
            double iou = box_iou(pred[i], truth[j]);
            if (iou > 0.0) pairs.emplace_back(iou, i, j);
        }
    std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
        if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
        if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
        return std::get<2>(a) < std::get<2>(b);
    });
    return pairs;
}

} // namespace

PrResult detection_pr(const std::vector<BBox>& pred, const std::vector<BBox>& truth, double match_iou) {
    PrResult res;
    std::vector<uint8_t> pused(pred.size(), 0), tused(truth.size(), 0);
    for (const auto& [iou, i, j] : iou_pairs(pred, truth)) {
        if (iou < match_iou) break;
        if (pused[i] || tused[j]) continue;
        pused[i] = tused[j] = 1;
        res.matches++;
    }
    res.recall_defined = !truth.empty();
    res.precision_defined = !pred.empty();
    if (res.recall_defined) res.recall = double(res.matches) / double(truth.size());
    if (res.precision_defined) res.precision = double(res.matches) / double(pred.size());
    return res;
}

std::vector<BBox> detect_boxes(const ProbMask& mask, double t, double min_frac) {
    auto regions = filter_small_regions(connected_regions(threshold_mask(mask, t)),
                                        (long long)mask.width * mask.height, min_frac);
    std::vector<BBox> boxes;
    boxes.reserve(regions.size());
    for (const auto& r : regions) boxes.push_back(rectanglize(r));
    return boxes;
}

std::pair<double, double> tune_threshold(const std::vector<ProbMask>& masks,
                                         const std::vector<std::vector<BBox>>& truth,
                                         const std::vector<double>& grid, double min_frac) {
    if (masks.empty()) throw InputError("tune_threshold: empty validation set");
    if (masks.size() != truth.size()) throw InputError("tune_threshold: masks/truth length mismatch");
    if (grid.empty()) throw InputError("tune_threshold: empty threshold grid");

    long long n_truth = 0;
    for (const auto& tb : truth) n_truth += (long long)tb.size();
    if (n_truth == 0) throw InputError("tune_threshold: no ground-truth boxes");

    std::vector<double> ts = grid;
    std::sort(ts.begin(), ts.end());
    double best_t = ts.front(), best_mean = -1.0;
    for (double t : ts) {
        double sum = 0.0;
        for (size_t m = 0; m < masks.size(); ++m) {
            auto pred = detect_boxes(masks[m], t, min_frac);
            std::vector<uint8_t> pused(pred.size(), 0), tused(truth[m].size(), 0);
            for (const auto& [iou, i, j] : iou_pairs(pred, truth[m])) {
                if (pused[i] || tused[j]) continue;
                pused[i] = tused[j] = 1;
                sum += iou;
            }
        }
        double mean = sum / double(n_truth);
        if (mean >= best_mean) { // >= : ties go to the larger t (grid scanned ascending)
            best_mean = mean;
            best_t = t;
        }
    }
    return {best_t, best_mean};
}

std::string boxes_to_csv(const std::vector<std::pair<int, BBox>>& rows) {
    std::string out = "page,left,top,width,height\n";
    for (const auto& [page, b] : rows) {
        out += std::to_string(page);
        out += ',';
        out += std::to_string(b.left);
        out += ',';
        out += std::to_string(b.top);
        out += ',';
        out += std::to_string(b.width);
        out += ',';
        out += std::to_string(b.height);
        out += '\n';
    }
    return out;
}

std::vector<std::pair<int, BBox>> boxes_from_csv(std::istream& in) {
    std::vector<std::pair<int, BBox>> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line.find("page") == 0) continue; // header
        }
        std::istringstream ss(line);
        std::string field;
        long vals[5];
        for (int i = 0; i < 5; ++i) {
            if (!std::getline(ss, field, ',')) throw InputError("box csv: short row: " + line);
            try {
                vals[i] = std::stol(field);
            } catch (...) {
                throw InputError("box csv: non-numeric field: " + field);
            }
        }
        rows.emplace_back(int(vals[0]), BBox{int(vals[1]), int(vals[2]), int(vals[3]), int(vals[4])});
    }
    return rows;
}

} // namespace tabx
