#include "tabx/imgprep.hpp"

#include <array>
#include <cstdint>

namespace tabx {

GrayImage crop_pad(const GrayImage& img, const BBox& roi, int pad) {
    if (pad < 0) throw InputError("crop_pad: negative pad");
    if (roi.width <= 0 || roi.height <= 0 || roi.left < 0 || roi.top < 0 ||
        roi.right() > img.width || roi.bottom() > img.height)
        throw InputError("crop_pad: roi out of bounds");
    GrayImage out(roi.width + 2 * pad, roi.height + 2 * pad, 255);
    for (int y = 0; y < roi.height; ++y)
        for (int x = 0; x < roi.width; ++x)
            out.at(x + pad, y + pad) = img.at(roi.left + x, roi.top + y);
    return out;
}

std::pair<int, GrayImage> otsu_threshold(const GrayImage& img) {
    std::array<int64_t, 256> hist{};
    for (uint8_t p : img.v) hist[p]++;

    // prefix counts/sums; the threshold comparison is done on exact integers
    // (diff = s0*c1 - s1*c0) so the argmax is immune to summation-order noise.
    int best_t = -1;
    long double best_score = -1.0L;
    int64_t c0 = 0, s0 = 0;
    int64_t total = int64_t(img.v.size());
    int64_t stotal = 0;
    for (int i = 0; i < 256; ++i) stotal += int64_t(i) * hist[i];
    for (int t = 0; t < 255; ++t) {
        c0 += hist[t];
        s0 += int64_t(t) * hist[t];
        int64_t c1 = total - c0;
        if (c0 == 0 || c1 == 0) continue;
        int64_t s1 = stotal - s0;
        long double diff = (long double)(s0 * c1 - s1 * c0);
        long double score = diff * diff / ((long double)c0 * (long double)c1);
        if (score > best_score) {
            best_score = score;
            best_t = t;
        }
    }
    if (best_t < 0) throw InputError("otsu: degenerate histogram");

    GrayImage out(img.width, img.height, 255);
    for (size_t i = 0; i < img.v.size(); ++i) out.v[i] = img.v[i] <= best_t ? 0 : 255;
    return {best_t, out};
}

GrayImage rotate_quarter(const GrayImage& img, int angle) {
    if (angle == 0 || angle == 180) return img;
    if (angle != 90 && angle != 270) throw InputError("rotate_quarter: angle must be 0, 90, 180 or 270");
    GrayImage out(img.height, img.width, 0);
    if (angle == 90) {
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                out.at(img.height - 1 - y, x) = img.at(x, y);
    } else {
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                out.at(y, img.width - 1 - x) = img.at(x, y);
    }
    return out;
}

namespace {

// Separable passes. A rectangular kernel factors exactly into a horizontal and a
// vertical run, so each pass is a sliding window over one axis.
//
// Erode anchor (ar, ac) = (rows/2, cols/2): output (x,y) looks at
// cols [x-ac, x+cols-1-ac]; any out-of-bounds cell is background, killing the pixel.
// Dilate uses the reflected window [x-(cols-1-ac), x+ac] so that dilate is the exact
// adjoint of erode and opening restores straight runs to their original extent.
GrayImage pass_1d(const GrayImage& img, int len, bool horizontal, bool is_erode) {
    if (len <= 1) return img;
    GrayImage out(img.width, img.height, 255);
    int a = len / 2;
    int lo_off = is_erode ? -a : -(len - 1 - a);
    int hi_off = is_erode ? (len - 1 - a) : a;
    int limit = horizontal ? img.width : img.height;
    int other = horizontal ? img.height : img.width;
    for (int o = 0; o < other; ++o) {
        // running count of foreground (ink) pixels in the current window
        int fg = 0;
        int wlo = 0 + lo_off, whi = 0 + hi_off; // window for position 0
        for (int i = wlo; i <= whi; ++i) {
            if (i < 0 || i >= limit) continue;
            uint8_t p = horizontal ? img.at(i, o) : img.at(o, i);
            if (p == 0) fg++;
        }
        for (int pos = 0; pos < limit; ++pos) {
            int win_lo = pos + lo_off, win_hi = pos + hi_off;
            bool inside = win_lo >= 0 && win_hi < limit;
            uint8_t res;
            if (is_erode)
                res = (inside && fg == len) ? 0 : 255;
            else
                res = (fg > 0) ? 0 : 255;
            if (horizontal)
                out.at(pos, o) = res;
            else
                out.at(o, pos) = res;
            // slide window right by one
            if (win_lo >= 0 && win_lo < limit) {
                uint8_t p = horizontal ? img.at(win_lo, o) : img.at(o, win_lo);
                if (p == 0) fg--;
            }
            int nxt = win_hi + 1;
            if (nxt >= 0 && nxt < limit) {
                uint8_t p = horizontal ? img.at(nxt, o) : img.at(o, nxt);
                if (p == 0) fg++;
            }
        }
    }
    return out;
}

} // namespace

GrayImage morph_erode(const GrayImage& img, StructuringElement k) {
    if (k.rows < 1 || k.cols < 1) throw InputError("morphology: kernel must be at least 1x1");
    GrayImage tmp = pass_1d(img, k.cols, true, true);
    return pass_1d(tmp, k.rows, false, true);
}

GrayImage morph_dilate(const GrayImage& img, StructuringElement k) {
    if (k.rows < 1 || k.cols < 1) throw InputError("morphology: kernel must be at least 1x1");
    GrayImage tmp = pass_1d(img, k.cols, true, false);
    return pass_1d(tmp, k.rows, false, false);
}

GrayImage morph_open(const GrayImage& img, StructuringElement k) {
    return morph_dilate(morph_erode(img, k), k);
}

namespace {

void union_ink(GrayImage& acc, const GrayImage& add) {
    for (size_t i = 0; i < acc.v.size(); ++i)
        if (add.v[i] == 0) acc.v[i] = 0;
}

} // namespace

GrayImage build_line_mask(const GrayImage& img) {
    GrayImage mask(img.width, img.height, 255);
    for (int i = 1; i <= 2; ++i) {
        union_ink(mask, morph_open(img, StructuringElement{i, 50}));  // horizontal runs
        union_ink(mask, morph_open(img, StructuringElement{50, i}));  // vertical runs
    }
    mask = morph_dilate(mask, StructuringElement{3, 3});
    // 3x3 box blur, re-binarized: keep a pixel if any of its 9 neighbors was mask
    // (mean >= 1/9). Widens coverage by one more ring.
    GrayImage out(img.width, img.height, 255);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            int cnt = 0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    int nx = x + dx, ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= img.width || ny >= img.height) continue;
                    if (mask.at(nx, ny) == 0) cnt++;
                }
            if (cnt >= 1) out.at(x, y) = 0;
        }
    }
    return out;
}

GrayImage remove_lines(const GrayImage& img, const GrayImage& mask) {
    if (img.width != mask.width || img.height != mask.height)
        throw InputError("remove_lines: dimension mismatch");
    GrayImage out = img;
    for (size_t i = 0; i < out.v.size(); ++i)
        if (mask.v[i] == 0) out.v[i] = 255;
    return out;
}

} // namespace tabx
