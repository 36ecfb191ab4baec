#pragma once
#include <utility>

#include "tabx/geometry.hpp"
#include "tabx/image.hpp"

namespace tabx {

// All-ones rectangular kernel. Anchor sits at (rows/2, cols/2).
struct StructuringElement {
    int rows = 1, cols = 1;
};

// Crop roi and surround it with `pad` pixels of white paper.
GrayImage crop_pad(const GrayImage& img, const BBox& roi, int pad = 10);

// Global threshold maximizing between-class variance over the 256-bin histogram.
// Ties break toward the smaller t. Pixels <= t become 0 (ink), > t become 255.
// Throws InputError("degenerate histogram") on constant images.
std::pair<int, GrayImage> otsu_threshold(const GrayImage& img);

// angle in {0,90,180,270}. 0 and 180 are the identity: upside-down tables do not
// occur in practice, so a 180 reading is treated as detector error and ignored.
// 90 rotates clockwise, 270 counter-clockwise; both swap dimensions losslessly.
GrayImage rotate_quarter(const GrayImage& img, int angle);

// Binary morphology on ink images: foreground = 0, background = 255; pixels
// outside the image count as background. open = dilate(erode(x)).
GrayImage morph_erode(const GrayImage& img, StructuringElement k);
GrayImage morph_dilate(const GrayImage& img, StructuringElement k);
GrayImage morph_open(const GrayImage& img, StructuringElement k);

// Ruling-line mask: union of openings with 50-long kernels (50xi horizontal,
// ix50 vertical, i in {1,2}), dilated 3x3, then 3x3 box blur re-binarized at
// mean >= 1/9. Output is an ink image (0 = line pixel).
GrayImage build_line_mask(const GrayImage& img);

// Whiten every pixel under the mask; leave the rest byte-identical.
GrayImage remove_lines(const GrayImage& img, const GrayImage& mask);

} // namespace tabx
