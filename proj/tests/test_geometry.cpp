#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tabx/geometry.hpp"
#include "tabx/rng.hpp"

using namespace tabx;

namespace {

// cell-counting oracle: a box covers unit cells [x,x+1)x[y,y+1); count shared and
// covered cells directly instead of trusting any min/max algebra
double pixel_iou(const BBox& a, const BBox& b) {
    long long inter = 0, uni = 0;
    int x0 = std::min(a.left, b.left), x1 = std::max(a.right(), b.right());
    int y0 = std::min(a.top, b.top), y1 = std::max(a.bottom(), b.bottom());
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
            bool ia = x >= a.left && x < a.right() && y >= a.top && y < a.bottom();
            bool ib = x >= b.left && x < b.right() && y >= b.top && y < b.bottom();
            if (ia && ib) inter++;
            if (ia || ib) uni++;
        }
    return uni == 0 ? 0.0 : double(inter) / double(uni);
}

double cell_interval_iou(const Interval& a, const Interval& b) {
    long long inter = 0, uni = 0;
    for (int x = std::min(a.lo, b.lo); x < std::max(a.hi, b.hi); ++x) {
        bool ia = x >= a.lo && x < a.hi;
        bool ib = x >= b.lo && x < b.hi;
        if (ia && ib) inter++;
        if (ia || ib) uni++;
    }
    return uni == 0 ? 0.0 : double(inter) / double(uni);
}

} // namespace

TEST_CASE("bbox accessors") {
    BBox b{3, 5, 10, 20};
    CHECK(b.right() == 13);
    CHECK(b.bottom() == 25);
    CHECK(b.area() == 200);
    CHECK(Interval{2, 9}.length() == 7);
}

TEST_CASE("interval iou basics") {
    CHECK(interval_iou({0, 6}, {4, 10}) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(interval_iou({0, 10}, {0, 10}) == 1.0);
    CHECK(interval_iou({0, 5}, {5, 9}) == 0.0);  // touching endpoints share no length
    CHECK(interval_iou({0, 5}, {7, 9}) == 0.0);
    CHECK(interval_iou({0, 0}, {0, 0}) == 0.0);  // empty vs empty
}

TEST_CASE("interval iou matches cell counting exhaustively") {
    for (int al = 0; al <= 12; ++al)
        for (int ah = al; ah <= 12; ++ah)
            for (int bl = 0; bl <= 12; ++bl)
                for (int bh = bl; bh <= 12; ++bh) {
                    Interval a{al, ah}, b{bl, bh};
                    CHECK(interval_iou(a, b) == doctest::Approx(cell_interval_iou(a, b)).epsilon(1e-12));
                }
}

TEST_CASE("box iou basics") {
    BBox a{0, 0, 4, 4};
    CHECK(box_iou(a, a) == 1.0);
    CHECK(box_iou(a, BBox{10, 10, 4, 4}) == 0.0);
    CHECK(box_iou(a, BBox{4, 0, 4, 4}) == 0.0);  // edge-adjacent, no shared pixel
    // inter 2x2=4, union 16+16-4=28
    CHECK(box_iou(a, BBox{2, 2, 4, 4}) == doctest::Approx(4.0 / 28.0).epsilon(1e-12));
    // half offset along one axis: inter 8, union 24
    CHECK(box_iou(a, BBox{2, 0, 4, 4}) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("box iou matches pixel counting on random boxes") {
    Rng rng(0x9e0bdb1ull);
    for (int k = 0; k < 2000; ++k) {
        BBox a{int(rng.next_int(0, 19)), int(rng.next_int(0, 19)), int(rng.next_int(1, 12)),
               int(rng.next_int(1, 12))};
        BBox b{int(rng.next_int(0, 19)), int(rng.next_int(0, 19)), int(rng.next_int(1, 12)),
               int(rng.next_int(1, 12))};
        CHECK(box_iou(a, b) == doctest::Approx(pixel_iou(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("box union") {
    BBox u = box_union(BBox{1, 2, 3, 4}, BBox{0, 5, 2, 2});
    CHECK(u == BBox{0, 2, 4, 5});
    CHECK(box_union(BBox{3, 3, 2, 2}, BBox{3, 3, 2, 2}) == BBox{3, 3, 2, 2});

    Rng rng(77);
    for (int k = 0; k < 500; ++k) {
        BBox a{int(rng.next_int(-9, 9)), int(rng.next_int(-9, 9)), int(rng.next_int(1, 9)),
               int(rng.next_int(1, 9))};
        BBox b{int(rng.next_int(-9, 9)), int(rng.next_int(-9, 9)), int(rng.next_int(1, 9)),
               int(rng.next_int(1, 9))};
        BBox u2 = box_union(a, b);
        CHECK(u2.left <= std::min(a.left, b.left));
        CHECK(u2.right() >= std::max(a.right(), b.right()));
        CHECK(box_iou(u2, a) > 0.0);
        CHECK(u2.area() >= std::max(a.area(), b.area()));
    }
}
