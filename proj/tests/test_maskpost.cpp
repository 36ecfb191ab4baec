#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "tabx/error.hpp"
#include "tabx/maskpost.hpp"
#include "tabx/rng.hpp"

using namespace tabx;

namespace {

ProbMask mask_from(const char* const* rows, int w, int h) {
    ProbMask m(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) m.at(x, y) = (rows[y][x] - '0') / 9.0;
    return m;
}

void fill(ProbMask& m, const BBox& b, double v) {
    for (int y = b.top; y < b.bottom(); ++y)
        for (int x = b.left; x < b.right(); ++x) m.at(x, y) = v;
}

} // namespace

TEST_CASE("threshold keeps boundary probability") {
    ProbMask m(3, 1);
    m.at(0, 0) = 0.499;
    m.at(1, 0) = 0.5;
    m.at(2, 0) = 0.501;
    BoolMask b = threshold_mask(m, 0.5);
    CHECK(b.at(0, 0) == 0);
    CHECK(b.at(1, 0) == 1);  // p >= t survives
    CHECK(b.at(2, 0) == 1);
    CHECK_THROWS_AS(threshold_mask(m, -0.1), InputError);
    CHECK_THROWS_AS(threshold_mask(m, 1.5), InputError);
}

TEST_CASE("regions are 8-connected and ordered by first pixel in row-major scan") {
    const char* rows[] = {
        "900009",
        "090090",
        "000000",
        "077000",
    };
    auto regs = connected_regions(threshold_mask(mask_from(rows, 6, 4), 0.5));
    REQUIRE(regs.size() == 3);
    // diagonal contact joins: (0,0)+(1,1) one region, (5,0)+(4,1) another
    CHECK(regs[0].pixel_count == 2);
    CHECK(regs[0].at(0, 0) == 1);
    CHECK(regs[0].at(1, 1) == 1);
    CHECK(regs[1].at(5, 0) == 1);
    CHECK(regs[1].at(4, 1) == 1);
    CHECK(regs[2].pixel_count == 2);
    CHECK(regs[2].at(1, 3) == 1);
    CHECK(regs[0].label == 0);
    CHECK(regs[2].label == 2);
}

TEST_CASE("area filter is inclusive at the floor") {
    BoolMask m(100, 100);
    for (int x = 0; x < 50; ++x) m.at(x, 0) = 1;   // 50 px far from the second blob
    for (int x = 0; x < 99; ++x) m.at(x, 50) = 1;  // 99 px
    for (int x = 0; x < 100; ++x) m.at(x, 99) = 1; // 100 px = exactly 1% of the page
    auto regs = connected_regions(m);
    REQUIRE(regs.size() == 3);
    auto kept = filter_small_regions(regs, 100 * 100, 0.01);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].pixel_count == 100);
    CHECK_THROWS_AS(filter_small_regions(regs, 0, 0.01), InputError);
}

TEST_CASE("rectanglize takes the bounding box") {
    const char* rows[] = {
        "000000",
        "009000",
        "000990",
        "009900",
    };
    auto regs = connected_regions(threshold_mask(mask_from(rows, 6, 4), 0.5));
    REQUIRE(regs.size() == 1);
    CHECK(rectanglize(regs[0]) == BBox{2, 1, 3, 3});
    RegionMask empty;
    empty.width = 4;
    empty.height = 4;
    empty.v.assign(16, 0);
    CHECK_THROWS_AS(rectanglize(empty), InputError);
}

TEST_CASE("separator labels match a per-pixel oracle") {
    std::vector<BBox> boxes = {{2, 2, 6, 5}, {12, 2, 5, 6}, {4, 11, 8, 4}};
    int W = 20, H = 18, band = 5;
    ClassGrid g = generate_separator_labels(boxes, W, H, band);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            bool table = false;
            int reach = 0;
            for (const auto& b : boxes) {
                if (x >= b.left && x < b.right() && y >= b.top && y < b.bottom()) table = true;
                if (x >= b.left - band && x < b.right() + band && y >= b.top - band &&
                    y < b.bottom() + band)
                    reach++;
            }
            uint8_t want = table ? TABLE : (reach >= 2 ? SEPARATOR : OTHER);
            CHECK(g.at(x, y) == want);
        }
    CHECK_THROWS_AS(generate_separator_labels({{-1, 0, 3, 3}}, W, H, band), InputError);
    CHECK_THROWS_AS(generate_separator_labels(boxes, W, H, 0), InputError);
}

TEST_CASE("detection pr counts greedy one-to-one matches") {
    std::vector<BBox> truth = {{0, 0, 10, 10}, {20, 0, 10, 10}};
    PrResult pr = detection_pr(truth, truth, 0.5);
    CHECK(pr.matches == 2);
    CHECK(pr.recall == 1.0);
    CHECK(pr.precision == 1.0);

    // one prediction hits only the first truth box
    pr = detection_pr({{1, 1, 10, 10}}, truth, 0.5);
    CHECK(pr.matches == 1);
    CHECK(pr.recall == doctest::Approx(0.5));
    CHECK(pr.precision == 1.0);

    // two predictions on the same truth: one match, the duplicate costs precision
    pr = detection_pr({{0, 0, 10, 10}, {1, 0, 10, 10}}, {{0, 0, 10, 10}}, 0.5);
    CHECK(pr.matches == 1);
    CHECK(pr.recall == 1.0);
    CHECK(pr.precision == doctest::Approx(0.5));

    // below the match floor nothing pairs up
    pr = detection_pr({{0, 0, 4, 4}}, {{2, 2, 8, 8}}, 0.5);
    CHECK(pr.matches == 0);

    pr = detection_pr({}, truth, 0.5);
    CHECK(pr.recall_defined);
    CHECK_FALSE(pr.precision_defined);
    CHECK(pr.recall == 0.0);
    pr = detection_pr(truth, {}, 0.5);
    CHECK_FALSE(pr.recall_defined);
    CHECK(pr.precision_defined);
}

TEST_CASE("detect boxes runs threshold, filter and rectanglize together") {
    ProbMask m(100, 100, 0.1);
    fill(m, BBox{10, 10, 30, 20}, 0.9);
    fill(m, BBox{60, 50, 20, 25}, 0.8);
    fill(m, BBox{5, 80, 3, 3}, 0.95);  // 9 px, far below 1%
    auto boxes = detect_boxes(m, 0.7, 0.01);
    REQUIRE(boxes.size() == 2);
    CHECK(boxes[0] == BBox{10, 10, 30, 20});
    CHECK(boxes[1] == BBox{60, 50, 20, 25});
    // lower threshold keeps the 0.1 background: one page-sized region
    auto low = detect_boxes(m, 0.05, 0.01);
    REQUIRE(low.size() == 1);
    CHECK(low[0] == BBox{0, 0, 100, 100});
}

TEST_CASE("threshold tuning picks the best grid value, ties to the larger") {
    // one box whose rim sits at 0.6: thresholds <= 0.6 grow the box by one pixel
    // all around, thresholds in (0.6, 0.8] recover it exactly
    ProbMask m(100, 100, 0.05);
    BBox truth{30, 30, 40, 30};
    fill(m, BBox{29, 29, 42, 32}, 0.6);
    fill(m, truth, 0.8);
    auto [t, mean] = tune_threshold({m}, {{truth}}, {0.5, 0.6, 0.7, 0.8}, 0.01);
    CHECK(t == 0.8);  // 0.7 and 0.8 tie at iou 1; the larger wins
    CHECK(mean == doctest::Approx(1.0));

    auto [t2, mean2] = tune_threshold({m}, {{truth}}, {0.5, 0.6}, 0.01);
    CHECK(t2 == 0.6);
    CHECK(mean2 < 1.0);
    CHECK(mean2 > 0.8);

    CHECK_THROWS_AS(tune_threshold({}, {}, {0.5}, 0.01), InputError);
    CHECK_THROWS_AS(tune_threshold({m}, {{}}, {0.5}, 0.01), InputError);
    CHECK_THROWS_AS(tune_threshold({m}, {{truth}}, {}, 0.01), InputError);
}

TEST_CASE("box csv round-trips and rejects junk") {
    std::vector<std::pair<int, BBox>> rows = {{0, {1, 2, 3, 4}}, {2, {9, 8, 7, 6}}};
    std::string csv = boxes_to_csv(rows);
    CHECK(csv == "page,left,top,width,height\n0,1,2,3,4\n2,9,8,7,6\n");
    std::istringstream in(csv);
    auto back = boxes_from_csv(in);
    REQUIRE(back.size() == 2);
    CHECK(back[0].second == rows[0].second);
    CHECK(back[1].first == 2);

    std::istringstream bad("page,left,top,width,height\n1,2,3\n");
    CHECK_THROWS_AS(boxes_from_csv(bad), InputError);
    std::istringstream bad2("0,a,2,3,4\n");
    CHECK_THROWS_AS(boxes_from_csv(bad2), InputError);
}
