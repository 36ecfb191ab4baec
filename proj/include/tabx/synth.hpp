#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tabx/align.hpp"
#include "tabx/image.hpp"
#include "tabx/ingest.hpp"

namespace tabx::synth {

enum class Difficulty { Clean, Noisy };

Difficulty difficulty_from_name(const std::string& s);

// Clean: anchored columns, zero jitter/noise — gold labels are a pure threshold
// function of the next-gap and grid recovery from gold labels is exact.
// Noisy: two table families that share an ambiguous mid-gap whose segmentation
// label depends on the family, revealed by the header and the unambiguous rows;
// row-local context is required to resolve it. min/max_cols apply to Clean only.
struct SynthSpec {
    uint64_t seed = 1;
    int n_tables = 10;
    Difficulty difficulty = Difficulty::Clean;
    int min_rows = 4, max_rows = 12; // total grid rows, header included; bounds [3,30]
    int min_cols = 2, max_cols = 5;  // bounds [2,8]
    int jitter = 0;                  // per-word horizontal wobble in pixels
    double conf_noise = 0.0;         // confidences drawn from [100-conf_noise, 100]
    double drop_prob = 0.0;          // per-word chance an OCR word goes missing (body only)
    double merge_prob = 0.0;         // chance a true cell break is rendered with an intra-cell gap
    int page_w = 1240, page_h = 1754;
};

// canonical per-difficulty knob settings
SynthSpec make_spec(Difficulty d, uint64_t seed, int n_tables);

struct MadeTable {
    CorpusTable table; // words + gold labels
    TableGrid truth;   // the generator's intended grid
    long long true_cells = 0;
};

MadeTable gen_table(const SynthSpec& spec, uint64_t index);
std::vector<MadeTable> gen_corpus(const SynthSpec& spec);

struct MaskPage {
    ProbMask mask;
    std::vector<BBox> boxes;
    // thresholds in (opt_lo, opt_hi] recover every box exactly; anything lower
    // grabs the rim ring, anything higher loses the top strip
    double opt_lo = 0.0, opt_hi = 0.0;
};

// 1-3 high-probability blobs with interior holes and sub-1% speckles; every
// fourth page is a stacked pair for separator exercises. Uses spec.page_w/h.
MaskPage gen_mask_page(const SynthSpec& spec, uint64_t index);

struct RasterPage {
    GrayImage image;
    BoolMask rule_px;  // ground-truth ruling pixels
    BoolMask glyph_px; // ground-truth glyph pixels
};

// Filled-rectangle glyphs (ink runs well under 50 px) plus ruled lines >= 50 px
// kept >= 3 px clear of every glyph.
RasterPage render_raster(const MadeTable& t, uint64_t seed, bool with_rules = true);

} // namespace tabx::synth
