#include "tabx/synth.hpp"

#include <algorithm>
#include <cmath>

#include "tabx/error.hpp"
#include "tabx/rng.hpp"

namespace tabx::synth {

namespace {

// layout grid shared by the generator and the raster renderer
constexpr int kCharW = 7, kGlyphH = 14, kRowPitch = 26;
constexpr int kLeft = 60, kTop = 60;
constexpr int kWordGap = 5;
// clean tables: label zone [60,238), numeric column c right-aligned at 238+135c
constexpr int kLabelZoneEnd = 238;
constexpr int kColPitch = 135;
// noisy tables: first amount right-aligned at 470, middle header word at 557,
// rightmost header word at 645, so every table shares (jitter aside) the same
// max row extent
constexpr int kN1Right = 470;
constexpr int kN2Right = 557;
constexpr int kFarRight = 645;

// 5-8 character words keep every label cell's width within a 0.42 ratio of the
// widest, which keeps within-column interval IOU clear of the 0.25 trigger
const char* kLexicon[] = {
    "Trade",    "Total",    "Lease",    "Notes",    "Bonds",    "Other",    "Gross",    "Fixed",
    "Margin",   "Equity",   "Income",   "Shares",   "Funded",   "Unpaid",   "Assets",   "Billed",
    "Accrued",  "Prepaid",  "Revenue",  "Pension",  "Imputed",  "Secured",  "Capital",  "Current",
    "Payables", "Deferred", "Interest", "Expenses", "Earnings", "Reserves", "Goodwill", "Advances",
};
constexpr int kLexiconN = int(sizeof(kLexicon) / sizeof(kLexicon[0]));
const char* kLabelHeaders[] = {"Description", "Particulars"};

int word_w(const std::string& s) { return int(s.size()) * kCharW; }

int ri(Rng& rng, int lo, int hi) { return int(rng.next_int(lo, hi)); }

std::string make_amount(Rng& rng, int dmin, int dmax) {
    int d = ri(rng, dmin, dmax);
    std::string digits;
    digits += char('1' + int(rng.next_below(9)));
    for (int i = 1; i < d; ++i) digits += char('0' + int(rng.next_below(10)));
    int lead = d % 3 == 0 ? 3 : d % 3;
    std::string out = digits.substr(0, size_t(lead));
    for (int i = lead; i < d; i += 3) {
        out += ',';
        out += digits.substr(size_t(i), 3);
    }
    if (rng.next_double() < 0.2) {
        out += '.';
        out += char('0' + int(rng.next_below(10)));
        out += char('0' + int(rng.next_below(10)));
    }
    if (rng.next_double() < 0.25) out = '(' + out + ')';
    return out;
}

void check_spec(const SynthSpec& s) {
    if (s.n_tables < 0) throw InputError("synth: n_tables must be nonnegative");
    if (s.min_rows < 3 || s.max_rows > 30 || s.min_rows > s.max_rows)
        throw InputError("synth: rows must satisfy 3 <= min <= max <= 30");
    if (s.min_cols < 2 || s.max_cols > 8 || s.min_cols > s.max_cols)
        throw InputError("synth: cols must satisfy 2 <= min <= max <= 8");
    if (s.jitter < 0 || s.jitter > 4) throw InputError("synth: jitter must be in [0,4]");
    if (s.conf_noise < 0 || s.conf_noise > 70) throw InputError("synth: conf_noise must be in [0,70]");
    if (s.drop_prob < 0 || s.drop_prob > 1 || s.merge_prob < 0 || s.merge_prob > 1)
        throw InputError("synth: probabilities must be in [0,1]");
}

struct RowBuild {
    std::vector<WordRecord> words;
    std::vector<int> cell_of;
    int next_cell = 0;
};

void put_cell(RowBuild& rb, const std::vector<std::pair<std::string, int>>& ws, int y, int line,
              Rng& rng, const SynthSpec& s) {
    int cid = rb.next_cell++;
    for (const auto& [text, x] : ws) {
        WordRecord w;
        w.text = text;
        int xx = x;
        if (s.jitter > 0) xx += ri(rng, -s.jitter, s.jitter);
        w.box = BBox{xx, y, word_w(text), kGlyphH};
        w.conf = s.conf_noise > 0 ? 100.0 - rng.next_double() * s.conf_noise : 95.0;
        w.line = line;
        w.word = int(rb.words.size());
        rb.words.push_back(std::move(w));
        rb.cell_of.push_back(cid);
    }
}

// intended cells, in construction order (before any drop noise)
std::vector<GridCell> row_cells(const RowBuild& rb) {
    std::vector<GridCell> out(size_t(rb.next_cell));
    for (size_t i = 0; i < rb.words.size(); ++i) {
        GridCell& c = out[size_t(rb.cell_of[i])];
        if (c.vacant()) {
            c.text = rb.words[i].text;
            c.boxes = {rb.words[i].box};
        } else {
            c.text += ' ';
            c.text += rb.words[i].text;
            c.boxes[0] = box_union(c.boxes[0], rb.words[i].box);
        }
    }
    return out;
}

void apply_drop(RowBuild& rb, Rng& rng, double p) {
    if (p <= 0.0) return;
    std::vector<WordRecord> kept;
    std::vector<int> kept_cell;
    for (size_t i = 0; i < rb.words.size(); ++i) {
        if (rng.next_double() < p) continue;
        kept.push_back(rb.words[i]);
        kept_cell.push_back(rb.cell_of[i]);
    }
    if (kept.empty()) { // a fully vanished row would break ingestion; keep one word
        kept.push_back(rb.words[0]);
        kept_cell.push_back(rb.cell_of[0]);
    }
    for (size_t i = 0; i < kept.size(); ++i) kept[i].word = int(i);
    rb.words = std::move(kept);
    rb.cell_of = std::move(kept_cell);
}

std::vector<int> row_labels(const RowBuild& rb) {
    std::vector<int> out(rb.words.size());
    for (size_t i = 0; i < rb.words.size(); ++i)
        out[i] = (i + 1 == rb.words.size() || rb.cell_of[i + 1] != rb.cell_of[i]) ? 1 : 0;
    return out;
}

void push_row(MadeTable& mt, RowBuild& rb, int r, Rng& rng, const SynthSpec& s, bool allow_drop) {
    mt.truth.cells[size_t(r)] = row_cells(rb);
    if (allow_drop) apply_drop(rb, rng, s.drop_prob);
    mt.table.labels.push_back(row_labels(rb));
    mt.table.words.rows.push_back(std::move(rb.words));
}

MadeTable gen_clean(const SynthSpec& s, Rng& rng) {
    int rows = ri(rng, s.min_rows, s.max_rows);
    int cols = ri(rng, s.min_cols, s.max_cols);
    if (kLabelZoneEnd + kColPitch * (cols - 1) + 20 > s.page_w ||
        kTop + kRowPitch * rows + 20 > s.page_h)
        throw InputError("synth: layout overflows page");

    MadeTable mt;
    mt.truth.n_rows = size_t(rows);
    mt.truth.n_cols = size_t(cols);
    mt.truth.cells.assign(size_t(rows), {});
    int year = ri(rng, 2015, 2023);

    for (int r = 0; r < rows; ++r) {
        int y = kTop + kRowPitch * r;
        RowBuild rb;
        if (r == 0) {
            put_cell(rb, {{kLabelHeaders[rng.next_below(2)], kLeft}}, y, r, rng, s);
            for (int c = 1; c < cols; ++c) {
                std::string yr = std::to_string(year - (c - 1));
                int right = kLabelZoneEnd + kColPitch * c;
                int x0 = right - (2 * kCharW + kWordGap + word_w(yr));
                put_cell(rb, {{"FY", x0}, {yr, x0 + 2 * kCharW + kWordGap}}, y, r, rng, s);
            }
        } else {
            int k = ri(rng, 2, 3);
            std::vector<std::pair<std::string, int>> ws;
            int x = kLeft;
            for (int i = 0; i < k; ++i) {
                std::string w = kLexicon[rng.next_below(kLexiconN)];
                int ww = word_w(w);
                ws.push_back({std::move(w), x});
                x += ww + kWordGap;
            }
            put_cell(rb, ws, y, r, rng, s);
            for (int c = 1; c < cols; ++c) {
                std::string amt = make_amount(rng, 6, 8);
                int right = kLabelZoneEnd + kColPitch * c;
                put_cell(rb, {{amt, right - word_w(amt)}}, y, r, rng, s);
            }
        }
        push_row(mt, rb, r, rng, s, r > 0);
    }
    mt.true_cells = (long long)rows * cols;
    return mt;
}

MadeTable gen_noisy(const SynthSpec& s, Rng& rng) {
    bool famA = rng.next_bool(0.5);
    int rows = ri(rng, s.min_rows, s.max_rows);
    int cols = famA ? 4 : 2;
    if (kFarRight + 20 > s.page_w || kTop + kRowPitch * rows + 20 > s.page_h)
        throw InputError("synth: layout overflows page");

    MadeTable mt;
    mt.truth.n_rows = size_t(rows);
    mt.truth.n_cols = size_t(cols);
    mt.truth.cells.assign(size_t(rows), {});

    for (int r = 0; r < rows; ++r) {
        int y = kTop + kRowPitch * r;
        RowBuild rb;
        if (r == 0) {
            // the header is the family beacon: 4 single-word cells vs 2
            put_cell(rb, {{"Items", kLeft}}, y, r, rng, s);
            if (famA) {
                int yr = ri(rng, 2015, 2023);
                std::string y1 = std::to_string(yr), y2 = std::to_string(yr - 1),
                            y3 = std::to_string(yr - 2);
                put_cell(rb, {{y1, kN1Right - word_w(y1)}}, y, r, rng, s);
                put_cell(rb, {{y2, kN2Right - word_w(y2)}}, y, r, rng, s);
                put_cell(rb, {{y3, kFarRight - word_w(y3)}}, y, r, rng, s);
            } else {
                put_cell(rb, {{"Totals", kFarRight - word_w("Totals")}}, y, r, rng, s);
            }
        } else {
            int k = ri(rng, 3, 4);
            std::vector<std::pair<std::string, int>> ws;
            int x = kLeft;
            for (int i = 0; i < k; ++i) {
                std::string w = kLexicon[rng.next_below(kLexiconN)];
                int ww = word_w(w);
                ws.push_back({std::move(w), x});
                x += ww + ri(rng, 4, 8);
            }
            put_cell(rb, ws, y, r, rng, s);

            // Both amount gaps share one geometry class per row, so an
            // ambiguous row leaks nothing about its family while a revealing
            // row broadcasts it; the break labels differ only by family.
            std::string a1 = make_amount(rng, 6, 8);
            std::string a2 = make_amount(rng, 6, 7);
            std::string a3 = make_amount(rng, 6, 7);
            bool ambiguous = rng.next_double() < 0.5;
            auto gap = [&]() {
                if (ambiguous) return ri(rng, 26, 34);
                if (!famA) return ri(rng, 6, 12);
                int g = ri(rng, 55, 70);
                if (s.merge_prob > 0 && rng.next_double() < s.merge_prob)
                    g = ri(rng, 6, 12); // true break rendered with an intra-cell gap
                return g;
            };
            int g1 = gap(), g2 = gap();
            int x1 = kN1Right - word_w(a1);
            int x2 = kN1Right + g1;
            int x3 = x2 + word_w(a2) + g2;
            if (famA) {
                put_cell(rb, {{a1, x1}}, y, r, rng, s);
                put_cell(rb, {{a2, x2}}, y, r, rng, s);
                put_cell(rb, {{a3, x3}}, y, r, rng, s);
            } else {
                put_cell(rb, {{a1, x1}, {a2, x2}, {a3, x3}}, y, r, rng, s);
            }
        }
        push_row(mt, rb, r, rng, s, r > 0);
    }
    mt.true_cells = (long long)rows * cols;
    return mt;
}

} // namespace

Difficulty difficulty_from_name(const std::string& s) {
    if (s == "clean") return Difficulty::Clean;
    if (s == "noisy") return Difficulty::Noisy;
    throw InputError("unknown difficulty: " + s);
}

SynthSpec make_spec(Difficulty d, uint64_t seed, int n_tables) {
    SynthSpec s;
    s.seed = seed;
    s.n_tables = n_tables;
    s.difficulty = d;
    if (d == Difficulty::Noisy) {
        s.min_rows = 5;
        s.max_rows = 13;
        s.jitter = 2;
        s.conf_noise = 15.0;
        s.merge_prob = 0.02;
    }
    return s;
}

MadeTable gen_table(const SynthSpec& spec, uint64_t index) {
    check_spec(spec);
    Rng rng(Rng::mix(spec.seed, index));
    return spec.difficulty == Difficulty::Clean ? gen_clean(spec, rng) : gen_noisy(spec, rng);
}

std::vector<MadeTable> gen_corpus(const SynthSpec& spec) {
    check_spec(spec);
    std::vector<MadeTable> out;
    out.reserve(size_t(spec.n_tables));
    for (int i = 0; i < spec.n_tables; ++i) out.push_back(gen_table(spec, uint64_t(i)));
    return out;
}

namespace {

bool rects_apart(const BBox& a, const BBox& b, int margin) {
    return a.right() + margin <= b.left || b.right() + margin <= a.left ||
           a.bottom() + margin <= b.top || b.bottom() + margin <= a.top;
}

void fill(ProbMask& m, const BBox& b, double v) {
    for (int y = b.top; y < b.bottom(); ++y)
        for (int x = b.left; x < b.right(); ++x) m.at(x, y) = v;
}

} // namespace

MaskPage gen_mask_page(const SynthSpec& spec, uint64_t index) {
    if (spec.page_w < 250 || spec.page_h < 350)
        throw InputError("synth: mask pages need at least a 250x350 page");
    Rng rng(Rng::mix(spec.seed, index));
    const int W = spec.page_w, H = spec.page_h;
    const double bg = 13 / 255.0, body = 230 / 255.0, strip = 184 / 255.0, rim = 166 / 255.0;

    MaskPage page;
    page.mask = ProbMask(W, H, bg);
    page.opt_lo = rim;
    page.opt_hi = strip;

    // boxes span [W/5,W/3] x [H/7,H/4]: always >= WH/35, far above the 1% floor
    auto box_w = [&] { return ri(rng, W / 5, W / 3); };
    auto box_h = [&] { return ri(rng, H / 7, H / 4); };

    if (index % 4 == 3) { // stacked pair with an 8 px seam for separator work
        int w = box_w(), h1 = box_h(), h2 = box_h();
        int x = ri(rng, 2, W - w - 2);
        int y = ri(rng, 2, H - (h1 + 8 + h2) - 2);
        page.boxes.push_back(BBox{x, y, w, h1});
        page.boxes.push_back(BBox{x, y + h1 + 8, w, h2});
    } else {
        int n = ri(rng, 1, 3);
        for (int k = 0; k < n; ++k) {
            int w = box_w(), h = box_h();
            for (int attempt = 0;; ++attempt) {
                if (attempt >= 1000) throw InputError("synth: could not place mask boxes");
                BBox b{ri(rng, 2, W - w - 2), ri(rng, 2, H - h - 2), w, h};
                bool ok = true;
                for (const auto& o : page.boxes)
                    if (!rects_apart(b, o, 12)) ok = false;
                if (ok) {
                    page.boxes.push_back(b);
                    break;
                }
            }
        }
    }

    for (const auto& b : page.boxes) fill(page.mask, b, body);

    // interior holes: rectanglize must bridge them; kept clear of the top strip
    for (const auto& b : page.boxes) {
        int holes = ri(rng, 0, 2);
        for (int k = 0; k < holes; ++k) {
            int hw = ri(rng, 3, 10), hh = ri(rng, 3, 10);
            int lo_x = b.left + 2, hi_x = b.right() - 2 - hw;
            int lo_y = b.top + 6, hi_y = b.bottom() - 2 - hh;
            if (lo_x > hi_x || lo_y > hi_y) continue;
            fill(page.mask, BBox{ri(rng, lo_x, hi_x), ri(rng, lo_y, hi_y), hw, hh}, bg);
        }
    }

    // tune ribbon on the first box: top strip just below the optimum, rim ring just above it
    const BBox& d = page.boxes[0];
    fill(page.mask, BBox{d.left, d.top, d.width, 4}, strip);
    for (int x = d.left - 1; x <= d.right(); ++x) {
        page.mask.at(x, d.top - 1) = rim;
        page.mask.at(x, d.bottom()) = rim;
    }
    for (int y = d.top - 1; y <= d.bottom(); ++y) {
        page.mask.at(d.left - 1, y) = rim;
        page.mask.at(d.right(), y) = rim;
    }

    // sub-1% speckles well away from every box
    int speckles = ri(rng, 3, 6);
    for (int k = 0; k < speckles; ++k) {
        int sw = ri(rng, 2, 6), sh = ri(rng, 2, 6);
        for (int attempt = 0; attempt < 200; ++attempt) {
            BBox sp{ri(rng, 0, W - sw), ri(rng, 0, H - sh), sw, sh};
            bool ok = true;
            for (const auto& o : page.boxes)
                if (!rects_apart(sp, o, 10)) ok = false;
            if (ok) {
                fill(page.mask, sp, body);
                break;
            }
        }
    }
    // detection reports regions in row-major first-pixel order; match it
    std::sort(page.boxes.begin(), page.boxes.end(), [](const BBox& a, const BBox& b) {
        return a.top != b.top ? a.top < b.top : a.left < b.left;
    });
    return page;
}

namespace {

void mark(BoolMask& m, const BBox& b) {
    for (int y = std::max(0, b.top); y < std::min(m.height, b.bottom()); ++y)
        for (int x = std::max(0, b.left); x < std::min(m.width, b.right()); ++x) m.at(x, y) = 1;
}

void draw(GrayImage& img, const BoolMask& px) {
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            if (px.at(x, y)) img.at(x, y) = 0;
}

} // namespace

RasterPage render_raster(const MadeTable& t, uint64_t seed, bool with_rules) {
    if (t.table.words.rows.empty()) throw InputError("render: empty table");
    Rng rng(seed);

    int min_x = 1 << 30, max_x = 0, min_y = 1 << 30, max_y = 0;
    for (const auto& row : t.table.words.rows)
        for (const auto& w : row) {
            min_x = std::min(min_x, w.box.left);
            max_x = std::max(max_x, w.box.right());
            min_y = std::min(min_y, w.box.top);
            max_y = std::max(max_y, w.box.bottom());
        }

    RasterPage page;
    const int W = max_x + 30, H = max_y + 24;
    page.image = GrayImage(W, H, 255);
    page.rule_px = BoolMask(W, H);
    page.glyph_px = BoolMask(W, H);

    for (const auto& row : t.table.words.rows)
        for (const auto& w : row)
            for (int ci = 0; ci < int(w.text.size()); ++ci)
                mark(page.glyph_px, BBox{w.box.left + ci * kCharW, w.box.top, 5, kGlyphH});

    if (with_rules) {
        int rx = std::max(0, min_x - 10), rw = std::min(W, max_x + 10) - rx;
        std::vector<int> rule_tops;
        {
            int th = 1 + int(rng.next_below(2));
            rule_tops.push_back(min_y - 4 - th);
            mark(page.rule_px, BBox{rx, min_y - 4 - th, rw, th});
        }
        if (t.truth.n_rows >= 2) { // separate the header from the body
            int th = 1 + int(rng.next_below(2));
            mark(page.rule_px, BBox{rx, min_y + kGlyphH + 4, rw, th});
        }
        int bottom_th = 1 + int(rng.next_below(2));
        mark(page.rule_px, BBox{rx, max_y + 4, rw, bottom_th});

        int v_top = rule_tops[0];
        int v_len = (max_y + 4 + bottom_th) - v_top;
        for (size_t c = 1; c < t.truth.n_cols; ++c) {
            int prev_right = 0, next_left = 1 << 30;
            for (const auto& row : t.truth.cells) {
                if (!row[c - 1].vacant()) prev_right = std::max(prev_right, row[c - 1].boxes[0].right());
                if (!row[c].vacant()) next_left = std::min(next_left, row[c].boxes[0].left);
            }
            int tv = 1 + int(rng.next_below(2));
            if (next_left - prev_right < tv + 6) continue; // not enough glyph clearance
            int xm = (prev_right + next_left - tv) / 2;
            mark(page.rule_px, BBox{xm, v_top, tv, v_len});
        }
    }

    draw(page.image, page.rule_px);
    draw(page.image, page.glyph_px);
    return page;
}

} // namespace tabx::synth
