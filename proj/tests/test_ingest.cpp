#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "tabx/error.hpp"
#include "tabx/ingest.hpp"

using namespace tabx;

namespace {

WordRecord word(const char* text, int left, int top, int w, int h, int line = 1, int wn = 1) {
    WordRecord r;
    r.text = text;
    r.box = BBox{left, top, w, h};
    r.conf = 95.0;
    r.line = line;
    r.word = wn;
    return r;
}

CorpusTable one_row_table(std::vector<WordRecord> row) {
    CorpusTable t;
    t.words.rows.push_back(std::move(row));
    return t;
}

} // namespace

TEST_CASE("default tag collapses character-class runs") {
    CHECK(default_tag("(45%)") == "PUNCT-NUM-SYM-PUNCT");
    CHECK(default_tag("Equity") == "X");
    CHECK(default_tag("1,234.56") == "NUM-PUNCT-NUM-PUNCT-NUM");
    CHECK(default_tag("3years") == "NUM-X");
    CHECK(default_tag("$12") == "SYM-NUM");
    CHECK(default_tag("") == "");
    CHECK(default_tag("\xc3\xa9t\xc3\xa9") == "X");  // bytes >= 128 read as letters
}

TEST_CASE("tsv parsing keeps word rows and counts malformed ones") {
    std::string tsv =
        "level\tpage_num\tblock_num\tpar_num\tline_num\tword_num\tleft\ttop\twidth\theight\tconf\ttext\n"
        "1\t1\t0\t0\t0\t0\t0\t0\t600\t800\t-1\t\n"                       // structural, conf<0: silent
        "5\t1\t2\t1\t1\t1\t50\t60\t40\t12\t96.5\tCash\n"                 // good
        "5\t1\t2\t1\t1\t2\t95\t61\t30\t11\t-1\tghost\n"                  // conf<0: silent skip
        "5\t1\t2\t1\t1\t3\t130\t60\t25\t12\t88\t\n"                      // empty text: malformed
        "5\t1\t2\t1\t2\t1\t50\t80\t0\t12\t90\tzero\n"                    // nonpositive width: malformed
        "5\t1\t2\t1\t2\t2\t50\t80\t30\t12\tnope\tbad\n"                  // non-numeric conf: malformed
        "5\t1\t2\t1\t2\t3\t50\t80\t30\n"                                 // short row: malformed
        "4\t1\t2\t1\t3\t0\t0\t100\t500\t20\t-1\t\n"                      // level 4: silent\n
        "5\t1\t2\t1\t3\t1\t50\t100\t44\t12\t71\tTotal\tassets\n";        // tab inside text: glued
    std::istringstream in(tsv);
    TsvParse p = parse_tsv(in);
    CHECK(p.malformed == 4);
    REQUIRE(p.words.size() == 2);
    CHECK(p.words[0].text == "Cash");
    CHECK(p.words[0].box == BBox{50, 60, 40, 12});
    CHECK(p.words[0].conf == doctest::Approx(96.5));
    CHECK(p.words[0].block == 2);
    CHECK(p.words[1].text == "Total\tassets");

    std::istringstream empty("");
    CHECK_THROWS_AS(parse_tsv(empty), InputError);
}

TEST_CASE("confidence filter keeps the boundary") {
    std::vector<WordRecord> ws = {word("a", 0, 0, 5, 5), word("b", 0, 0, 5, 5), word("c", 0, 0, 5, 5)};
    ws[0].conf = 29.9;
    ws[1].conf = 30.0;
    ws[2].conf = 30.1;
    auto kept = filter_confidence(std::move(ws), 30.0);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].text == "b");
}

TEST_CASE("rows group by block/par/line and sort by top coordinate") {
    std::vector<WordRecord> ws;
    auto add = [&](const char* t, int block, int line, int left, int top) {
        WordRecord w = word(t, left, top, 20, 10);
        w.block = block;
        w.line = line;
        ws.push_back(w);
    };
    add("second", 1, 1, 10, 50);
    add("first", 1, 2, 10, 20);   // higher on the page despite the larger line id
    add("first2", 1, 2, 40, 22);
    add("third", 2, 1, 10, 80);
    TableWords tw = group_rows(std::move(ws));
    REQUIRE(tw.rows.size() == 3);
    CHECK(tw.rows[0][0].text == "first");
    CHECK(tw.rows[0][1].text == "first2");  // within a row: left ascending
    CHECK(tw.rows[1][0].text == "second");
    CHECK(tw.rows[2][0].text == "third");
}

TEST_CASE("vocab stages: frequent tokens, then frequent short tags") {
    std::vector<CorpusTable> corpus;
    // "alpha" 76x crosses the token bar; "beta" 75x stays under it but its tag
    // ("X") then collects those 75 occurrences plus more from other words
    for (int i = 0; i < 76; ++i) corpus.push_back(one_row_table({word("alpha", 0, 0, 30, 10)}));
    for (int i = 0; i < 75; ++i) corpus.push_back(one_row_table({word("beta", 0, 0, 30, 10)}));
    // a tag that is frequent but too long: nine pieces
    for (int i = 0; i < 30; ++i)
        corpus.push_back(one_row_table({word("a1b2c3d4e", 0, 0, 30, 10)}));
    Vocab v = build_vocab(corpus, default_tag);
    CHECK(v.tokens.size() == 1);
    CHECK(v.tokens.count("alpha") == 1);
    CHECK(v.tokens.at("alpha") == 1);
    REQUIRE(v.tags.count("X") == 1);
    CHECK(v.tags.at("X") == 2);
    CHECK(v.tags.count("X-NUM-X-NUM-X-NUM-X-NUM-X") == 0);  // over the piece cap
    CHECK(v.size() == 3);  // unk + alpha + X

    // lookup: token id beats tag id; unknown text with unknown tag falls to 0
    CHECK(v.lookup("alpha", "X") == 1);
    CHECK(v.lookup("beta", "X") == 2);
    CHECK(v.lookup("??", "PUNCT") == 0);
}

TEST_CASE("vocab counts tags only where the token stage failed") {
    std::vector<CorpusTable> corpus;
    for (int i = 0; i < 80; ++i) corpus.push_back(one_row_table({word("Cash", 0, 0, 30, 10)}));
    // 21 distinct rare words sharing tag "X" would be needed to cross tag_min_freq;
    // here only 15 occurrences fail the token stage, so "X" stays out
    for (int i = 0; i < 15; ++i) corpus.push_back(one_row_table({word("rare", 0, 0, 30, 10)}));
    Vocab v = build_vocab(corpus, default_tag);
    CHECK(v.tokens.count("Cash") == 1);
    CHECK(v.tags.empty());  // the 80 Cash hits never reached the tag counter
}

TEST_CASE("spatial features: normalized gaps, exactly two active channels") {
    // row extent 100 px; gaps 30 and 10
    std::vector<WordRecord> row = {word("a", 0, 0, 20, 10, 1, 1), word("b", 50, 0, 10, 10, 1, 2),
                                   word("c", 70, 0, 30, 10, 1, 3)};
    auto f = spatial_features(row, 100.0);
    REQUIRE(f.size() == 3);
    // first token: start flag + distance to next
    CHECK(f[0].active[2] == 1);
    CHECK(f[0].f[2] == 1.0);
    CHECK(f[0].active[0] == 1);
    CHECK(f[0].f[0] == doctest::Approx(0.30));
    CHECK(f[0].active[1] == 0);
    CHECK(f[0].active[3] == 0);
    // middle token: both distances
    CHECK(f[1].f[1] == doctest::Approx(0.30));
    CHECK(f[1].f[0] == doctest::Approx(0.10));
    CHECK(f[1].active[2] == 0);
    // last token: end flag + distance back
    CHECK(f[2].active[3] == 1);
    CHECK(f[2].f[1] == doctest::Approx(0.10));

    for (const auto& tf : f) CHECK(tf.active[0] + tf.active[1] + tf.active[2] + tf.active[3] == 2);

    // single word: start and end both fire
    auto single = spatial_features({word("x", 5, 0, 10, 10)}, 50.0);
    CHECK(single[0].active[2] == 1);
    CHECK(single[0].active[3] == 1);

    // overlapping words clamp the gap at zero
    auto overlap = spatial_features({word("x", 0, 0, 30, 10, 1, 1), word("y", 20, 0, 30, 10, 1, 2)}, 50.0);
    CHECK(overlap[0].f[0] == 0.0);

    CHECK_THROWS_AS(spatial_features(row, 0.0), InputError);
}

TEST_CASE("featurize fills tag ids, labels and the max row extent") {
    CorpusTable t;
    t.words.rows.push_back({word("Cash", 10, 10, 40, 12, 1, 1), word("77", 100, 10, 20, 12, 1, 2)});
    t.words.rows.push_back({word("Net", 10, 30, 30, 12, 2, 1)});
    t.labels = {{0, 1}, {1}};
    Vocab v;
    v.tokens["Cash"] = 1;
    v.tags["NUM"] = 2;
    FeaturizedTable ft = featurize_table(t, v, default_tag);
    CHECK(ft.norm_len == doctest::Approx(110.0));  // widest row: 10..120
    CHECK(ft.rows[0][0].tag_id == 1);
    CHECK(ft.rows[0][1].tag_id == 2);
    CHECK(ft.rows[1][0].tag_id == 0);  // "Net" unseen, tag "X" unseen
    CHECK(ft.rows[0][0].label == 0);
    CHECK(ft.rows[0][1].label == 1);
    CHECK(ft.token_count() == 3);
    CHECK(ft.labeled());

    // a provided tag overrides the tagger
    t.tags = {{"", "MONEY"}, {""}};
    Vocab v2 = v;
    v2.tags["MONEY"] = 3;
    FeaturizedTable ft2 = featurize_table(t, v2, default_tag);
    CHECK(ft2.rows[0][1].tag_id == 3);

    CorpusTable bad = t;
    bad.labels = {{0, 0}, {1}};  // row must end in 1
    CHECK_THROWS_AS(featurize_table(bad, v, default_tag), InputError);
    CorpusTable bad2 = t;
    bad2.labels = {{1}, {1}};  // length mismatch
    CHECK_THROWS_AS(featurize_table(bad2, v, default_tag), InputError);
}

TEST_CASE("vocab text round-trip") {
    Vocab v;
    v.tokens["Total"] = 1;
    v.tokens["Cash"] = 2;
    v.tags["NUM"] = 3;
    v.tags["NUM-PUNCT-NUM"] = 4;
    Vocab back = vocab_from_string(vocab_to_string(v));
    CHECK(back == v);

    CHECK_THROWS_AS(vocab_from_string(""), InputError);
    CHECK_THROWS_AS(vocab_from_string("tabx-vocab 2\n"), InputError);
    // ids must be dense from 1
    CHECK_THROWS_AS(vocab_from_string("tabx-vocab 1\n[tokens]\nCash\t5\n"), InputError);
    CHECK_THROWS_AS(vocab_from_string("tabx-vocab 1\nCash\t1\n"), InputError);
}

TEST_CASE("ndtab round-trip preserves words, labels and tags") {
    CorpusTable a;
    a.words.rows.push_back({word("Total", 5, 5, 50, 12, 1, 1), word("9,001", 80, 5, 40, 12, 1, 2)});
    a.words.rows.push_back({word("x", 5, 25, 10, 12, 2, 1)});
    a.labels = {{0, 1}, {1}};
    CorpusTable b;  // unlabeled, tagged
    b.words.rows.push_back({word("Net", 0, 0, 30, 10, 1, 1)});
    b.tags = {{"HEAD"}};

    std::ostringstream out;
    write_ndtab(out, {a, b});
    std::istringstream in(out.str());
    auto back = read_ndtab(in);
    REQUIRE(back.size() == 2);
    CHECK(back[0].words.rows[0][1].text == "9,001");
    CHECK(back[0].words.rows[0][1].box == BBox{80, 5, 40, 12});
    CHECK(back[0].labels == a.labels);
    CHECK(back[0].has_labels());
    CHECK_FALSE(back[1].has_labels());
    CHECK(back[1].tags == b.tags);

    // first line must be the header
    std::istringstream noheader("{\"rows\":[]}\n");
    CHECK_THROWS_AS(read_ndtab(noheader), InputError);
    std::istringstream badver("{\"format_version\":9,\"type\":\"tabx-corpus\"}\n");
    CHECK_THROWS_AS(read_ndtab(badver), InputError);
    std::istringstream partial(
        "{\"format_version\":1,\"type\":\"tabx-corpus\"}\n"
        "{\"rows\":[[{\"text\":\"a\",\"left\":0,\"top\":0,\"width\":5,\"height\":5,\"label\":1},"
        "{\"text\":\"b\",\"left\":9,\"top\":0,\"width\":5,\"height\":5}]]}\n");
    CHECK_THROWS_AS(read_ndtab(partial), InputError);  // labels are all-or-none per table
    std::istringstream endzero(
        "{\"format_version\":1,\"type\":\"tabx-corpus\"}\n"
        "{\"rows\":[[{\"text\":\"a\",\"left\":0,\"top\":0,\"width\":5,\"height\":5,\"label\":0}]]}\n");
    CHECK_THROWS_AS(read_ndtab(endzero), InputError);  // rows close with label 1
    std::istringstream badbox(
        "{\"format_version\":1,\"type\":\"tabx-corpus\"}\n"
        "{\"rows\":[[{\"text\":\"a\",\"left\":0,\"top\":0,\"width\":0,\"height\":5}]]}\n");
    CHECK_THROWS_AS(read_ndtab(badbox), InputError);
}
