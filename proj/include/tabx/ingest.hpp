#pragma once
#include <array>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "tabx/geometry.hpp"

namespace tabx {

// Words grouped into visual rows: rows ordered by vertical position, words by left edge.
struct TableWords {
    std::vector<std::vector<WordRecord>> rows;
};

// Maps a token's text to its combined character-class tag, e.g. "(45%)" -> "PUNCT-NUM-SYM-PUNCT".
using Tagger = std::function<std::string(const std::string&)>;
std::string default_tag(const std::string& text);

// Two-stage token identity: frequent tokens keep their text, the rest fall back to
// their tag, and rare/long tags collapse to UNK (id 0). Ids are dense: UNK, then
// tokens, then tags, each ordered by frequency desc / lexicographic.
struct Vocab {
    std::map<std::string, int> tokens;
    std::map<std::string, int> tags;
    int token_min_freq = 75;
    int tag_min_freq = 20;
    int max_tag_len = 7; // maximum number of tag pieces

    int size() const { return 1 + int(tokens.size()) + int(tags.size()); }
    int lookup(const std::string& text, const std::string& tag) const {
        auto it = tokens.find(text);
        if (it != tokens.end()) return it->second;
        auto jt = tags.find(tag);
        if (jt != tags.end()) return jt->second;
        return 0;
    }
    bool operator==(const Vocab&) const = default;
};

// Per-token model input. f = (dist_next, dist_prev, start, end); the activity mask
// is tracked explicitly because an active distance can legitimately be 0.
struct TokenFeat {
    int tag_id = 0;
    std::array<double, 4> f{0.0, 0.0, 0.0, 0.0};
    std::array<uint8_t, 4> active{0, 0, 0, 0};
    int label = -1; // -1 = unlabeled
};

struct FeaturizedTable {
    std::vector<std::vector<TokenFeat>> rows;
    double norm_len = 0.0;

    size_t token_count() const {
        size_t n = 0;
        for (const auto& r : rows) n += r.size();
        return n;
    }
    bool labeled() const {
        for (const auto& r : rows)
            for (const auto& t : r)
                if (t.label < 0) return false;
        return !rows.empty();
    }
};

// One corpus record: words plus optional gold labels and precomputed tags
// (both either empty or exactly parallel to words.rows).
struct CorpusTable {
    TableWords words;
    std::vector<std::vector<int>> labels;
    std::vector<std::vector<std::string>> tags;

    bool has_labels() const { return !labels.empty(); }
    bool has_tags() const { return !tags.empty(); }
};

struct TsvParse {
    std::vector<WordRecord> words;
    size_t malformed = 0;
};

// Tesseract-style TSV: level page_num block_num par_num line_num word_num left top
// width height conf text. Keeps level-5 rows with conf >= 0; malformed rows are
// counted and skipped. Throws InputError if the stream has no header line.
TsvParse parse_tsv(std::istream& in);

std::vector<WordRecord> filter_confidence(std::vector<WordRecord> words, double min_conf = 30.0);

// Rows keyed by (block, par, line), ordered by their minimum top coordinate;
// words within a row ordered by left edge.
TableWords group_rows(std::vector<WordRecord> words);

Vocab build_vocab(const std::vector<CorpusTable>& corpus, const Tagger& tagger);

// norm_len > 0 required. Distances are gap/norm_len clamped to [0,1]; exactly two
// of the four features are active for every token.
std::vector<TokenFeat> spatial_features(const std::vector<WordRecord>& row, double norm_len);

// norm_len = max over rows of (rightmost right edge - leftmost left edge).
FeaturizedTable featurize_table(const CorpusTable& t, const Vocab& v, const Tagger& tagger);

// Vocab file: "tabx-vocab 1 ..." header then [tokens] / [tags] sections of
// entry<TAB>id lines sorted by id. Round-trips byte-exactly.
void write_vocab(std::ostream& out, const Vocab& v);
Vocab read_vocab(std::istream& in);
std::string vocab_to_string(const Vocab& v);
Vocab vocab_from_string(const std::string& s);

// Corpus file (.ndtab): line 1 is a {"format_version":1,...} header, then one JSON
// object per table with rows of {text,left,top,width,height,tag?,label?}.
void write_ndtab(std::ostream& out, const std::vector<CorpusTable>& corpus);
std::vector<CorpusTable> read_ndtab(std::istream& in);
std::vector<CorpusTable> read_ndtab_file(const std::string& path);
void write_ndtab_file(const std::string& path, const std::vector<CorpusTable>& corpus);

} // namespace tabx
