#include "tabx/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "tabx/error.hpp"

namespace tabx {

namespace {

enum class CharClass { Letter, Digit, Sym, Punct };

CharClass classify(unsigned char c) {
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 128) return CharClass::Letter;
    if (c >= '0' && c <= '9') return CharClass::Digit;
    static const std::string syms = "$%&*+=~^<>|/\\#@";
    if (syms.find(char(c)) != std::string::npos) return CharClass::Sym;
    return CharClass::Punct;
}

const char* class_name(CharClass c) {
    switch (c) {
        case CharClass::Letter: return "X";
        case CharClass::Digit: return "NUM";
        case CharClass::Sym: return "SYM";
        default: return "PUNCT";
    }
}

int tag_pieces(const std::string& tag) {
    if (tag.empty()) return 0;
    return int(std::count(tag.begin(), tag.end(), '-')) + 1;
}

} // namespace

std::string default_tag(const std::string& text) {
    std::string tag;
    bool have = false;
    CharClass cur = CharClass::Punct;
    for (unsigned char c : text) {
        CharClass cls = classify(c);
        if (!have || cls != cur) {
            if (have) tag += '-';
            tag += class_name(cls);
            cur = cls;
            have = true;
        }
    }
    return tag;
}

TsvParse parse_tsv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw InputError("tsv: empty stream (missing header)");
    TsvParse out;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> f;
        size_t pos = 0;
        while (true) {
            size_t tab = line.find('\t', pos);
            if (tab == std::string::npos) {
                f.push_back(line.substr(pos));
                break;
            }
            f.push_back(line.substr(pos, tab - pos));
            pos = tab + 1;
        }
        if (f.size() < 12) {
            out.malformed++;
            continue;
        }
        // paranoid: if the text itself held tabs, glue the tail back together
        if (f.size() > 12)
            for (size_t i = 12; i < f.size(); ++i) f[11] += '\t' + f[i];
        long nums[10];
        double conf;
        bool ok = true;
        for (int i = 0; i < 10 && ok; ++i) {
            try {
                size_t used = 0;
                nums[i] = std::stol(f[i], &used);
                if (used != f[i].size()) ok = false;
            } catch (...) {
                ok = false;
            }
        }
        if (ok) {
            try {
                size_t used = 0;
                conf = std::stod(f[10], &used);
                if (used != f[10].size()) ok = false;
            } catch (...) {
                ok = false;
            }
        }
        if (!ok) {
            out.malformed++;
            continue;
        }
        if (nums[0] != 5) continue;       // structural (page/block/par/line) row
        if (conf < 0.0) continue;         // non-word row carries conf -1
        if (conf > 100.0 || nums[6] < 0 || nums[7] < 0 || nums[8] <= 0 || nums[9] <= 0 || f[11].empty()) {
            out.malformed++;
            continue;
        }
        WordRecord w;
        w.text = f[11];
        w.box = BBox{int(nums[6]), int(nums[7]), int(nums[8]), int(nums[9])};
        w.conf = conf;
        w.page = int(nums[1]);
        w.block = int(nums[2]);
        w.par = int(nums[3]);
        w.line = int(nums[4]);
        w.word = int(nums[5]);
        out.words.push_back(std::move(w));
    }
    return out;
}

std::vector<WordRecord> filter_confidence(std::vector<WordRecord> words, double min_conf) {
    std::vector<WordRecord> kept;
    kept.reserve(words.size());
    for (auto& w : words)
        if (w.conf >= min_conf) kept.push_back(std::move(w));
    return kept;
}

TableWords group_rows(std::vector<WordRecord> words) {
    // line ids only roughly correspond to visual rows, so rows are re-sorted by
    // their minimum top coordinate afterwards.
    std::map<std::tuple<int, int, int>, std::vector<WordRecord>> by_line;
    for (auto& w : words) by_line[{w.block, w.par, w.line}].push_back(std::move(w));

    struct RowEntry {
        int min_top;
        std::tuple<int, int, int> key;
        std::vector<WordRecord> words;
    };
    std::vector<RowEntry> entries;
    for (auto& [key, ws] : by_line) {
        int mt = ws.front().box.top;
        for (const auto& w : ws) mt = std::min(mt, w.box.top);
        entries.push_back(RowEntry{mt, key, std::move(ws)});
    }
    std::sort(entries.begin(), entries.end(), [](const RowEntry& a, const RowEntry& b) {
        if (a.min_top != b.min_top) return a.min_top < b.min_top;
        return a.key < b.key;
    });
    TableWords out;
    for (auto& e : entries) {
        std::sort(e.words.begin(), e.words.end(), [](const WordRecord& a, const WordRecord& b) {
            if (a.box.left != b.box.left) return a.box.left < b.box.left;
            if (a.word != b.word) return a.word < b.word;
            return a.text < b.text;
        });
        out.rows.push_back(std::move(e.words));
    }
    return out;
}

namespace {

std::string effective_tag(const CorpusTable& t, size_t r, size_t i, const Tagger& tagger) {
    if (t.has_tags() && r < t.tags.size() && i < t.tags[r].size() && !t.tags[r][i].empty())
        return t.tags[r][i];
    return tagger(t.words.rows[r][i].text);
}

} // namespace

Vocab build_vocab(const std::vector<CorpusTable>& corpus, const Tagger& tagger) {
    if (corpus.empty()) throw InputError("build_vocab: empty corpus");
    std::map<std::string, long long> tok_freq;
    for (const auto& t : corpus)
        for (const auto& row : t.words.rows)
            for (const auto& w : row) tok_freq[w.text]++;

    Vocab v;
    std::vector<std::pair<long long, std::string>> order;
    for (const auto& [tok, n] : tok_freq)
        if (n > v.token_min_freq) order.emplace_back(n, tok);
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    int next_id = 1;
    for (const auto& [n, tok] : order) v.tokens[tok] = next_id++;

    // tag frequencies are counted over occurrences that failed the token stage
    std::map<std::string, long long> tag_freq;
    for (const auto& t : corpus)
        for (size_t r = 0; r < t.words.rows.size(); ++r)
            for (size_t i = 0; i < t.words.rows[r].size(); ++i) {
                const auto& w = t.words.rows[r][i];
                if (v.tokens.count(w.text)) continue;
                tag_freq[effective_tag(t, r, i, tagger)]++;
            }
    order.clear();
    for (const auto& [tag, n] : tag_freq)
        if (n > v.tag_min_freq && tag_pieces(tag) <= v.max_tag_len) order.emplace_back(n, tag);
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (const auto& [n, tag] : order) v.tags[tag] = next_id++;
    return v;
}

std::vector<TokenFeat> spatial_features(const std::vector<WordRecord>& row, double norm_len) {
    if (norm_len <= 0.0) throw InputError("spatial_features: norm_len must be positive");
    std::vector<TokenFeat> out(row.size());
    const int n = int(row.size());
    for (int i = 0; i < n; ++i) {
        TokenFeat& tf = out[i];
        if (i == 0) {
            tf.f[2] = 1.0;
            tf.active[2] = 1;
        } else {
            double gap = double(row[i].box.left) - double(row[i - 1].box.right());
            tf.f[1] = std::clamp(gap / norm_len, 0.0, 1.0);
            tf.active[1] = 1;
        }
        if (i == n - 1) {
            tf.f[3] = 1.0;
            tf.active[3] = 1;
        } else {
            double gap = double(row[i + 1].box.left) - double(row[i].box.right());
            tf.f[0] = std::clamp(gap / norm_len, 0.0, 1.0);
            tf.active[0] = 1;
        }
    }
    return out;
}

FeaturizedTable featurize_table(const CorpusTable& t, const Vocab& v, const Tagger& tagger) {
    if (t.words.rows.empty()) throw InputError("featurize_table: table has no rows");
    if (t.has_labels() && t.labels.size() != t.words.rows.size())
        throw InputError("featurize_table: label shape mismatch");

    double norm_len = 0.0;
    for (const auto& row : t.words.rows) {
        if (row.empty()) throw InputError("featurize_table: empty row");
        int lo = row.front().box.left, hi = row.front().box.right();
        for (const auto& w : row) {
            lo = std::min(lo, w.box.left);
            hi = std::max(hi, w.box.right());
        }
        norm_len = std::max(norm_len, double(hi - lo));
    }

    FeaturizedTable out;
    out.norm_len = norm_len;
    for (size_t r = 0; r < t.words.rows.size(); ++r) {
        const auto& row = t.words.rows[r];
        auto feats = spatial_features(row, norm_len);
        if (t.has_labels()) {
            if (t.labels[r].size() != row.size()) throw InputError("featurize_table: label length mismatch");
            if (t.labels[r].back() != 1)
                throw InputError("featurize_table: final token of a labeled row must have label 1");
        }
        for (size_t i = 0; i < row.size(); ++i) {
            feats[i].tag_id = v.lookup(row[i].text, effective_tag(t, r, i, tagger));
            if (t.has_labels()) feats[i].label = t.labels[r][i];
        }
        out.rows.push_back(std::move(feats));
    }
    return out;
}

void write_vocab(std::ostream& out, const Vocab& v) {
    out << "tabx-vocab 1 token_min=" << v.token_min_freq << " tag_min=" << v.tag_min_freq
        << " max_tag_len=" << v.max_tag_len << "\n";
    std::vector<std::pair<int, std::string>> rows;
    for (const auto& [tok, id] : v.tokens) rows.emplace_back(id, tok);
    std::sort(rows.begin(), rows.end());
    out << "[tokens]\n";
    for (const auto& [id, tok] : rows) out << tok << '\t' << id << '\n';
    rows.clear();
    for (const auto& [tag, id] : v.tags) rows.emplace_back(id, tag);
    std::sort(rows.begin(), rows.end());
    out << "[tags]\n";
    for (const auto& [id, tag] : rows) out << tag << '\t' << id << '\n';
}

Vocab read_vocab(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw InputError("vocab: empty stream");
    Vocab v;
    {
        std::istringstream hs(line);
        std::string magic;
        int ver = 0;
        hs >> magic >> ver;
        if (magic != "tabx-vocab" || ver != 1) throw InputError("vocab: bad header");
        std::string kv;
        while (hs >> kv) {
            auto eq = kv.find('=');
            if (eq == std::string::npos) throw InputError("vocab: bad header field " + kv);
            std::string key = kv.substr(0, eq);
            int val = std::stoi(kv.substr(eq + 1));
            if (key == "token_min") v.token_min_freq = val;
            else if (key == "tag_min") v.tag_min_freq = val;
            else if (key == "max_tag_len") v.max_tag_len = val;
            else throw InputError("vocab: unknown header field " + key);
        }
    }
    int section = 0; // 1 = tokens, 2 = tags
    std::vector<int> ids;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.find('\t') == std::string::npos) {
            if (line == "[tokens]") section = 1;
            else if (line == "[tags]") section = 2;
            else throw InputError("vocab: unexpected line " + line);
            continue;
        }
        auto tab = line.rfind('\t');
        std::string entry = line.substr(0, tab);
        int id;
        try {
            id = std::stoi(line.substr(tab + 1));
        } catch (...) {
            throw InputError("vocab: bad id on line " + line);
        }
        if (id < 1 || section == 0) throw InputError("vocab: entry outside section or id < 1");
        auto& dst = section == 1 ? v.tokens : v.tags;
        if (!dst.emplace(entry, id).second) throw InputError("vocab: duplicate entry " + entry);
        ids.push_back(id);
    }
    std::sort(ids.begin(), ids.end());
    for (size_t i = 0; i < ids.size(); ++i)
        if (ids[i] != int(i) + 1) throw InputError("vocab: ids are not dense");
    return v;
}

std::string vocab_to_string(const Vocab& v) {
    std::ostringstream ss;
    write_vocab(ss, v);
    return ss.str();
}

Vocab vocab_from_string(const std::string& s) {
    std::istringstream ss(s);
    return read_vocab(ss);
}

void write_ndtab(std::ostream& out, const std::vector<CorpusTable>& corpus) {
    nlohmann::json header = {{"format_version", 1}, {"type", "tabx-corpus"}};
    out << header.dump() << '\n';
    for (const auto& t : corpus) {
        nlohmann::json rows = nlohmann::json::array();
        for (size_t r = 0; r < t.words.rows.size(); ++r) {
            nlohmann::json row = nlohmann::json::array();
            for (size_t i = 0; i < t.words.rows[r].size(); ++i) {
                const auto& w = t.words.rows[r][i];
                nlohmann::json jw = {{"text", w.text},
                                     {"left", w.box.left},
                                     {"top", w.box.top},
                                     {"width", w.box.width},
                                     {"height", w.box.height}};
                if (t.has_tags() && !t.tags[r][i].empty()) jw["tag"] = t.tags[r][i];
                if (t.has_labels()) jw["label"] = t.labels[r][i];
                row.push_back(std::move(jw));
            }
            rows.push_back(std::move(row));
        }
        nlohmann::json jt = {{"rows", std::move(rows)}};
        out << jt.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
    }
}

std::vector<CorpusTable> read_ndtab(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw InputError("ndtab: empty stream");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const std::exception& e) {
        throw InputError(std::string("ndtab: bad header line: ") + e.what());
    }
    if (!header.contains("format_version") || header["format_version"] != 1)
        throw InputError("ndtab: unsupported format_version");

    std::vector<CorpusTable> corpus;
    size_t lineno = 1;
    while (std::getline(in, line)) {
        lineno++;
        if (line.empty()) continue;
        nlohmann::json jt;
        try {
            jt = nlohmann::json::parse(line);
        } catch (const std::exception& e) {
            throw InputError("ndtab: bad json on line " + std::to_string(lineno) + ": " + e.what());
        }
        if (!jt.contains("rows") || !jt["rows"].is_array())
            throw InputError("ndtab: record without rows on line " + std::to_string(lineno));
        CorpusTable t;
        bool any_label = false, any_tag = false;
        for (const auto& jrow : jt["rows"]) {
            if (!jrow.is_array() || jrow.empty())
                throw InputError("ndtab: empty or non-array row on line " + std::to_string(lineno));
            std::vector<WordRecord> row;
            std::vector<int> labels;
            std::vector<std::string> tags;
            for (const auto& jw : jrow) {
                WordRecord w;
                try {
                    w.text = jw.at("text").get<std::string>();
                    w.box = BBox{jw.at("left").get<int>(), jw.at("top").get<int>(),
                                 jw.at("width").get<int>(), jw.at("height").get<int>()};
                } catch (const std::exception& e) {
                    throw InputError("ndtab: bad word on line " + std::to_string(lineno) + ": " + e.what());
                }
                if (w.box.width <= 0 || w.box.height <= 0)
                    throw InputError("ndtab: non-positive box on line " + std::to_string(lineno));
                w.conf = 100.0;
                w.line = int(t.words.rows.size());
                w.word = int(row.size());
                row.push_back(std::move(w));
                if (jw.contains("label")) {
                    int lb = jw["label"].get<int>();
                    if (lb != 0 && lb != 1) throw InputError("ndtab: label must be 0 or 1");
                    labels.push_back(lb);
                    any_label = true;
                } else {
                    labels.push_back(-1);
                }
                if (jw.contains("tag")) {
                    tags.push_back(jw["tag"].get<std::string>());
                    any_tag = true;
                } else {
                    tags.push_back("");
                }
            }
            t.words.rows.push_back(std::move(row));
            t.labels.push_back(std::move(labels));
            t.tags.push_back(std::move(tags));
        }
        if (t.words.rows.empty()) throw InputError("ndtab: table without rows on line " + std::to_string(lineno));
        if (any_label) {
            for (const auto& lr : t.labels) {
                for (int lb : lr)
                    if (lb < 0) throw InputError("ndtab: partially labeled table on line " + std::to_string(lineno));
                if (lr.back() != 1)
                    throw InputError("ndtab: final token of a labeled row must have label 1 (line " +
                                     std::to_string(lineno) + ")");
            }
        } else {
            t.labels.clear();
        }
        if (!any_tag) t.tags.clear();
        corpus.push_back(std::move(t));
    }
    return corpus;
}

std::vector<CorpusTable> read_ndtab_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open " + path);
    return read_ndtab(f);
}

void write_ndtab_file(const std::string& path, const std::vector<CorpusTable>& corpus) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot write " + path);
    write_ndtab(f, corpus);
}

} // namespace tabx
