#include "tabx/align.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <json.hpp>

#include "tabx/error.hpp"

namespace tabx {

DisjointSet::DisjointSet(std::vector<Interval> intervals)
    : parent_(intervals.size()), rank_(intervals.size(), 0), iv_(std::move(intervals)) {
    for (size_t i = 0; i < parent_.size(); ++i) parent_[i] = int(i);
}

size_t DisjointSet::check(int x) const {
    if (x < 0 || size_t(x) >= parent_.size()) throw InputError("disjoint set: id out of range");
    return size_t(x);
}

int DisjointSet::find(int x) {
    size_t i = check(x);
    while (parent_[i] != int(i)) {
        parent_[i] = parent_[size_t(parent_[i])]; // halve the path as we walk it
        i = size_t(parent_[i]);
    }
    return int(i);
}

int DisjointSet::unite(int a, int b) {
    int ra = find(a), rb = find(b);
    if (ra == rb) return ra;
    // union by rank; on equal rank the lower id stays root
    if (rank_[size_t(ra)] < rank_[size_t(rb)] ||
        (rank_[size_t(ra)] == rank_[size_t(rb)] && ra > rb))
        std::swap(ra, rb);
    parent_[size_t(rb)] = ra;
    if (rank_[size_t(ra)] == rank_[size_t(rb)]) ++rank_[size_t(ra)];
    Interval& iv = iv_[size_t(ra)];
    const Interval& ov = iv_[size_t(rb)];
    iv.lo = std::min(iv.lo, ov.lo);
    iv.hi = std::max(iv.hi, ov.hi);
    return ra;
}

const Interval& DisjointSet::interval(int root) const { return iv_[check(root)]; }

std::vector<int> DisjointSet::roots() {
    std::vector<int> out;
    for (size_t i = 0; i < parent_.size(); ++i)
        if (find(int(i)) == int(i)) out.push_back(int(i));
    return out;
}

std::vector<std::vector<Cell>> merge_segments(const TableWords& words, const std::vector<double>& probs,
                                              double cutoff) {
    size_t total = 0;
    for (const auto& row : words.rows) total += row.size();
    if (probs.size() != total) throw InputError("merge_segments: probability/token length mismatch");

    std::vector<std::vector<Cell>> out(words.rows.size());
    size_t k = 0;
    int next_id = 0;
    for (size_t r = 0; r < words.rows.size(); ++r) {
        const auto& row = words.rows[r];
        std::string text;
        BBox box;
        bool open = false;
        for (size_t j = 0; j < row.size(); ++j, ++k) {
            const WordRecord& w = row[j];
            if (!open) {
                text = w.text;
                box = w.box;
                open = true;
            } else {
                text += ' ';
                text += w.text;
                box = box_union(box, w.box);
            }
            bool closes = probs[k] > cutoff || j + 1 == row.size();
            if (closes) {
                out[r].push_back(Cell{next_id++, std::move(text), box, int(r)});
                text.clear();
                open = false;
            }
        }
    }
    return out;
}

std::vector<Cell> flatten_cells(const std::vector<std::vector<Cell>>& rows) {
    std::vector<Cell> out;
    for (const auto& r : rows) out.insert(out.end(), r.begin(), r.end());
    return out;
}

DisjointSet unify_columns(const std::vector<Cell>& cells, double iou_trigger) {
    std::vector<Interval> spans(cells.size());
    for (size_t i = 0; i < cells.size(); ++i) {
        if (cells[i].id != int(i)) throw InputError("unify_columns: cell ids must be 0..n-1 in order");
        spans[i] = Interval{cells[i].box.left, cells[i].box.right()};
    }
    DisjointSet dsu(spans);

    std::vector<int> order(cells.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = int(i);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return cells[size_t(a)].row_index < cells[size_t(b)].row_index; });

    std::set<int> live; // current roots
    for (int ci : order) {
        const Interval span = spans[size_t(ci)];
        int best = -1;
        double best_iou = 0.0;
        Interval best_iv{};
        for (int root : live) {
            const Interval& iv = dsu.interval(root);
            double iou = interval_iou(span, iv);
            if (iou < iou_trigger) continue;
            if (best < 0 || iou > best_iou ||
                (iou == best_iou && (iv.lo < best_iv.lo || (iv.lo == best_iv.lo && root < best)))) {
                best = root;
                best_iou = iou;
                best_iv = iv;
            }
        }
        if (best >= 0) {
            int survivor = dsu.unite(ci, best);
            live.erase(best);
            live.insert(survivor);
        } else {
            live.insert(ci);
        }
    }
    return dsu;
}

TableGrid assemble_grid(const std::vector<Cell>& cells, DisjointSet& dsu) {
    TableGrid g;
    if (cells.empty()) return g;

    int max_row = 0;
    for (const auto& c : cells) max_row = std::max(max_row, c.row_index);
    g.n_rows = size_t(max_row) + 1;

    // column order: mean center-x of members, id as tiebreak
    std::map<int, std::pair<double, int>> acc; // root -> (sum of centers, count)
    for (const auto& c : cells) {
        auto& a = acc[dsu.find(c.id)];
        a.first += c.box.left + c.box.width / 2.0;
        a.second += 1;
    }
    std::vector<std::pair<double, int>> cols; // (mean center, root)
    for (const auto& [root, a] : acc) cols.push_back({a.first / a.second, root});
    std::sort(cols.begin(), cols.end());
    std::map<int, size_t> col_of;
    for (size_t i = 0; i < cols.size(); ++i) col_of[cols[i].second] = i;
    g.n_cols = cols.size();

    g.cells.assign(g.n_rows, std::vector<GridCell>(g.n_cols));
    for (const auto& c : cells) {
        GridCell& slot = g.cells[size_t(c.row_index)][col_of[dsu.find(c.id)]];
        if (!slot.vacant()) {
            slot.text += ' ';
            ++g.collisions;
        }
        slot.text += c.text;
        slot.boxes.push_back(c.box);
    }
    return g;
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        out += c;
        if (c == '"') out += '"';
    }
    out += '"';
    return out;
}

std::string latex_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '\\': out += "\\textbackslash{}"; break;
            case '~': out += "\\textasciitilde{}"; break;
            case '^': out += "\\textasciicircum{}"; break;
            case '&': case '%': case '$': case '#': case '_': case '{': case '}':
                out += '\\';
                out += c;
                break;
            default: out += c;
        }
    }
    return out;
}

} // namespace

std::string grid_to_csv(const TableGrid& g) {
    std::string out;
    for (const auto& row : g.cells) {
        for (size_t j = 0; j < row.size(); ++j) {
            if (j) out += ',';
            out += csv_field(row[j].text);
        }
        out += '\n';
    }
    return out;
}

std::string grid_to_latex(const TableGrid& g) {
    std::string out = "\\begin{tabular}{" + std::string(g.n_cols, 'l') + "}\n";
    for (const auto& row : g.cells) {
        for (size_t j = 0; j < row.size(); ++j) {
            if (j) out += " & ";
            out += latex_escape(row[j].text);
        }
        out += " \\\\\n";
    }
    out += "\\end{tabular}\n";
    return out;
}

std::string grid_to_json(const TableGrid& g) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : g.cells) {
        nlohmann::json jr = nlohmann::json::array();
        for (const auto& cell : row) {
            nlohmann::json boxes = nlohmann::json::array();
            for (const auto& b : cell.boxes) boxes.push_back({b.left, b.top, b.width, b.height});
            jr.push_back({{"text", cell.text}, {"boxes", boxes}});
        }
        rows.push_back(jr);
    }
    nlohmann::json j{{"n_rows", g.n_rows}, {"n_cols", g.n_cols}, {"collisions", g.collisions}, {"rows", rows}};
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) + "\n";
}

TableGrid grid_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw InputError("grid: invalid JSON");
    try {
        TableGrid g;
        g.n_rows = j.at("n_rows").get<size_t>();
        g.n_cols = j.at("n_cols").get<size_t>();
        g.collisions = j.at("collisions").get<long long>();
        const auto& rows = j.at("rows");
        if (!rows.is_array() || rows.size() != g.n_rows) throw InputError("grid: row count mismatch");
        for (const auto& jr : rows) {
            if (!jr.is_array() || jr.size() != g.n_cols) throw InputError("grid: column count mismatch");
            std::vector<GridCell> row;
            for (const auto& jc : jr) {
                GridCell cell;
                cell.text = jc.at("text").get<std::string>();
                for (const auto& jb : jc.at("boxes")) {
                    if (!jb.is_array() || jb.size() != 4) throw InputError("grid: box must have 4 entries");
                    cell.boxes.push_back(BBox{jb[0].get<int>(), jb[1].get<int>(), jb[2].get<int>(),
                                              jb[3].get<int>()});
                }
                row.push_back(std::move(cell));
            }
            g.cells.push_back(std::move(row));
        }
        return g;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("grid: ") + e.what());
    }
}

double smape(long long pred_count, long long true_count) {
    if (pred_count < 0 || true_count < 0) throw InputError("smape: counts must be nonnegative");
    if (pred_count == 0 && true_count == 0) return 0.0;
    return 200.0 * double(std::llabs(pred_count - true_count)) / double(pred_count + true_count);
}

AlignEval eval_alignment(const std::vector<std::pair<long long, long long>>& counts) {
    if (counts.empty()) throw InputError("eval_alignment: no tables");
    std::vector<double> s;
    s.reserve(counts.size());
    size_t perfect = 0;
    for (const auto& [p, t] : counts) {
        double v = smape(p, t);
        if (v == 0.0) ++perfect;
        s.push_back(v);
    }
    std::sort(s.begin(), s.end());
    const size_t n = s.size();
    auto rank = [&](size_t pct) { return s[(pct * n + 99) / 100 - 1]; }; // nearest-rank
    AlignEval e;
    e.q10 = rank(10);
    e.q25 = rank(25);
    e.q50 = rank(50);
    e.q75 = rank(75);
    e.q90 = rank(90);
    e.max = s.back();
    e.perfect_pct = 100.0 * double(perfect) / double(n);
    e.n_tables = n;
    return e;
}

} // namespace tabx
