#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tabx/geometry.hpp"
#include "tabx/ingest.hpp"

namespace tabx {

struct Cell {
    int id = -1; // index into the flat cell list; doubles as the DSU element id
    std::string text;
    BBox box;
    int row_index = 0;
};

// Union-find with path compression and union by rank. Each root carries the
// bounding Interval of its members' horizontal extents.
class DisjointSet {
public:
    explicit DisjointSet(size_t n) : DisjointSet(std::vector<Interval>(n)) {}
    explicit DisjointSet(std::vector<Interval> intervals);

    int find(int x);
    int unite(int a, int b); // returns the surviving root; rank tie -> lower id
    const Interval& interval(int root) const;
    size_t size() const { return parent_.size(); }
    std::vector<int> roots(); // ascending id

private:
    size_t check(int x) const;

    std::vector<int> parent_;
    std::vector<int> rank_;
    std::vector<Interval> iv_;
};

// Cut token runs into cells: a token closes its cell when its prob > cutoff,
// and a row's last token always closes one. probs are row-major across rows.
std::vector<std::vector<Cell>> merge_segments(const TableWords& words, const std::vector<double>& probs,
                                              double cutoff = 0.5);

std::vector<Cell> flatten_cells(const std::vector<std::vector<Cell>>& rows);

// Rows top-to-bottom: each cell joins the best-IOU existing root at or above
// the trigger, else founds a new column. Ties: leftmost root, then lowest id.
DisjointSet unify_columns(const std::vector<Cell>& cells, double iou_trigger = 0.25);

struct GridCell {
    std::string text;
    std::vector<BBox> boxes;

    bool vacant() const { return text.empty() && boxes.empty(); }
    bool operator==(const GridCell&) const = default;
};

struct TableGrid {
    size_t n_rows = 0, n_cols = 0;
    std::vector<std::vector<GridCell>> cells; // [row][col]
    long long collisions = 0;

    bool operator==(const TableGrid&) const = default;
};

// Columns ordered by mean center-x of their member cells; same-slot collisions
// concatenate left-to-right and bump the counter.
TableGrid assemble_grid(const std::vector<Cell>& cells, DisjointSet& dsu);

std::string grid_to_csv(const TableGrid& g);   // RFC-4180 quoting, "\n" row ends
std::string grid_to_latex(const TableGrid& g); // tabular environment
std::string grid_to_json(const TableGrid& g);  // carries boxes + collision count
TableGrid grid_from_json(const std::string& text);

// 200|p-t|/(p+t), with 0/0 -> 0
double smape(long long pred_count, long long true_count);

struct AlignEval {
    double q10 = 0, q25 = 0, q50 = 0, q75 = 0, q90 = 0;
    double max = 0;
    double perfect_pct = 0;
    size_t n_tables = 0;
    double mcc = 0.0; // token-level; filled by callers that have labels
    bool has_mcc = false;
};

// Per-table cell-count SMAPE distribution: nearest-rank quantiles, max, % exact.
AlignEval eval_alignment(const std::vector<std::pair<long long, long long>>& counts);

} // namespace tabx
