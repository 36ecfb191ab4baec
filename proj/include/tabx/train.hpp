#pragma once

#include <string>
#include <vector>

#include "tabx/model.hpp"

namespace tabx::nn {

struct Confusion {
    long long tp = 0, tn = 0, fp = 0, fn = 0;

    void add(bool pred, bool gold) {
        if (pred)
            (gold ? tp : fp)++;
        else
            (gold ? fn : tn)++;
    }
};

// (tp*tn - fp*fn) / sqrt((tp+fp)(tp+fn)(tn+fp)(tn+fn)), 0 when the denominator vanishes
double mcc_from_counts(const Confusion& c);
double mcc(const std::vector<int>& pred, const std::vector<int>& gold);

// pooled counts across tables; a token counts as positive when its prob > cutoff
Confusion confusion_over(const SegModel& m, const std::vector<FeaturizedTable>& tables, double cutoff);

struct TrainOpts {
    int updates = 640;
    double lr = 0.01;
    uint64_t seed = 1;
    int val_every = 10; // also evaluates at the final update
    double cutoff = 0.5;
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
};

struct HistoryRow {
    int update = 0;          // 1-based
    double train_loss = 0.0; // loss of this update's table, at the pre-step weights
    double val_mcc = 0.0;
    bool has_val = false;
};

struct TrainResult {
    SegModel model; // best-validation snapshot; final weights when val is empty
    std::vector<HistoryRow> history;
    double best_mcc = 0.0; // NaN when val is empty
    int best_update = 0;   // 0 when never evaluated
};

// one table per update, drawn from a single seeded shuffle repeated cyclically
TrainResult train_model(SegModel model, const std::vector<FeaturizedTable>& train,
                        const std::vector<FeaturizedTable>& val, const TrainOpts& opts);

std::string history_csv(const std::vector<HistoryRow>& rows);

} // namespace tabx::nn
