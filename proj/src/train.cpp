#include "tabx/train.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "tabx/rng.hpp"

namespace tabx::nn {

double mcc_from_counts(const Confusion& c) {
    // product first, sqrt once: a perfect classifier must come out exactly +-1
    long double denom = sqrtl((long double)(c.tp + c.fp) * (long double)(c.tp + c.fn) *
                              (long double)(c.tn + c.fp) * (long double)(c.tn + c.fn));
    if (denom == 0.0L) return 0.0;
    long double num = (long double)c.tp * c.tn - (long double)c.fp * c.fn;
    return double(num / denom);
}

double mcc(const std::vector<int>& pred, const std::vector<int>& gold) {
    if (pred.size() != gold.size()) throw InputError("mcc: prediction/label length mismatch");
    Confusion c;
    for (size_t i = 0; i < pred.size(); ++i) c.add(pred[i] != 0, gold[i] != 0);
    return mcc_from_counts(c);
}

Confusion confusion_over(const SegModel& m, const std::vector<FeaturizedTable>& tables, double cutoff) {
    Confusion c;
    for (const auto& t : tables) {
        if (!t.labeled()) throw InputError("evaluation requires fully labeled tables");
        std::vector<double> probs = m.forward_probs(t);
        size_t k = 0;
        for (const auto& row : t.rows)
            for (const auto& tf : row) c.add(probs[k++] > cutoff, tf.label != 0);
    }
    return c;
}

namespace {

std::vector<int> table_labels(const FeaturizedTable& t) {
    std::vector<int> y;
    y.reserve(t.token_count());
    for (const auto& row : t.rows)
        for (const auto& tf : row) y.push_back(tf.label);
    return y;
}

} // namespace

TrainResult train_model(SegModel model, const std::vector<FeaturizedTable>& train,
                        const std::vector<FeaturizedTable>& val, const TrainOpts& opts) {
    if (model.cfg.variant == Variant::UNSUP) throw InputError("unsup baseline is not trainable");
    if (train.empty()) throw InputError("training corpus is empty");
    if (opts.updates < 1) throw InputError("updates must be positive");
    if (opts.val_every < 1) throw InputError("val_every must be positive");
    for (const auto& t : train)
        if (!t.labeled()) throw InputError("training requires fully labeled tables");

    for (auto& p : model.params) {
        p.m = Mat::Zero(p.w.rows(), p.w.cols());
        p.v = Mat::Zero(p.w.rows(), p.w.cols());
    }

    // one shuffled pass, repeated cyclically
    std::vector<size_t> order(train.size());
    std::iota(order.begin(), order.end(), size_t(0));
    Rng rng(opts.seed);
    for (size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.next_below(i)]);

    TrainResult res;
    res.best_mcc = std::numeric_limits<double>::quiet_NaN();
    std::vector<Param> best_params = model.params;
    bool have_best = false;

    Tape T;
    for (int u = 1; u <= opts.updates; ++u) {
        const FeaturizedTable& t = train[order[size_t(u - 1) % order.size()]];
        T.reset();
        std::vector<Var> pv;
        Var logits = model.forward_logits(T, t, &pv);
        Var loss = bce_with_logits(logits, table_labels(t));
        T.backward(loss);

        double corr1 = 1.0 - std::pow(opts.beta1, u);
        double corr2 = 1.0 - std::pow(opts.beta2, u);
        for (size_t i = 0; i < model.params.size(); ++i) {
            Param& p = model.params[i];
            const Mat& g = pv[i].grad();
            p.m = opts.beta1 * p.m + (1.0 - opts.beta1) * g;
            p.v = opts.beta2 * p.v + (1.0 - opts.beta2) * g.cwiseProduct(g);
            Mat mhat = p.m / corr1;
            Mat vhat = p.v / corr2;
            p.w -= opts.lr * (mhat.array() / (vhat.array().sqrt() + opts.eps)).matrix();
        }

        HistoryRow row;
        row.update = u;
        row.train_loss = loss.val()(0, 0);
        if (!val.empty() && (u % opts.val_every == 0 || u == opts.updates)) {
            double m = mcc_from_counts(confusion_over(model, val, opts.cutoff));
            row.val_mcc = m;
            row.has_val = true;
            if (!have_best || m > res.best_mcc) {
                res.best_mcc = m;
                res.best_update = u;
                best_params = model.params;
                have_best = true;
            }
        }
        res.history.push_back(row);
    }

    if (have_best) model.params = std::move(best_params);
    res.model = std::move(model);
    return res;
}

std::string history_csv(const std::vector<HistoryRow>& rows) {
    std::string out = "update,train_loss,val_mcc\n";
    char buf[64];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,", r.update, r.train_loss);
        out += buf;
        if (r.has_val) {
            std::snprintf(buf, sizeof buf, "%.17g", r.val_mcc);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

} // namespace tabx::nn
