#include "tabx/model.hpp"

#include <algorithm>
#include <cmath>

#include "tabx/rng.hpp"

namespace tabx::nn {

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::UNSUP: return "unsup";
        case Variant::FF_SPATIAL: return "ff_spatial";
        case Variant::FF_TOKEN: return "ff_token";
        case Variant::FF_BOTH: return "ff_both";
        case Variant::LSTM_ROW: return "lstm_row";
        case Variant::LSTM_LOCAL: return "lstm_local";
        case Variant::LSTM_SWAP: return "lstm_swap";
        case Variant::LSTM_GLOBAL: return "lstm_global";
        case Variant::TR_ROW: return "tr_row";
        case Variant::TR_GLOBAL: return "tr_global";
        case Variant::TR_REC: return "tr_rec";
    }
    throw std::logic_error("variant_name: bad enum value");
}

Variant variant_from_name(const std::string& name) {
    static const std::pair<const char*, Variant> table[] = {
        {"unsup", Variant::UNSUP},           {"ff_spatial", Variant::FF_SPATIAL},
        {"ff_token", Variant::FF_TOKEN},     {"ff_both", Variant::FF_BOTH},
        {"lstm_row", Variant::LSTM_ROW},     {"lstm_local", Variant::LSTM_LOCAL},
        {"lstm_swap", Variant::LSTM_SWAP},   {"lstm_global", Variant::LSTM_GLOBAL},
        {"tr_row", Variant::TR_ROW},         {"tr_global", Variant::TR_GLOBAL},
        {"tr_rec", Variant::TR_REC},
    };
    for (const auto& [n, v] : table)
        if (name == n) return v;
    throw InputError("unknown model variant: " + name);
}

bool variant_uses_tokens(Variant v) {
    return v != Variant::UNSUP && v != Variant::FF_SPATIAL;
}

bool variant_uses_spatial(Variant v) {
    return v != Variant::UNSUP && v != Variant::FF_TOKEN;
}

namespace {

bool is_lstm(Variant v) {
    return v == Variant::LSTM_ROW || v == Variant::LSTM_LOCAL || v == Variant::LSTM_SWAP ||
           v == Variant::LSTM_GLOBAL;
}

bool is_encoder_tr(Variant v) { return v == Variant::TR_ROW || v == Variant::TR_GLOBAL; }

long long reference_count(Variant v) {
    switch (v) {
        case Variant::UNSUP: return 0;
        case Variant::FF_SPATIAL: return 2769;
        case Variant::FF_TOKEN: return 16801;
        case Variant::FF_BOTH: return 17393;
        case Variant::LSTM_ROW:
        case Variant::LSTM_LOCAL:
        case Variant::LSTM_SWAP:
        case Variant::LSTM_GLOBAL: return 27025;
        case Variant::TR_ROW:
        case Variant::TR_GLOBAL: return 27153;
        case Variant::TR_REC: return 35761;
    }
    throw std::logic_error("reference_count: bad enum value");
}

bool default_dims(const ModelConfig& c) {
    return c.vocab_size == 882 && c.emb_dim == 16 && c.spatial_proj == 16 && c.hidden == 32 &&
           c.ff_hidden == 32 && c.d_model == 32 && c.d_ff == 32 && c.layers == 2;
}

struct Builder {
    SegModel m;
    Rng rng;

    Builder(const ModelConfig& cfg, uint64_t seed) : rng(seed) { m.cfg = cfg; }

    void tensor(const std::string& name, int rows, int cols, int fan_in) {
        Param p;
        p.name = name;
        p.w = Mat(rows, cols);
        double b = 1.0 / std::sqrt(double(fan_in));
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) p.w(i, j) = rng.next_range(-b, b);
        m.params.push_back(std::move(p));
    }

    void fixed(const std::string& name, int rows, double value) {
        Param p;
        p.name = name;
        p.w = Mat::Constant(rows, 1, value);
        m.params.push_back(std::move(p));
    }

    void linear(const std::string& prefix, int out, int in) {
        tensor(prefix + "_w", out, in, in);
        tensor(prefix + "_b", out, 1, in);
    }

    void norm(const std::string& prefix, int dim) {
        fixed(prefix + "_g", dim, 1.0);
        fixed(prefix + "_b", dim, 0.0);
    }

    void attention(const std::string& prefix, int d) {
        linear(prefix + "_q", d, d);
        linear(prefix + "_k", d, d);
        linear(prefix + "_v", d, d);
        linear(prefix + "_o", d, d);
    }
};

Mat positional_encoding(int d, int n) {
    Mat pe(d, n);
    for (int pos = 0; pos < n; ++pos) {
        for (int i = 0; i < d; ++i) {
            double freq = std::exp(-std::log(10000.0) * double(2 * (i / 2)) / double(d));
            double angle = double(pos) * freq;
            pe(i, pos) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
    }
    return pe;
}

} // namespace

SegModel SegModel::build(const ModelConfig& cfg, uint64_t seed) {
    if (cfg.vocab_size < 1 || cfg.emb_dim < 1 || cfg.spatial_proj < 1 || cfg.hidden < 1 ||
        cfg.ff_hidden < 1 || cfg.d_model < 1 || cfg.d_ff < 1 || cfg.layers < 1 || cfg.heads < 1)
        throw InputError("model config: dimensions must be positive");
    if (cfg.d_model % cfg.heads != 0) throw InputError("model config: d_model must be divisible by heads");
    if (is_lstm(cfg.variant) && cfg.hidden % 2 != 0)
        throw InputError("model config: bidirectional hidden size must be even");

    Builder b(cfg, seed);
    const Variant v = cfg.variant;

    if (variant_uses_tokens(v)) b.tensor("emb", cfg.emb_dim, cfg.vocab_size, cfg.emb_dim);
    if (variant_uses_spatial(v)) b.linear("spatial", cfg.spatial_proj, 4);

    if (v == Variant::FF_SPATIAL || v == Variant::FF_TOKEN || v == Variant::FF_BOTH) {
        int in = (v == Variant::FF_BOTH) ? cfg.emb_dim + cfg.spatial_proj
                                         : (v == Variant::FF_TOKEN ? cfg.emb_dim : cfg.spatial_proj);
        b.linear("ff1", cfg.ff_hidden, in);
        b.linear("ff2", cfg.ff_hidden, cfg.ff_hidden);
        b.linear("ff3", cfg.ff_hidden, cfg.ff_hidden);
        b.linear("head", 1, cfg.ff_hidden);
    } else if (is_lstm(v)) {
        int H = cfg.hidden / 2;
        int in = cfg.emb_dim + cfg.spatial_proj;
        for (int l = 0; l < cfg.layers; ++l) {
            int lin = (l == 0) ? in : cfg.hidden;
            for (const char* dir : {"f", "r"}) {
                std::string p = "lstm" + std::to_string(l) + "_" + dir;
                b.tensor(p + "_wih", 4 * H, lin, lin);
                b.tensor(p + "_whh", 4 * H, H, H);
                b.tensor(p + "_bih", 4 * H, 1, lin);
                b.tensor(p + "_bhh", 4 * H, 1, H);
            }
        }
        b.linear("head", 1, cfg.hidden);
    } else if (is_encoder_tr(v)) {
        for (int l = 0; l < cfg.layers; ++l) {
            std::string p = "enc" + std::to_string(l);
            b.attention(p, cfg.d_model);
            b.linear(p + "_ff1", cfg.d_ff, cfg.d_model);
            b.linear(p + "_ff2", cfg.d_model, cfg.d_ff);
            b.norm(p + "_ln1", cfg.d_model);
            b.norm(p + "_ln2", cfg.d_model);
        }
        b.linear("head", 1, cfg.d_model);
    } else if (v == Variant::TR_REC) {
        for (int l = 0; l < cfg.layers; ++l) {
            std::string p = "dec" + std::to_string(l);
            b.attention(p + "_self", cfg.d_model);
            b.attention(p + "_cross", cfg.d_model);
            b.linear(p + "_ff1", cfg.d_ff, cfg.d_model);
            b.linear(p + "_ff2", cfg.d_model, cfg.d_ff);
            b.norm(p + "_ln1", cfg.d_model);
            b.norm(p + "_ln2", cfg.d_model);
            b.norm(p + "_ln3", cfg.d_model);
        }
        b.tensor("mem_init", cfg.d_model, 1, cfg.d_model);
        b.linear("head", 1, cfg.d_model);
    } // UNSUP: no parameters

    if (default_dims(cfg) && b.m.param_count() != reference_count(v))
        throw std::logic_error("model build does not reproduce the reference parameter count for " +
                               std::string(variant_name(v)));
    return std::move(b.m);
}

long long SegModel::param_count() const {
    long long n = 0;
    for (const auto& p : params) n += (long long)p.w.rows() * p.w.cols();
    return n;
}

int SegModel::param_index(const std::string& name) const {
    for (size_t i = 0; i < params.size(); ++i)
        if (params[i].name == name) return int(i);
    return -1;
}

namespace {

// forward helpers ------------------------------------------------------------

struct Ctx {
    Tape& T;
    const SegModel& m;
    std::vector<Var> pv;

    Var p(const std::string& name) const {
        int i = m.param_index(name);
        if (i < 0) throw std::logic_error("forward: missing parameter " + name);
        return pv[size_t(i)];
    }
};

Mat spatial_matrix(const std::vector<const TokenFeat*>& toks) {
    Mat s(4, int(toks.size()));
    for (int j = 0; j < int(toks.size()); ++j)
        for (int k = 0; k < 4; ++k) s(k, j) = toks[size_t(j)]->f[size_t(k)];
    return s;
}

// (emb_dim [+ spatial_proj], T) input for a span of tokens
Var build_input(Ctx& c, const std::vector<const TokenFeat*>& toks) {
    const Variant v = c.m.cfg.variant;
    std::vector<Var> parts;
    if (variant_uses_tokens(v)) {
        Var emb = c.p("emb");
        std::vector<Var> cols;
        cols.reserve(toks.size());
        for (const TokenFeat* tf : toks) {
            if (tf->tag_id < 0 || tf->tag_id >= c.m.cfg.vocab_size)
                throw InputError("forward: tag id outside the model's vocabulary");
            cols.push_back(slice_cols(emb, tf->tag_id, 1));
        }
        parts.push_back(concat_cols(cols));
    }
    if (variant_uses_spatial(v)) {
        Var s = c.T.constant(spatial_matrix(toks));
        parts.push_back(add_colvec(matmul(c.p("spatial_w"), s), c.p("spatial_b")));
    }
    return parts.size() == 1 ? parts[0] : concat_rows(parts);
}

Var dense_head(Ctx& c, Var x) { return add_colvec(matmul(c.p("head_w"), x), c.p("head_b")); }

Var ff_stack(Ctx& c, Var x) {
    Var h1 = relu(add_colvec(matmul(c.p("ff1_w"), x), c.p("ff1_b")));
    Var h2 = relu(add_colvec(matmul(c.p("ff2_w"), h1), c.p("ff2_b")));
    Var h3 = relu(add_colvec(matmul(c.p("ff3_w"), h2), c.p("ff3_b")));
    return dense_head(c, h3);
}

struct LstmState {
    Var h, c;
};

struct LstmDirParams {
    Var wih, whh, bih, bhh;
};

// one direction over X (in,T); writes outputs in original column order
Var lstm_dir(Ctx& c, Var X, const LstmDirParams& w, LstmState init, bool reverse, LstmState* fin) {
    const int n = int(X.val().cols());
    const int H = int(w.whh.val().cols());
    Var h = init.h, cc = init.c;
    std::vector<Var> outs(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
        int pos = reverse ? n - 1 - s : s;
        Var x = slice_cols(X, pos, 1);
        Var z = add(add(matmul(w.wih, x), w.bih), add(matmul(w.whh, h), w.bhh));
        Var ig = sigmoid(slice_rows(z, 0, H));
        Var fg = sigmoid(slice_rows(z, H, H));
        Var gg = tanh_v(slice_rows(z, 2 * H, H));
        Var og = sigmoid(slice_rows(z, 3 * H, H));
        cc = add(mul(fg, cc), mul(ig, gg));
        h = mul(og, tanh_v(cc));
        outs[size_t(pos)] = h;
    }
    if (fin) {
        fin->h = h;
        fin->c = cc;
    }
    return concat_cols(outs);
}

struct LstmRowStates {
    // [layer][dir]: dir 0 = forward, 1 = reverse
    std::vector<std::array<LstmState, 2>> s;
};

LstmDirParams lstm_params(Ctx& c, int layer, int dir) {
    std::string p = "lstm" + std::to_string(layer) + "_" + (dir == 0 ? "f" : "r");
    return LstmDirParams{c.p(p + "_wih"), c.p(p + "_whh"), c.p(p + "_bih"), c.p(p + "_bhh")};
}

// full stack over one sequence; init states per layer/dir; returns logits and final states
Var lstm_sequence(Ctx& c, Var X, const LstmRowStates& init, LstmRowStates* fin) {
    const int layers = c.m.cfg.layers;
    Var x = X;
    if (fin) fin->s.assign(size_t(layers), {});
    for (int l = 0; l < layers; ++l) {
        LstmState ff{}, fr{};
        Var of = lstm_dir(c, x, lstm_params(c, l, 0), init.s[size_t(l)][0], false, &ff);
        Var orv = lstm_dir(c, x, lstm_params(c, l, 1), init.s[size_t(l)][1], true, &fr);
        if (fin) {
            fin->s[size_t(l)][0] = ff;
            fin->s[size_t(l)][1] = fr;
        }
        x = concat_rows({of, orv});
    }
    return dense_head(c, x);
}

Var mha(Ctx& c, const std::string& prefix, Var q_src, Var kv_src) {
    const int d = c.m.cfg.d_model, heads = c.m.cfg.heads, dh = d / heads;
    Var Q = add_colvec(matmul(c.p(prefix + "_q_w"), q_src), c.p(prefix + "_q_b"));
    Var K = add_colvec(matmul(c.p(prefix + "_k_w"), kv_src), c.p(prefix + "_k_b"));
    Var V = add_colvec(matmul(c.p(prefix + "_v_w"), kv_src), c.p(prefix + "_v_b"));
    std::vector<Var> outs;
    outs.reserve(size_t(heads));
    double sc = 1.0 / std::sqrt(double(dh));
    for (int h = 0; h < heads; ++h) {
        Var Qh = slice_rows(Q, h * dh, dh);
        Var Kh = slice_rows(K, h * dh, dh);
        Var Vh = slice_rows(V, h * dh, dh);
        Var S = scale(matmul(transpose(Qh), Kh), sc); // (Tq, Tk)
        Var A = softmax_rows(S);
        outs.push_back(matmul(Vh, transpose(A)));
    }
    Var O = concat_rows(outs);
    return add_colvec(matmul(c.p(prefix + "_o_w"), O), c.p(prefix + "_o_b"));
}

Var tr_ffn(Ctx& c, const std::string& prefix, Var x) {
    Var h = relu(add_colvec(matmul(c.p(prefix + "_ff1_w"), x), c.p(prefix + "_ff1_b")));
    return add_colvec(matmul(c.p(prefix + "_ff2_w"), h), c.p(prefix + "_ff2_b"));
}

Var encoder_block(Ctx& c, int l, Var x) {
    std::string p = "enc" + std::to_string(l);
    x = layernorm_cols(add(x, mha(c, p, x, x)), c.p(p + "_ln1_g"), c.p(p + "_ln1_b"));
    x = layernorm_cols(add(x, tr_ffn(c, p, x)), c.p(p + "_ln2_g"), c.p(p + "_ln2_b"));
    return x;
}

Var decoder_block(Ctx& c, int l, Var x, Var mem) {
    std::string p = "dec" + std::to_string(l);
    x = layernorm_cols(add(x, mha(c, p + "_self", x, x)), c.p(p + "_ln1_g"), c.p(p + "_ln1_b"));
    x = layernorm_cols(add(x, mha(c, p + "_cross", x, mem)), c.p(p + "_ln2_g"), c.p(p + "_ln2_b"));
    x = layernorm_cols(add(x, tr_ffn(c, p, x)), c.p(p + "_ln3_g"), c.p(p + "_ln3_b"));
    return x;
}

std::vector<const TokenFeat*> row_tokens(const FeaturizedTable& t, size_t r) {
    std::vector<const TokenFeat*> toks;
    toks.reserve(t.rows[r].size());
    for (const auto& tf : t.rows[r]) toks.push_back(&tf);
    return toks;
}

std::vector<const TokenFeat*> all_tokens(const FeaturizedTable& t) {
    std::vector<const TokenFeat*> toks;
    for (const auto& row : t.rows)
        for (const auto& tf : row) toks.push_back(&tf);
    return toks;
}

} // namespace

Var SegModel::forward_logits(Tape& T, const FeaturizedTable& t, std::vector<Var>* param_vars) const {
    if (cfg.variant == Variant::UNSUP)
        throw InputError("unsup baseline has no forward graph");
    if (t.rows.empty()) throw InputError("forward: empty table");
    for (const auto& r : t.rows)
        if (r.empty()) throw InputError("forward: empty row");

    Ctx c{T, *this, {}};
    c.pv.reserve(params.size());
    for (const auto& p : params) c.pv.push_back(T.leaf(p.w));
    if (param_vars) *param_vars = c.pv;

    const Variant v = cfg.variant;
    Var logits;

    if (v == Variant::FF_SPATIAL || v == Variant::FF_TOKEN || v == Variant::FF_BOTH) {
        logits = ff_stack(c, build_input(c, all_tokens(t)));
    } else if (v == Variant::LSTM_GLOBAL) {
        Var X = build_input(c, all_tokens(t));
        const int H = cfg.hidden / 2;
        Var zero = T.constant(Mat::Zero(H, 1));
        LstmRowStates init;
        init.s.assign(size_t(cfg.layers), {LstmState{zero, zero}, LstmState{zero, zero}});
        logits = lstm_sequence(c, X, init, nullptr);
    } else if (is_lstm(v)) {
        const int H = cfg.hidden / 2;
        Var zero = T.constant(Mat::Zero(H, 1));
        LstmRowStates zeros;
        zeros.s.assign(size_t(cfg.layers), {LstmState{zero, zero}, LstmState{zero, zero}});
        LstmRowStates prev = zeros;
        bool have_prev = false;
        std::vector<Var> row_logits;
        for (size_t r = 0; r < t.rows.size(); ++r) {
            LstmRowStates init = zeros;
            if (have_prev && v != Variant::LSTM_ROW) {
                for (int l = 0; l < cfg.layers; ++l) {
                    for (int d = 0; d < 2; ++d) {
                        // LOCAL keeps directions; SWAP crosses them
                        const LstmState& src =
                            (v == Variant::LSTM_SWAP) ? prev.s[size_t(l)][1 - d] : prev.s[size_t(l)][d];
                        init.s[size_t(l)][d].h = src.h;
                        init.s[size_t(l)][d].c = cfg.propagate_cell ? src.c : zero;
                    }
                }
            }
            LstmRowStates fin;
            row_logits.push_back(lstm_sequence(c, build_input(c, row_tokens(t, r)), init, &fin));
            prev = fin;
            have_prev = true;
        }
        logits = concat_cols(row_logits);
    } else if (v == Variant::TR_GLOBAL) {
        auto toks = all_tokens(t);
        Var x = add(build_input(c, toks), T.constant(positional_encoding(cfg.d_model, int(toks.size()))));
        for (int l = 0; l < cfg.layers; ++l) x = encoder_block(c, l, x);
        logits = dense_head(c, x);
    } else if (v == Variant::TR_ROW) {
        std::vector<Var> row_logits;
        for (size_t r = 0; r < t.rows.size(); ++r) {
            auto toks = row_tokens(t, r);
            Var x = add(build_input(c, toks), T.constant(positional_encoding(cfg.d_model, int(toks.size()))));
            for (int l = 0; l < cfg.layers; ++l) x = encoder_block(c, l, x);
            row_logits.push_back(dense_head(c, x));
        }
        logits = concat_cols(row_logits);
    } else if (v == Variant::TR_REC) {
        // previous row's final-block output is the shared memory for both blocks;
        // row 0 attends to the learned init vector broadcast to its own length
        Var mem;
        std::vector<Var> row_logits;
        for (size_t r = 0; r < t.rows.size(); ++r) {
            auto toks = row_tokens(t, r);
            Var x = add(build_input(c, toks), T.constant(positional_encoding(cfg.d_model, int(toks.size()))));
            if (r == 0)
                mem = matmul(c.p("mem_init"), T.constant(Mat::Ones(1, int(toks.size()))));
            for (int l = 0; l < cfg.layers; ++l) x = decoder_block(c, l, x, mem);
            mem = x;
            row_logits.push_back(dense_head(c, x));
        }
        logits = concat_cols(row_logits);
    } else {
        throw std::logic_error("forward: unhandled variant");
    }
    return logits;
}

std::vector<double> SegModel::forward_probs(const FeaturizedTable& t) const {
    if (cfg.variant == Variant::UNSUP) return std::vector<double>(t.token_count(), 1.0);
    Tape T;
    T.recording = false;
    Var logits = forward_logits(T, t, nullptr);
    const Mat& z = logits.val();
    std::vector<double> probs(size_t(z.cols()));
    for (int j = 0; j < z.cols(); ++j) {
        if (!std::isfinite(z(0, j))) throw std::runtime_error("nn: non-finite activation");
        probs[size_t(j)] = 1.0 / (1.0 + std::exp(-z(0, j)));
    }
    return probs;
}

} // namespace tabx::nn
