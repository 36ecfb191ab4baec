#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "tabx/autodiff.hpp"
#include "tabx/ingest.hpp"

namespace tabx::nn {

enum class Variant {
    UNSUP,
    FF_SPATIAL,
    FF_TOKEN,
    FF_BOTH,
    LSTM_ROW,
    LSTM_LOCAL,
    LSTM_SWAP,
    LSTM_GLOBAL,
    TR_ROW,
    TR_GLOBAL,
    TR_REC,
};

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name); // throws InputError on unknown names
bool variant_uses_tokens(Variant v);
bool variant_uses_spatial(Variant v);

struct ModelConfig {
    Variant variant = Variant::LSTM_LOCAL;
    int vocab_size = 882; // 881 identities + UNK
    int emb_dim = 16;
    int spatial_proj = 16;
    int hidden = 32; // bidirectional total; LSTMs run hidden/2 per direction
    int ff_hidden = 32;
    int d_model = 32;
    int d_ff = 32;
    int layers = 2;
    int heads = 4;
    bool propagate_cell = true; // LOCAL/SWAP: carry cell state along with hidden state

    bool operator==(const ModelConfig&) const = default;
};

struct Param {
    std::string name;
    Mat w;
    Mat m, v; // Adam moments, lazily sized by the trainer
};

class SegModel {
public:
    ModelConfig cfg;
    std::vector<Param> params;
    Vocab vocab;     // optional; embedded on save when non-empty
    bool has_vocab = false;

    // Deterministic init: uniform +-1/sqrt(fan_in) per tensor, norm scales at 1/0.
    // Produces exactly the reference parameter counts for default-dimension configs.
    static SegModel build(const ModelConfig& cfg, uint64_t seed);

    long long param_count() const;
    int param_index(const std::string& name) const;

    // Per-token probabilities, rows flattened top-to-bottom, left-to-right.
    // UNSUP returns constant 1.0.
    std::vector<double> forward_probs(const FeaturizedTable& t) const;

    // Training graph: returns logits (1, token_count). param_vars, when given,
    // receives one leaf Var per params[i] (same order). Not valid for UNSUP.
    Var forward_logits(Tape& T, const FeaturizedTable& t, std::vector<Var>* param_vars) const;
};

} // namespace tabx::nn
