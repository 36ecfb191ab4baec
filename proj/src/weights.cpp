#include "tabx/weights.hpp"

#include <bit>
#include <cstdint>
#include <fstream>

#include "tabx/ingest.hpp"

namespace tabx::nn {

namespace {

constexpr char kMagic[4] = {'T', 'B', 'X', 'W'};
constexpr uint32_t kVersion = 1;
constexpr uint32_t kFlagVocab = 1u;

struct Writer {
    std::string s;

    void u32(uint32_t v) {
        for (int i = 0; i < 4; ++i) s.push_back(char((v >> (8 * i)) & 0xff));
    }
    void u64(uint64_t v) {
        for (int i = 0; i < 8; ++i) s.push_back(char((v >> (8 * i)) & 0xff));
    }
    void f64(double d) { u64(std::bit_cast<uint64_t>(d)); }
    void str(const std::string& v) {
        u32(uint32_t(v.size()));
        s += v;
    }
};

struct Reader {
    const std::string& s;
    size_t pos = 0;

    void need(size_t n) const {
        if (s.size() - pos < n) throw InputError("weights: truncated file");
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= uint32_t(uint8_t(s[pos + size_t(i)])) << (8 * i);
        pos += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= uint64_t(uint8_t(s[pos + size_t(i)])) << (8 * i);
        pos += 8;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        uint32_t n = u32();
        need(n);
        std::string v = s.substr(pos, n);
        pos += n;
        return v;
    }
};

} // namespace

std::string save_weights(const SegModel& m) {
    Writer w;
    w.s.append(kMagic, 4);
    w.u32(kVersion);
    w.u32(m.has_vocab ? kFlagVocab : 0);

    const ModelConfig& c = m.cfg;
    w.u32(uint32_t(c.variant));
    w.u32(uint32_t(c.vocab_size));
    w.u32(uint32_t(c.emb_dim));
    w.u32(uint32_t(c.spatial_proj));
    w.u32(uint32_t(c.hidden));
    w.u32(uint32_t(c.ff_hidden));
    w.u32(uint32_t(c.d_model));
    w.u32(uint32_t(c.d_ff));
    w.u32(uint32_t(c.layers));
    w.u32(uint32_t(c.heads));
    w.u32(c.propagate_cell ? 1 : 0);

    w.u32(uint32_t(m.params.size()));
    for (const auto& p : m.params) {
        w.str(p.name);
        w.u32(uint32_t(p.w.rows()));
        w.u32(uint32_t(p.w.cols()));
        for (int i = 0; i < p.w.rows(); ++i)
            for (int j = 0; j < p.w.cols(); ++j) w.f64(p.w(i, j));
    }
    if (m.has_vocab) w.str(vocab_to_string(m.vocab));
    return std::move(w.s);
}

SegModel load_weights(const std::string& blob) {
    Reader r{blob};
    r.need(4);
    if (blob.compare(0, 4, kMagic, 4) != 0) throw InputError("weights: bad magic");
    r.pos = 4;
    uint32_t version = r.u32();
    if (version != kVersion)
        throw InputError("weights: unsupported format version " + std::to_string(version));
    uint32_t flags = r.u32();

    ModelConfig c;
    uint32_t variant = r.u32();
    if (variant > uint32_t(Variant::TR_REC)) throw InputError("weights: unknown variant id");
    c.variant = Variant(variant);
    c.vocab_size = int(r.u32());
    c.emb_dim = int(r.u32());
    c.spatial_proj = int(r.u32());
    c.hidden = int(r.u32());
    c.ff_hidden = int(r.u32());
    c.d_model = int(r.u32());
    c.d_ff = int(r.u32());
    c.layers = int(r.u32());
    c.heads = int(r.u32());
    c.propagate_cell = r.u32() != 0;

    SegModel m = (c.variant == Variant::UNSUP) ? SegModel{} : SegModel::build(c, 0);
    m.cfg = c;

    uint32_t n = r.u32();
    if (n != m.params.size()) throw InputError("weights: tensor count does not match the config");
    for (auto& p : m.params) {
        std::string name = r.str();
        uint32_t rows = r.u32(), cols = r.u32();
        if (name != p.name || int(rows) != p.w.rows() || int(cols) != p.w.cols())
            throw InputError("weights: tensor " + name + " does not match the config's layout");
        for (int i = 0; i < p.w.rows(); ++i)
            for (int j = 0; j < p.w.cols(); ++j) p.w(i, j) = r.f64();
    }
    if (flags & kFlagVocab) {
        m.vocab = vocab_from_string(r.str());
        m.has_vocab = true;
    }
    if (r.pos != blob.size()) throw InputError("weights: trailing bytes after payload");
    return m;
}

void save_weights_file(const SegModel& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("weights: cannot open " + path + " for writing");
    std::string blob = save_weights(m);
    out.write(blob.data(), std::streamsize(blob.size()));
    if (!out) throw InputError("weights: write failed for " + path);
}

SegModel load_weights_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("weights: cannot open " + path);
    std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return load_weights(blob);
}

} // namespace tabx::nn
