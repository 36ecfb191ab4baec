#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tabx/align.hpp"
#include "tabx/imgprep.hpp"
#include "tabx/ingest.hpp"
#include "tabx/maskpost.hpp"
#include "tabx/model.hpp"
#include "tabx/parallel.hpp"
#include "tabx/pgm.hpp"
#include "tabx/rng.hpp"
#include "tabx/synth.hpp"
#include "tabx/train.hpp"
#include "tabx/weights.hpp"

using namespace tabx;

namespace {

struct Options {
    std::string config_path;
    int jobs = 1;
    uint64_t seed = 1;

    std::vector<std::string> masks;
    double threshold = 0.7;
    double min_area = 0.01;
    bool tune = false;
    std::string truth_csv;
    std::string out_file;

    std::string image_path;
    std::string roi_str;
    int pad = 10;
    int angle = 0;
    bool no_line_removal = false;

    std::string tsv_path;
    std::string model_path;
    std::string out_format = "csv";
    double cutoff = 0.5;
    double iou_trigger = 0.25;
    double min_conf = 30.0;

    std::string variant = "lstm_local";
    std::string corpus_path, val_path;
    int updates = 640;
    double lr = 0.01;
    int val_every = 10;
    std::string history_path;

    std::vector<std::string> eval_models;
    bool eval_unsup = false;

    std::string mode = "corpus";
    int n_tables = 10;
    std::string difficulty = "clean";
    std::string out_dir;
};

// ---- config file ------------------------------------------------------------

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::map<std::string, std::string> load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("config: cannot open " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::string t = trim(line);
        if (t.empty()) continue;
        size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw InputError("config: line " + std::to_string(n) + " is not `key = value`");
        std::string key = trim(t.substr(0, eq)), val = trim(t.substr(eq + 1));
        if (key.empty() || val.empty())
            throw InputError("config: line " + std::to_string(n) + " has an empty key or value");
        if (!kv.emplace(key, val).second)
            throw InputError("config: duplicate key " + key);
    }
    return kv;
}

double parse_double(const std::string& s) {
    size_t used = 0;
    double v = 0;
    try {
        v = std::stod(s, &used);
    } catch (...) {
        throw InputError("config: bad number `" + s + "`");
    }
    if (used != s.size()) throw InputError("config: bad number `" + s + "`");
    return v;
}

long long parse_ll(const std::string& s) {
    size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(s, &used);
    } catch (...) {
        throw InputError("config: bad integer `" + s + "`");
    }
    if (used != s.size()) throw InputError("config: bad integer `" + s + "`");
    return v;
}

struct ConfigKey {
    std::vector<CLI::Option*> opts;
    std::function<void(const std::string&)> set;
};

using Registry = std::map<std::string, ConfigKey>;

void apply_config(const Options& o, const Registry& reg) {
    if (o.config_path.empty()) return;
    for (const auto& [key, val] : load_config(o.config_path)) {
        auto it = reg.find(key);
        if (it == reg.end()) throw InputError("config: unknown key `" + key + "`");
        bool flagged = false;
        for (const CLI::Option* opt : it->second.opts)
            if (opt->count() > 0) flagged = true;
        if (!flagged) it->second.set(val); // explicit flags win over the file
    }
}

void validate(const Options& o) {
    if (o.jobs < 1) throw InputError("jobs must be >= 1");
    if (o.pad < 0) throw InputError("pad must be >= 0");
    if (o.min_area < 0 || o.min_area > 1) throw InputError("min_area must be in [0,1]");
    if (o.cutoff < 0 || o.cutoff > 1) throw InputError("cutoff must be in [0,1]");
    if (o.iou_trigger < 0 || o.iou_trigger > 1) throw InputError("iou_trigger must be in [0,1]");
    if (o.min_conf < 0 || o.min_conf > 100) throw InputError("min_conf must be in [0,100]");
    if (!(o.lr >= 0) || o.lr > 1e6) throw InputError("lr must be a nonnegative number");
    if (o.updates < 1) throw InputError("updates must be >= 1");
    if (o.val_every < 1) throw InputError("val_every must be >= 1");
    if (o.n_tables < 1) throw InputError("tables must be >= 1");
}

// ---- output helpers ----------------------------------------------------------

void write_out(const std::string& path, const std::string& data) {
    if (path.empty() || path == "-") {
        std::cout << data;
        std::cout.flush();
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open " + path + " for writing");
    out << data;
    if (!out) throw InputError("write failed for " + path);
}

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

GrayImage ink_image(const BoolMask& m) {
    GrayImage img(m.width, m.height, 255);
    for (int y = 0; y < m.height; ++y)
        for (int x = 0; x < m.width; ++x)
            if (m.at(x, y)) img.at(x, y) = 0;
    return img;
}

// ---- subcommands ---------------------------------------------------------------

void run_detect(const Options& o) {
    std::vector<ProbMask> masks(o.masks.size());
    parallel_for(o.masks.size(), o.jobs, [&](size_t i) { masks[i] = read_prob_mask_file(o.masks[i]); });

    double t = o.threshold;
    if (o.tune) {
        if (o.truth_csv.empty()) throw InputError("detect-post: --tune requires --truth");
        std::ifstream in(o.truth_csv);
        if (!in) throw InputError("detect-post: cannot open " + o.truth_csv);
        std::vector<std::vector<BBox>> truth(masks.size());
        for (const auto& [page, box] : boxes_from_csv(in)) {
            if (page < 0 || size_t(page) >= masks.size())
                throw InputError("detect-post: truth page index out of range");
            truth[size_t(page)].push_back(box);
        }
        std::vector<double> grid;
        for (int i = 0; i <= 8; ++i) grid.push_back(0.50 + 0.05 * i);
        auto [best, mean] = tune_threshold(masks, truth, grid, o.min_area);
        t = best;
        std::cerr << "tuned threshold " << fixed6(best) << " with mean iou " << fixed6(mean) << "\n";
    }

    std::vector<std::vector<BBox>> det(masks.size());
    parallel_for(masks.size(), o.jobs, [&](size_t i) { det[i] = detect_boxes(masks[i], t, o.min_area); });
    std::vector<std::pair<int, BBox>> rows;
    for (size_t i = 0; i < det.size(); ++i)
        for (const auto& b : det[i]) rows.push_back({int(i), b});
    write_out(o.out_file, boxes_to_csv(rows));
}

BBox parse_roi(const std::string& s) {
    std::vector<long long> v;
    std::string part;
    std::stringstream ss(s);
    while (std::getline(ss, part, ',')) v.push_back(parse_ll(trim(part)));
    if (v.size() != 4) throw InputError("prep: --roi must be L,T,W,H");
    return BBox{int(v[0]), int(v[1]), int(v[2]), int(v[3])};
}

void run_prep(const Options& o) {
    GrayImage img = read_pgm_file(o.image_path);
    if (!o.roi_str.empty()) img = crop_pad(img, parse_roi(o.roi_str), o.pad);
    auto [t, bin] = otsu_threshold(img);
    std::cerr << "otsu threshold " << t << "\n";
    bin = rotate_quarter(bin, o.angle);
    if (!o.no_line_removal) bin = remove_lines(bin, build_line_mask(bin));
    write_pgm_file(o.out_file, bin);
}

void run_align(const Options& o) {
    std::ifstream in(o.tsv_path);
    if (!in) throw InputError("align: cannot open " + o.tsv_path);
    TsvParse parsed = parse_tsv(in);
    if (parsed.malformed)
        std::cerr << "align: skipped " << parsed.malformed << " malformed tsv rows\n";
    TableWords tw = group_rows(filter_confidence(std::move(parsed.words), o.min_conf));
    if (tw.rows.empty()) throw InputError("align: no words above the confidence floor");

    size_t tokens = 0;
    for (const auto& r : tw.rows) tokens += r.size();
    std::vector<double> probs;
    if (!o.model_path.empty()) {
        nn::SegModel m = nn::load_weights_file(o.model_path);
        if (m.cfg.variant != nn::Variant::UNSUP && !m.has_vocab)
            throw InputError("align: weight file carries no vocabulary");
        CorpusTable ct;
        ct.words = tw;
        probs = m.forward_probs(featurize_table(ct, m.vocab, default_tag));
    } else {
        probs.assign(tokens, 1.0); // no model: every token closes a cell
    }

    auto cells = flatten_cells(merge_segments(tw, probs, o.cutoff));
    DisjointSet dsu = unify_columns(cells, o.iou_trigger);
    TableGrid g = assemble_grid(cells, dsu);

    std::string out;
    if (o.out_format == "csv")
        out = grid_to_csv(g);
    else if (o.out_format == "latex")
        out = grid_to_latex(g);
    else if (o.out_format == "json")
        out = grid_to_json(g);
    else
        throw InputError("align: unknown output format `" + o.out_format + "`");
    write_out(o.out_file, out);
}

void run_train(const Options& o) {
    nn::Variant v = nn::variant_from_name(o.variant);
    auto corpus = read_ndtab_file(o.corpus_path);
    std::vector<CorpusTable> val_corpus;
    if (!o.val_path.empty()) val_corpus = read_ndtab_file(o.val_path);

    Vocab vocab = build_vocab(corpus, default_tag);
    auto featurize_all = [&](const std::vector<CorpusTable>& c) {
        std::vector<FeaturizedTable> f(c.size());
        parallel_for(c.size(), o.jobs, [&](size_t i) { f[i] = featurize_table(c[i], vocab, default_tag); });
        return f;
    };
    auto ftrain = featurize_all(corpus);
    auto fval = featurize_all(val_corpus);

    nn::ModelConfig cfg;
    cfg.variant = v;
    cfg.vocab_size = vocab.size();
    nn::SegModel model = nn::SegModel::build(cfg, o.seed);

    nn::TrainOpts topts;
    topts.updates = o.updates;
    topts.lr = o.lr;
    topts.seed = o.seed;
    topts.val_every = o.val_every;
    topts.cutoff = o.cutoff;
    nn::TrainResult res = nn::train_model(std::move(model), ftrain, fval, topts);

    res.model.vocab = vocab;
    res.model.has_vocab = true;
    nn::save_weights_file(res.model, o.out_file);
    if (!o.history_path.empty()) write_out(o.history_path, nn::history_csv(res.history));
    if (!fval.empty())
        std::cerr << "best val mcc " << fixed6(res.best_mcc) << " at update " << res.best_update << "\n";
}

long long closure_count(const std::vector<double>& probs, const FeaturizedTable& ft, double cutoff) {
    long long n = 0;
    size_t k = 0;
    for (const auto& row : ft.rows) {
        bool last_closed = false;
        for (size_t j = 0; j < row.size(); ++j, ++k) {
            last_closed = probs[k] > cutoff;
            if (last_closed) ++n;
        }
        if (!last_closed) ++n; // the row's final token always ends a cell
    }
    return n;
}

void run_eval(const Options& o) {
    if (o.eval_models.empty() && !o.eval_unsup)
        throw InputError("eval: give at least one --model or --unsup");
    auto corpus = read_ndtab_file(o.corpus_path);
    if (corpus.empty()) throw InputError("eval: corpus is empty");
    for (const auto& c : corpus)
        if (!c.has_labels()) throw InputError("eval: corpus must carry gold labels");

    std::vector<long long> truth(corpus.size(), 0);
    for (size_t i = 0; i < corpus.size(); ++i)
        for (const auto& lr : corpus[i].labels)
            for (int l : lr) truth[i] += l;

    std::string out = "variant,p10,p25,p50,p75,p90,max,perfect_pct,mcc\n";
    auto emit = [&](const std::string& name, const std::vector<long long>& pred,
                    const nn::Confusion& conf) {
        std::vector<std::pair<long long, long long>> counts(corpus.size());
        for (size_t i = 0; i < corpus.size(); ++i) counts[i] = {pred[i], truth[i]};
        AlignEval e = eval_alignment(counts);
        e.mcc = nn::mcc_from_counts(conf);
        e.has_mcc = true;
        out += name + ',' + fixed6(e.q10) + ',' + fixed6(e.q25) + ',' + fixed6(e.q50) + ',' +
               fixed6(e.q75) + ',' + fixed6(e.q90) + ',' + fixed6(e.max) + ',' +
               fixed6(e.perfect_pct) + ',' + fixed6(e.mcc) + '\n';
    };

    if (o.eval_unsup) {
        std::vector<long long> pred(corpus.size(), 0);
        nn::Confusion conf;
        for (size_t i = 0; i < corpus.size(); ++i) {
            for (const auto& lr : corpus[i].labels) {
                pred[i] += (long long)lr.size();
                for (int l : lr) conf.add(true, l != 0);
            }
        }
        emit("unsup", pred, conf);
    }
    for (const auto& path : o.eval_models) {
        nn::SegModel m = nn::load_weights_file(path);
        if (m.cfg.variant != nn::Variant::UNSUP && !m.has_vocab)
            throw InputError("eval: weight file carries no vocabulary");
        std::vector<FeaturizedTable> feats(corpus.size());
        parallel_for(corpus.size(), o.jobs,
                     [&](size_t i) { feats[i] = featurize_table(corpus[i], m.vocab, default_tag); });
        std::vector<std::vector<double>> probs(corpus.size());
        parallel_for(corpus.size(), o.jobs, [&](size_t i) { probs[i] = m.forward_probs(feats[i]); });

        std::vector<long long> pred(corpus.size(), 0);
        nn::Confusion conf;
        for (size_t i = 0; i < corpus.size(); ++i) {
            pred[i] = closure_count(probs[i], feats[i], o.cutoff);
            size_t k = 0;
            for (const auto& row : feats[i].rows)
                for (const auto& tf : row) conf.add(probs[i][k++] > o.cutoff, tf.label != 0);
        }
        emit(nn::variant_name(m.cfg.variant), pred, conf);
    }
    write_out(o.out_file, out);
}

void run_synth(const Options& o) {
    synth::SynthSpec spec =
        synth::make_spec(synth::difficulty_from_name(o.difficulty), o.seed, o.n_tables);
    namespace fs = std::filesystem;

    if (o.mode == "corpus") {
        if (o.out_file.empty()) throw InputError("synth: corpus mode needs --out");
        std::vector<synth::MadeTable> made(size_t(spec.n_tables));
        parallel_for(made.size(), o.jobs, [&](size_t i) { made[i] = synth::gen_table(spec, i); });
        std::vector<CorpusTable> corpus;
        corpus.reserve(made.size());
        for (auto& m : made) corpus.push_back(std::move(m.table));
        write_ndtab_file(o.out_file, corpus);
    } else if (o.mode == "masks") {
        if (o.out_dir.empty()) throw InputError("synth: masks mode needs --out-dir");
        fs::create_directories(o.out_dir);
        spec.page_w = 400; // detection pages; a full A4 of doubles buys nothing here
        spec.page_h = 520;
        std::vector<synth::MaskPage> pages(size_t(spec.n_tables));
        parallel_for(pages.size(), o.jobs, [&](size_t i) { pages[i] = synth::gen_mask_page(spec, i); });
        std::vector<std::pair<int, BBox>> rows;
        for (size_t i = 0; i < pages.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "mask_%04zu.pgm", i);
            write_prob_mask_file((fs::path(o.out_dir) / name).string(), pages[i].mask);
            for (const auto& b : pages[i].boxes) rows.push_back({int(i), b});
        }
        write_out((fs::path(o.out_dir) / "boxes.csv").string(), boxes_to_csv(rows));
    } else if (o.mode == "raster") {
        if (o.out_dir.empty()) throw InputError("synth: raster mode needs --out-dir");
        fs::create_directories(o.out_dir);
        std::vector<synth::RasterPage> pages(size_t(spec.n_tables));
        parallel_for(pages.size(), o.jobs, [&](size_t i) {
            synth::MadeTable mt = synth::gen_table(spec, i);
            pages[i] = synth::render_raster(mt, Rng::mix(spec.seed + 1, i));
        });
        for (size_t i = 0; i < pages.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "raster_%04zu.pgm", i);
            write_pgm_file((fs::path(o.out_dir) / name).string(), pages[i].image);
            std::snprintf(name, sizeof name, "rules_%04zu.pgm", i);
            write_pgm_file((fs::path(o.out_dir) / name).string(), ink_image(pages[i].rule_px));
            std::snprintf(name, sizeof name, "glyphs_%04zu.pgm", i);
            write_pgm_file((fs::path(o.out_dir) / name).string(), ink_image(pages[i].glyph_px));
        }
    } else {
        throw InputError("synth: unknown mode `" + o.mode + "`");
    }
}

} // namespace

int main(int argc, char** argv) {
    Options o;
    Registry reg;

    CLI::App app{"tabx: recover structured tables from financial document images"};
    app.require_subcommand(1);

    auto reg_key = [&](const std::string& key, CLI::Option* opt, std::function<void(const std::string&)> set) {
        auto& entry = reg[key];
        entry.opts.push_back(opt);
        if (!entry.set) entry.set = std::move(set);
    };
    auto add_common = [&](CLI::App* sc) {
        sc->fallthrough();
        sc->add_option("--config", o.config_path, "flat `key = value` settings file");
        reg_key("jobs", sc->add_option("--jobs", o.jobs, "worker threads"),
                [&](const std::string& s) { o.jobs = int(parse_ll(s)); });
        reg_key("seed", sc->add_option("--seed", o.seed, "root random seed"),
                [&](const std::string& s) { o.seed = uint64_t(parse_ll(s)); });
    };

    CLI::App* detect = app.add_subcommand("detect-post", "mask post-processing: probability masks to table boxes");
    add_common(detect);
    detect->add_option("--mask", o.masks, "probability-mask PGM, repeatable; page = argument order")->required();
    reg_key("threshold", detect->add_option("--threshold", o.threshold, "mask cut probability"),
            [&](const std::string& s) { o.threshold = parse_double(s); });
    reg_key("min_area", detect->add_option("--min-area", o.min_area, "region area floor as a page fraction"),
            [&](const std::string& s) { o.min_area = parse_double(s); });
    detect->add_flag("--tune", o.tune, "pick the threshold from a fixed 0.50..0.90 grid against --truth");
    detect->add_option("--truth", o.truth_csv, "truth box CSV for --tune");
    detect->add_option("--out", o.out_file, "output box CSV (default: stdout)");

    CLI::App* prep = app.add_subcommand("prep", "crop, binarize, rotate, and strip ruling lines");
    add_common(prep);
    prep->add_option("--image", o.image_path, "input PGM page")->required();
    prep->add_option("--roi", o.roi_str, "L,T,W,H crop box");
    reg_key("pad", prep->add_option("--pad", o.pad, "white border around the crop"),
            [&](const std::string& s) { o.pad = int(parse_ll(s)); });
    prep->add_option("--angle", o.angle, "clockwise quarter rotation: 0, 90, 180, 270");
    prep->add_flag("--no-line-removal", o.no_line_removal, "keep ruling lines");
    prep->add_option("--out", o.out_file, "output PGM")->required();

    CLI::App* align = app.add_subcommand("align", "OCR TSV to a structured table");
    add_common(align);
    align->add_option("--tsv", o.tsv_path, "Tesseract-style TSV")->required();
    align->add_option("--model", o.model_path, "weight file (omit for the every-token baseline)");
    align->add_option("--out", o.out_format, "output format: csv, latex, json")
        ->check(CLI::IsMember({"csv", "latex", "json"}));
    align->add_option("--out-file", o.out_file, "output path (default: stdout)");
    reg_key("cutoff", align->add_option("--cutoff", o.cutoff, "segment-closing probability cut"),
            [&](const std::string& s) { o.cutoff = parse_double(s); });
    reg_key("iou_trigger", align->add_option("--iou-trigger", o.iou_trigger, "column-merge IOU floor"),
            [&](const std::string& s) { o.iou_trigger = parse_double(s); });
    reg_key("min_conf", align->add_option("--min-conf", o.min_conf, "OCR confidence floor"),
            [&](const std::string& s) { o.min_conf = parse_double(s); });

    CLI::App* train = app.add_subcommand("train", "fit a segmentation model on a labeled corpus");
    add_common(train);
    train->add_option("--variant", o.variant, "model variant name");
    train->add_option("--corpus", o.corpus_path, "training corpus (.ndtab)")->required();
    train->add_option("--val", o.val_path, "validation corpus (.ndtab)");
    reg_key("updates", train->add_option("--updates", o.updates, "optimizer steps"),
            [&](const std::string& s) { o.updates = int(parse_ll(s)); });
    reg_key("lr", train->add_option("--lr", o.lr, "Adam learning rate"),
            [&](const std::string& s) { o.lr = parse_double(s); });
    reg_key("val_every", train->add_option("--val-every", o.val_every, "updates between validations"),
            [&](const std::string& s) { o.val_every = int(parse_ll(s)); });
    CLI::Option* tr_cut = train->add_option("--cutoff", o.cutoff, "probability cut for validation MCC");
    reg_key("cutoff", tr_cut, nullptr);
    train->add_option("--out", o.out_file, "output weight file")->required();
    train->add_option("--history", o.history_path, "training history CSV");

    CLI::App* eval = app.add_subcommand("eval", "score models on a labeled corpus");
    add_common(eval);
    eval->add_option("--corpus", o.corpus_path, "labeled corpus (.ndtab)")->required();
    eval->add_option("--model", o.eval_models, "weight file, repeatable");
    eval->add_flag("--unsup", o.eval_unsup, "include the every-token baseline row");
    CLI::Option* ev_cut = eval->add_option("--cutoff", o.cutoff, "probability cut");
    reg_key("cutoff", ev_cut, nullptr);
    eval->add_option("--out", o.out_file, "output CSV (default: stdout)");

    CLI::App* synth = app.add_subcommand("synth", "generate ground-truthed synthetic data");
    add_common(synth);
    synth->add_option("--mode", o.mode, "corpus, masks, or raster")
        ->check(CLI::IsMember({"corpus", "masks", "raster"}));
    synth->add_option("--tables", o.n_tables, "how many tables/pages");
    synth->add_option("--difficulty", o.difficulty, "clean or noisy")
        ->check(CLI::IsMember({"clean", "noisy"}));
    synth->add_option("--out", o.out_file, "corpus output path");
    synth->add_option("--out-dir", o.out_dir, "directory for masks/raster output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        apply_config(o, reg);
        validate(o);
        if (detect->parsed())
            run_detect(o);
        else if (prep->parsed())
            run_prep(o);
        else if (align->parsed())
            run_align(o);
        else if (train->parsed())
            run_train(o);
        else if (eval->parsed())
            run_eval(o);
        else if (synth->parsed())
            run_synth(o);
        return 0;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
}
