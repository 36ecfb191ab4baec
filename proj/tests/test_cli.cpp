#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string cli = TABX_CLI_PATH;

struct TempDir {
    fs::path dir;
    TempDir() {
        dir = fs::temp_directory_path() / ("tabx_cli_test_" + std::to_string(::getpid()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~TempDir() { fs::remove_all(dir); }
    std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

int run(const std::string& args) {
    std::string cmd = cli + " " + args + " >/dev/null 2>/dev/null";
    int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

int run_to(const std::string& args, const std::string& out) {
    std::string cmd = cli + " " + args + " >" + out + " 2>/dev/null";
    int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

} // namespace

TEST_CASE("synth corpus is byte-stable and jobs-invariant") {
    TempDir td;
    CHECK(run("synth --mode corpus --difficulty noisy --tables 12 --seed 9 --out " + td / "a.ndtab") == 0);
    CHECK(run("synth --mode corpus --difficulty noisy --tables 12 --seed 9 --out " + td / "b.ndtab") == 0);
    CHECK(run("synth --mode corpus --difficulty noisy --tables 12 --seed 9 --jobs 8 --out " +
              td / "c.ndtab") == 0);
    CHECK(slurp(td / "a.ndtab") == slurp(td / "b.ndtab"));
    CHECK(slurp(td / "a.ndtab") == slurp(td / "c.ndtab"));
    CHECK(run("synth --mode corpus --difficulty noisy --tables 12 --seed 10 --out " + td / "d.ndtab") == 0);
    CHECK(slurp(td / "a.ndtab") != slurp(td / "d.ndtab"));
}

TEST_CASE("detect-post matches synth truth and tunes to the same boxes") {
    TempDir td;
    CHECK(run("synth --mode masks --tables 6 --seed 4 --out-dir " + td / "m") == 0);
    std::string masks;
    for (int i = 0; i < 6; ++i) masks += " --mask " + td / ("m/mask_000" + std::to_string(i) + ".pgm");
    CHECK(run_to("detect-post" + masks, td / "det.csv") == 0);
    CHECK(slurp(td / "det.csv") == slurp(td / "m/boxes.csv"));
    CHECK(run_to("detect-post" + masks + " --jobs 4", td / "det2.csv") == 0);
    CHECK(slurp(td / "det.csv") == slurp(td / "det2.csv"));
    CHECK(run_to("detect-post" + masks + " --tune --truth " + td / "m/boxes.csv", td / "det3.csv") == 0);
    CHECK(slurp(td / "det.csv") == slurp(td / "det3.csv"));
    // tune without truth is a usage error
    CHECK(run("detect-post" + masks + " --tune") == 1);
}

TEST_CASE("config file fills defaults but explicit flags win") {
    TempDir td;
    CHECK(run("synth --mode masks --tables 1 --seed 4 --out-dir " + td / "m") == 0);
    std::string mask = td / "m/mask_0000.pgm";
    spit(td / "low.cfg", "# low cut\nthreshold = 0.52\nmin_area = 0.01\n");

    CHECK(run_to("detect-post --mask " + mask, td / "plain.csv") == 0);
    CHECK(run_to("detect-post --mask " + mask + " --config " + td / "low.cfg", td / "cfg.csv") == 0);
    CHECK(run_to("detect-post --mask " + mask + " --config " + td / "low.cfg" + " --threshold 0.7",
                 td / "both.csv") == 0);
    CHECK(slurp(td / "plain.csv") == slurp(td / "both.csv"));   // flag overrides file
    CHECK(slurp(td / "plain.csv") != slurp(td / "cfg.csv"));    // file moved the threshold

    spit(td / "bad.cfg", "not_a_key = 1\n");
    CHECK(run("detect-post --mask " + mask + " --config " + td / "bad.cfg") == 1);
    spit(td / "junk.cfg", "threshold 0.5\n");
    CHECK(run("detect-post --mask " + mask + " --config " + td / "junk.cfg") == 1);
    spit(td / "dup.cfg", "threshold = 0.5\nthreshold = 0.6\n");
    CHECK(run("detect-post --mask " + mask + " --config " + td / "dup.cfg") == 1);
}

TEST_CASE("usage errors exit 1") {
    CHECK(run("") == 1);                       // a subcommand is required
    CHECK(run("nosuchcmd") == 1);
    CHECK(run("prep --image a.pgm") == 1);     // --out missing
    CHECK(run("align --tsv /nonexistent.tsv") == 1);
    CHECK(run("detect-post --mask /nonexistent.pgm") == 1);
    CHECK(run("synth --mode corpus --tables 0 --out x") == 1);
    CHECK(run("synth --mode weird --out x") == 1);
    CHECK(run("eval --corpus nothing.ndtab") == 1);
}

TEST_CASE("prep binarizes, de-lines and stays deterministic") {
    TempDir td;
    CHECK(run("synth --mode raster --tables 1 --seed 21 --out-dir " + td / "r") == 0);
    std::string img = td / "r/raster_0000.pgm";
    CHECK(run("prep --image " + img + " --out " + td / "p1.pgm") == 0);
    CHECK(run("prep --image " + img + " --out " + td / "p2.pgm") == 0);
    CHECK(slurp(td / "p1.pgm") == slurp(td / "p2.pgm"));
    CHECK(run("prep --image " + img + " --no-line-removal --out " + td / "keep.pgm") == 0);
    CHECK(slurp(td / "p1.pgm") != slurp(td / "keep.pgm"));
    // the de-lined page equals the glyph layer: rules gone, glyphs intact
    CHECK(slurp(td / "p1.pgm") == slurp(td / "r/glyphs_0000.pgm"));
    CHECK(run("prep --image " + img + " --angle 45 --out " + td / "x.pgm") == 1);
    CHECK(run("prep --image " + img + " --roi 0,0,20 --out " + td / "x.pgm") == 1);
}

TEST_CASE("train, eval and align run end to end deterministically") {
    TempDir td;
    CHECK(run("synth --mode corpus --difficulty noisy --tables 60 --seed 3 --out " + td / "tr.ndtab") == 0);
    CHECK(run("synth --mode corpus --difficulty noisy --tables 24 --seed 8 --out " + td / "va.ndtab") == 0);

    std::string train_args = "train --variant ff_both --corpus " + td / "tr.ndtab" + " --val " +
                             td / "va.ndtab" + " --updates 80 --seed 6 --out ";
    CHECK(run(train_args + td / "w1.tbxw" + " --history " + td / "h1.csv") == 0);
    CHECK(run(train_args + td / "w2.tbxw" + " --history " + td / "h2.csv") == 0);
    CHECK(slurp(td / "w1.tbxw") == slurp(td / "w2.tbxw"));
    CHECK(slurp(td / "h1.csv") == slurp(td / "h2.csv"));
    CHECK(slurp(td / "h1.csv").substr(0, 26) == "update,train_loss,val_mcc\n");

    CHECK(run("train --variant unsup --corpus " + td / "tr.ndtab" + " --out " + td / "u.tbxw") == 1);
    CHECK(run("train --variant gru --corpus " + td / "tr.ndtab" + " --out " + td / "u.tbxw") == 1);

    CHECK(run_to("eval --corpus " + td / "va.ndtab" + " --model " + td / "w1.tbxw" + " --unsup",
                 td / "e1.csv") == 0);
    CHECK(run_to("eval --corpus " + td / "va.ndtab" + " --model " + td / "w1.tbxw" + " --unsup --jobs 6",
                 td / "e2.csv") == 0);
    std::string ev = slurp(td / "e1.csv");
    CHECK(ev == slurp(td / "e2.csv"));
    CHECK(ev.substr(0, 53) == "variant,p10,p25,p50,p75,p90,max,perfect_pct,mcc\nunsup");
    CHECK(ev.find("\nff_both,") != std::string::npos);

    // align a handcrafted page through the trained weights and through the baseline
    std::string tsv =
        "level\tpage_num\tblock_num\tpar_num\tline_num\tword_num\tleft\ttop\twidth\theight\tconf\ttext\n"
        "5\t1\t1\t1\t1\t1\t60\t60\t80\t14\t96\tItems\n"
        "5\t1\t1\t1\t1\t2\t430\t60\t40\t14\t95\t2021\n"
        "5\t1\t1\t1\t2\t1\t60\t86\t45\t14\t97\tTrade\n"
        "5\t1\t1\t1\t2\t2\t110\t86\t60\t14\t92\tpayables\n"
        "5\t1\t1\t1\t2\t3\t420\t86\t50\t14\t91\t1,234\n";
    spit(td / "page.tsv", tsv);
    CHECK(run_to("align --tsv " + td / "page.tsv" + " --out csv", td / "base.csv") == 0);
    CHECK(slurp(td / "base.csv") == "Items,2021\nTrade payables,\"1,234\"\n");
    CHECK(run_to("align --tsv " + td / "page.tsv" + " --model " + td / "w1.tbxw" + " --out csv",
                 td / "mod.csv") == 0);
    CHECK(run_to("align --tsv " + td / "page.tsv" + " --model " + td / "w1.tbxw" + " --out json",
                 td / "mod.json") == 0);
    std::string js = slurp(td / "mod.json");
    CHECK(js.find("\"n_rows\":2") != std::string::npos);
    CHECK(run("align --tsv " + td / "page.tsv" + " --out yaml") == 1);
}
