#include "tabx/pgm.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

namespace tabx {

namespace {

// PGM header token: skips whitespace and '#' comment lines.
int next_header_int(std::istream& in) {
    for (;;) {
        int c = in.peek();
        if (c == EOF) throw InputError("pgm: truncated header");
        if (c == '#') {
            std::string line;
            std::getline(in, line);
            continue;
        }
        if (std::isspace(c)) {
            in.get();
            continue;
        }
        break;
    }
    int v = -1;
    in >> v;
    if (!in || v < 0) throw InputError("pgm: bad header value");
    return v;
}

GrayImage read_p5(std::istream& in) {
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (!in || m0 != 'P' || m1 != '5') throw InputError("pgm: not a P5 file");
    int w = next_header_int(in);
    int h = next_header_int(in);
    int maxval = next_header_int(in);
    if (w <= 0 || h <= 0) throw InputError("pgm: bad dimensions");
    if (maxval != 255) throw InputError("pgm: only maxval 255 supported");
    in.get(); // single whitespace byte after maxval
    GrayImage img(w, h, 0);
    in.read(reinterpret_cast<char*>(img.v.data()), std::streamsize(img.v.size()));
    if (in.gcount() != std::streamsize(img.v.size())) throw InputError("pgm: truncated pixel data");
    return img;
}

void write_p5(std::ostream& out, int w, int h, const uint8_t* data) {
    out << "P5\n" << w << " " << h << "\n255\n";
    out.write(reinterpret_cast<const char*>(data), std::streamsize(size_t(w) * h));
}

} // namespace

GrayImage read_pgm(std::istream& in) { return read_p5(in); }

GrayImage read_pgm_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open " + path);
    return read_p5(f);
}

void write_pgm(std::ostream& out, const GrayImage& img) { write_p5(out, img.width, img.height, img.v.data()); }

void write_pgm_file(const std::string& path, const GrayImage& img) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot write " + path);
    write_pgm(f, img);
}

ProbMask read_prob_mask(std::istream& in) {
    GrayImage img = read_p5(in);
    ProbMask m(img.width, img.height);
    for (size_t i = 0; i < img.v.size(); ++i) m.v[i] = double(img.v[i]) / 255.0;
    return m;
}

ProbMask read_prob_mask_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open " + path);
    return read_prob_mask(f);
}

void write_prob_mask(std::ostream& out, const ProbMask& m) {
    std::vector<uint8_t> q(m.v.size());
    for (size_t i = 0; i < m.v.size(); ++i) {
        double p = m.v[i];
        if (p < 0.0 || p > 1.0) throw InputError("prob mask value out of [0,1]");
        q[i] = uint8_t(std::lround(p * 255.0));
    }
    write_p5(out, m.width, m.height, q.data());
}

void write_prob_mask_file(const std::string& path, const ProbMask& m) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot write " + path);
    write_prob_mask(f, m);
}

ClassGrid read_class_grid(std::istream& in) {
    GrayImage img = read_p5(in);
    ClassGrid g(img.width, img.height);
    for (size_t i = 0; i < img.v.size(); ++i) {
        switch (img.v[i]) {
            case 0: g.v[i] = OTHER; break;
            case 128: g.v[i] = SEPARATOR; break;
            case 255: g.v[i] = TABLE; break;
            default: throw InputError("class grid: pixel value not in {0,128,255}");
        }
    }
    return g;
}

void write_class_grid(std::ostream& out, const ClassGrid& g) {
    std::vector<uint8_t> q(g.v.size());
    for (size_t i = 0; i < g.v.size(); ++i) {
        switch (g.v[i]) {
            case OTHER: q[i] = 0; break;
            case SEPARATOR: q[i] = 128; break;
            case TABLE: q[i] = 255; break;
            default: throw std::logic_error("class grid holds value outside {0,1,2}");
        }
    }
    write_p5(out, g.width, g.height, q.data());
}

void write_class_grid_file(const std::string& path, const ClassGrid& g) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot write " + path);
    write_class_grid(f, g);
}

} // namespace tabx
