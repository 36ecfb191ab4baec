#pragma once
#include <iosfwd>
#include <string>

#include "tabx/image.hpp"

namespace tabx {

// Binary PGM (P5), maxval 255. ProbMask pixels are stored as round(p*255) and read
// back as value/255. ClassGrid uses {0,128,255} for {OTHER,SEPARATOR,TABLE}.

GrayImage read_pgm(std::istream& in);
GrayImage read_pgm_file(const std::string& path);
void write_pgm(std::ostream& out, const GrayImage& img);
void write_pgm_file(const std::string& path, const GrayImage& img);

ProbMask read_prob_mask(std::istream& in);
ProbMask read_prob_mask_file(const std::string& path);
void write_prob_mask(std::ostream& out, const ProbMask& m);
void write_prob_mask_file(const std::string& path, const ProbMask& m);

ClassGrid read_class_grid(std::istream& in);
void write_class_grid(std::ostream& out, const ClassGrid& g);
void write_class_grid_file(const std::string& path, const ClassGrid& g);

} // namespace tabx
