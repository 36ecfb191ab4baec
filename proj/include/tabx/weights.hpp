#pragma once

#include <string>

#include "tabx/model.hpp"

namespace tabx::nn {

// "TBXW" container: version, config block, named tensors as little-endian
// 64-bit floats in row-major order, then the vocab text when one is embedded.
// Round-trips bit-exactly on every platform.
std::string save_weights(const SegModel& m);
SegModel load_weights(const std::string& blob);

void save_weights_file(const SegModel& m, const std::string& path);
SegModel load_weights_file(const std::string& path);

} // namespace tabx::nn
