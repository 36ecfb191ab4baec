#pragma once
#include <stdexcept>
#include <string>

namespace tabx {

// Bad input (malformed file, out-of-range argument). The CLI maps this to exit 1;
// std::logic_error (broken internal invariant) maps to exit 2.
struct InputError : std::runtime_error {
    explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace tabx
