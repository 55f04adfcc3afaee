#pragma once

#include <string>

#include "csto/types.hpp"

namespace csto {

// Writes content to path via a temporary file in the same directory followed by
// an atomic rename, so readers never observe a half-written file.
void atomic_write(const std::string& path, const std::string& content);

// Reads a whole file; throws input_error naming the path when it cannot be opened.
std::string read_file(const std::string& path);

// Shortest decimal form that round-trips a double (at least 17 significant digits).
std::string fmt17(double v);

}  // namespace csto
