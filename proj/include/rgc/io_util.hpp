#pragma once

#include <filesystem>
#include <string>

namespace rgc {

// Shortest decimal text (up to 17 significant digits) that reads back exactly.
std::string format_double(double v);

// Writes to a sibling temp file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace rgc
