#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace lcd {

/// Whole-file read. Throws IoError.
std::string read_file(const std::filesystem::path& path);

/// Writes through a sibling temporary and renames over the target. Throws IoError.
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace lcd
