#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace ddpood {

/// Fixed 17-significant-digit rendering used by every CSV.
std::string format_double(double v);

/// Writes via a temporary sibling file and rename so readers never observe a
/// partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace ddpood
