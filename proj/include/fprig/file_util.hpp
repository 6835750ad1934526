#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace fprig {

std::string read_file(const std::filesystem::path& path);  // Error(not_found | io)

// Writes via a temporary sibling and rename, so readers never observe a
// partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace fprig
