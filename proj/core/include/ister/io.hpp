#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace ister::io {

/// Writes via a sibling temp file and rename, so readers never observe a
/// partially written file. Creates missing parent directories.
void write_text_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_text(const std::filesystem::path& path);

} // namespace ister::io
