#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace radsynth {

/// Lower-case hex SHA-256 of a byte buffer.
std::string sha256_hex(std::span<const unsigned char> bytes);
std::string sha256_hex(std::string_view text);

/// SHA-256 over the concatenated contents of the given files, in order.
/// Each file contributes its path's filename and its bytes.
std::string sha256_files(const std::vector<std::filesystem::path>& files);

std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const unsigned char> bytes);
void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace radsynth
