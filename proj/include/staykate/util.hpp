#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace staykate {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;

/// Lower-case hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::string trim(std::string_view s);

/// Reads a JSON-lines file, calling `on_record(json, line_number)` for every
/// non-blank line. Throws ValidationError naming the file and line on a parse
/// failure, or when the file cannot be opened.
void for_each_json_line(const std::filesystem::path& path,
                        const std::function<void(const Json&, std::size_t)>& on_record);

std::string read_text_file(const std::filesystem::path& path);

/// Writes atomically enough for our purposes: to `path.tmp`, then rename.
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace staykate
