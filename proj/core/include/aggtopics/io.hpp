#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace aggtopics::io {

std::string read_file(const std::filesystem::path& path);
// Writes through a temporary file in the same directory, then renames.
void write_file(const std::filesystem::path& path, std::string_view content);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& value);

// Shortest decimal form that round-trips to the same double.
std::string format_double(double value);
// Fixed number of decimals, for human-facing tables.
std::string format_fixed(double value, int decimals);

// Quotes a CSV field only when it contains a separator, quote, or newline.
std::string csv_field(std::string_view field);

}  // namespace aggtopics::io
