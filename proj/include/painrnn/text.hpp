// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace painrnn::text {

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string> &parts, char sep);

/// `where` prefixes the error message on failure.
double parse_double(std::string_view s, const std::string &where);
long long parse_int(std::string_view s, const std::string &where);

/// Shortest representation that round-trips to the same double.
std::string format_double(double v);

/// Flat `key = value` text, `#` starts a comment. Duplicate keys are an error.
std::map<std::string, std::string> parse_key_values(std::string_view content,
                                                    const std::string &source);
std::map<std::string, std::string> read_key_value_file(const std::filesystem::path &path);

std::string read_file(const std::filesystem::path &path);
void write_file(const std::filesystem::path &path, std::string_view content);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view data);

}  // namespace painrnn::text
