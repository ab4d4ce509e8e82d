#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace ragcert {

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

// Calls fn(record, line_number) for every non-blank line; 1-based line numbers.
// Parse failures raise format_error carrying path and line.
void for_each_jsonl(const std::string& path,
                    const std::function<void(const nlohmann::json&, std::size_t)>& fn);

// One compact JSON document per line, trailing newline. Keys come out sorted
// (nlohmann object ordering), which keeps artifacts byte-stable across runs.
void write_jsonl(const std::string& path, const std::vector<nlohmann::json>& records);

nlohmann::json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const nlohmann::json& j);

// Typed field access with errors that name the field and the location.
template <typename T>
T require_field(const nlohmann::json& j, const char* key, const std::string& where);

std::string fnv1a64_hex(std::string_view bytes);
std::string file_digest(const std::string& path);

}  // namespace ragcert
