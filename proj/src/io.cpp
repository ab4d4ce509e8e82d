#include "ragcert/io.hpp"

#include <cstdint>
#include <fstream>
#include <sstream>

#include "ragcert/error.hpp"

namespace ragcert {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::io_error, "cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(Errc::io_error, "cannot write file: " + path);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) raise(Errc::io_error, "short write: " + path);
}

void for_each_jsonl(const std::string& path,
                    const std::function<void(const json&, std::size_t)>& fn) {
  std::ifstream in(path);
  if (!in) raise(Errc::io_error, "cannot open file: " + path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded())
      raise(Errc::format_error, path + ":" + std::to_string(lineno) + ": invalid JSON");
    fn(record, lineno);
  }
}

void write_jsonl(const std::string& path, const std::vector<json>& records) {
  std::string out;
  for (const auto& r : records) {
    out += r.dump();
    out += '\n';
  }
  write_file(path, out);
}

json load_json_file(const std::string& path) {
  json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) raise(Errc::format_error, path + ": invalid JSON");
  return j;
}

void save_json_file(const std::string& path, const json& j) {
  write_file(path, j.dump(2) + "\n");
}

template <typename T>
T require_field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key))
    raise(Errc::format_error, where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    raise(Errc::format_error, where + ": field '" + key + "' has the wrong type");
  }
}

template std::string require_field<std::string>(const json&, const char*, const std::string&);
template double require_field<double>(const json&, const char*, const std::string&);
template int require_field<int>(const json&, const char*, const std::string&);
template long require_field<long>(const json&, const char*, const std::string&);
template bool require_field<bool>(const json&, const char*, const std::string&);
template json require_field<json>(const json&, const char*, const std::string&);
template std::vector<double> require_field<std::vector<double>>(const json&, const char*,
                                                               const std::string&);
template std::vector<std::string> require_field<std::vector<std::string>>(const json&,
                                                                          const char*,
                                                                          const std::string&);
template std::vector<std::uint32_t> require_field<std::vector<std::uint32_t>>(
    const json&, const char*, const std::string&);

std::string fnv1a64_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x00000100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_digest(const std::string& path) { return fnv1a64_hex(read_file(path)); }

}  // namespace ragcert
