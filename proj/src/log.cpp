#include "ragcert/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <string>

namespace ragcert::log {

namespace {

Level parse_level(const char* s) {
  std::string v = s ? s : "";
  if (v == "debug") return Level::debug;
  if (v == "info") return Level::info;
  if (v == "warn" || v == "warning") return Level::warn;
  if (v == "error") return Level::error;
  if (v == "off" || v == "none") return Level::off;
  return Level::warn;
}

Level& threshold_ref() {
  static Level level = parse_level(std::getenv("RAG_CERTIFY_LOG"));
  return level;
}

const char* level_name(Level level) {
  switch (level) {
    case Level::debug: return "debug";
    case Level::info: return "info";
    case Level::warn: return "warn";
    case Level::error: return "error";
    default: return "?";
  }
}

std::mutex emit_mutex;

}  // namespace

Level threshold() { return threshold_ref(); }

void set_threshold(Level level) { threshold_ref() = level; }

void emit(Level level, const std::string& msg) {
  if (level < threshold()) return;
  std::lock_guard<std::mutex> lock(emit_mutex);
  std::fprintf(stderr, "[ragcert %s] %s\n", level_name(level), msg.c_str());
}

}  // namespace ragcert::log
