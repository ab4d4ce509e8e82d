#pragma once

#include <stdexcept>
#include <string>

namespace ragcert {

// Error categories. The CLI maps each category to a distinct exit code,
// so library code should pick the category by what the caller can do
// about it, not by where the throw happens.
enum class Errc {
  io_error,          // missing or unreadable input
  format_error,      // malformed file contents (bad JSON, wrong field types)
  validation_error,  // invariant violations: duplicate ids, dangling refs, bad layout
  degenerate_input,  // calibration/training degeneracies (DegenerateScores, OneClassOnly, ...)
  usage_error,       // bad arguments or preconditions
  internal_error,
};

class RagError : public std::runtime_error {
 public:
  RagError(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& what) {
  throw RagError(code, what);
}

inline int exit_code(Errc code) {
  switch (code) {
    case Errc::io_error: return 2;
    case Errc::format_error: return 3;
    case Errc::validation_error: return 4;
    case Errc::degenerate_input: return 5;
    case Errc::usage_error: return 64;
    case Errc::internal_error: return 1;
  }
  return 1;
}

}  // namespace ragcert
