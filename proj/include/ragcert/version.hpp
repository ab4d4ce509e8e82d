#pragma once

namespace ragcert {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ragcert
