#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace ragcert {

// Splits on ASCII whitespace; multibyte UTF-8 sequences pass through intact.
std::vector<std::string> whitespace_tokens(std::string_view text);

std::string to_lower(std::string_view text);

// whitespace_tokens + ASCII lowercasing; the shared tokenizer for retrieval
// queries and similarity scoring.
std::vector<std::string> lowercase_tokens(std::string_view text);

std::string join_tokens(const std::vector<std::string>& tokens, std::size_t begin,
                        std::size_t end);

// Zero-padded decimal, growing past `width` digits when needed.
std::string zero_pad(std::size_t value, int width);

}  // namespace ragcert
