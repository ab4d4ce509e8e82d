#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ragcert {

// Which scalar of the RougeL triple acts as the similarity h.
enum class RougeStat { f1, precision, recall };

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  double stat(RougeStat s) const {
    switch (s) {
      case RougeStat::precision: return precision;
      case RougeStat::recall: return recall;
      default: return f1;
    }
  }
};

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);

// Token-level RougeL over lowercased whitespace tokens.
// P = LCS/len(candidate), R = LCS/len(reference); empty either side -> zeros.
RougeScore rouge_l(std::string_view candidate, std::string_view reference);

}  // namespace ragcert
