#include "ragcert/similarity.hpp"

#include <algorithm>

#include "ragcert/text.hpp"

namespace ragcert {

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.empty() || b.empty()) return 0;
  // Two-row DP over token sequences.
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      if (a[i - 1] == b[j - 1])
        cur[j] = prev[j - 1] + 1;
      else
        cur[j] = std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

RougeScore rouge_l(std::string_view candidate, std::string_view reference) {
  auto cand = lowercase_tokens(candidate);
  auto ref = lowercase_tokens(reference);
  if (cand.empty() || ref.empty()) return {};

  double lcs = static_cast<double>(lcs_length(cand, ref));
  RougeScore score;
  score.precision = lcs / static_cast<double>(cand.size());
  score.recall = lcs / static_cast<double>(ref.size());
  double denom = score.precision + score.recall;
  score.f1 = denom == 0.0 ? 0.0 : 2.0 * score.precision * score.recall / denom;
  return score;
}

}  // namespace ragcert
