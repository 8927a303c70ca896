#pragma once

#include <map>
#include <string>
#include <vector>

#include "street/text.hpp"

namespace street {

struct EvalPair {
  std::string truth;
  std::string output;
};

namespace detail {

// Sum over pairs of the multiset intersection size between truth and output
// words, with the requested side as denominator.
inline double word_fraction(const std::vector<EvalPair>& pairs, bool truth_denominator) {
  int64_t matched = 0, denom = 0, other = 0;
  for (const EvalPair& p : pairs) {
    std::map<std::string, int64_t> tc, oc;
    for (const std::string& w : split_words(p.truth)) ++tc[w];
    for (const std::string& w : split_words(p.output)) ++oc[w];
    for (const auto& [w, c] : tc) {
      auto it = oc.find(w);
      if (it != oc.end()) matched += std::min(c, it->second);
    }
    int64_t t = 0, o = 0;
    for (const auto& [w, c] : tc) t += c;
    for (const auto& [w, c] : oc) o += c;
    denom += truth_denominator ? t : o;
    other += truth_denominator ? o : t;
  }
  if (denom == 0) return other == 0 ? 1.0 : 0.0;
  return static_cast<double>(matched) / static_cast<double>(denom);
}

}  // namespace detail

// Fraction of space-delimited truth words present in the output
// (per-pair multiset matching, micro-averaged over the corpus).
inline double word_recall(const std::vector<EvalPair>& pairs) {
  return detail::word_fraction(pairs, /*truth_denominator=*/true);
}

// Fraction of space-delimited output words present in the truth.
inline double word_precision(const std::vector<EvalPair>& pairs) {
  return detail::word_fraction(pairs, /*truth_denominator=*/false);
}

// Fraction of pairs whose space-folded output differs from the space-folded
// truth. Exact, case-sensitive comparison.
inline double sequence_error(const std::vector<EvalPair>& pairs) {
  if (pairs.empty()) return 0.0;
  int64_t wrong = 0;
  for (const EvalPair& p : pairs)
    if (collapse_spaces(p.output) != collapse_spaces(p.truth)) ++wrong;
  return static_cast<double>(wrong) / static_cast<double>(pairs.size());
}

}  // namespace street
