#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "street/errors.hpp"
#include "street/records.hpp"
#include "street/text.hpp"

namespace street {

constexpr double kEarthRadiusM = 6371000.0;

// Equirectangular approximation; fine at the ~100 m scales the walls use.
inline double geo_distance_m(double lat1, double lon1, double lat2, double lon2) {
  const double d2r = std::acos(-1.0) / 180.0;
  const double dx = (lon2 - lon1) * d2r * std::cos(0.5 * (lat1 + lat2) * d2r);
  const double dy = (lat2 - lat1) * d2r;
  return kEarthRadiusM * std::sqrt(dx * dx + dy * dy);
}

struct SplitSet {
  std::vector<std::string> names;                 // subset generation order
  std::vector<std::vector<SignExample>> subsets;  // parallel to names
  int64_t wall_dropped = 0;                       // examples inside walls
  int64_t dedup_dropped = 0;                      // truth seen in earlier subset

  const std::vector<SignExample>& subset(std::string_view name) const {
    for (size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return subsets[i];
    throw ConfigError("no subset named " + std::string(name));
  }
};

// Geographic split into longitude strips with unused walls between subsets,
// then truth-string dedup across subsets in generation order.
inline SplitSet make_splits(const std::vector<SignExample>& examples,
                            const std::vector<std::pair<std::string, double>>& fractions,
                            double wall_m = 100.0) {
  if (fractions.empty()) throw ConfigError("no split fractions given");
  double total = 0;
  for (const auto& [name, f] : fractions) {
    if (f < 0) throw ConfigError("negative fraction for " + name);
    total += f;
  }
  if (total > 1.0 + 1e-9) throw ConfigError("fractions sum to more than 1");

  SplitSet out;
  for (const auto& [name, _] : fractions) out.names.push_back(name);
  out.subsets.resize(fractions.size());
  if (examples.empty()) return out;

  for (const SignExample& e : examples)
    if (!e.has_geo) throw ConfigError("example lacks lat/lon, cannot split geographically");

  std::vector<size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return examples[a].lon < examples[b].lon;
  });

  // conservative wall half-width in degrees of longitude, using the most
  // compressed meters-per-degree in the data
  double max_abs_lat = 0;
  for (const SignExample& e : examples) max_abs_lat = std::max(max_abs_lat, std::abs(e.lat));
  const double d2r = std::acos(-1.0) / 180.0;
  const double m_per_deg = kEarthRadiusM * d2r * std::max(0.05, std::cos(max_abs_lat * d2r));
  const double half_wall_deg = 0.5 * wall_m / m_per_deg;

  // strip boundaries by cumulative example count
  const size_t n = examples.size();
  std::vector<double> cuts;  // boundary longitudes between consecutive subsets
  double cum = 0;
  for (size_t s = 0; s + 1 < fractions.size(); ++s) {
    cum += fractions[s].second;
    size_t idx = static_cast<size_t>(std::llround(cum * static_cast<double>(n)));
    idx = std::min(idx, n - 1);
    const double left = examples[order[idx == 0 ? 0 : idx - 1]].lon;
    const double right = examples[order[idx]].lon;
    cuts.push_back(0.5 * (left + right));
  }

  auto subset_of = [&](double lon) -> int {
    // walls: anything within half the wall width of a cut is unused
    for (double c : cuts)
      if (std::abs(lon - c) < half_wall_deg) return -1;
    int s = 0;
    for (double c : cuts) {
      if (lon < c) break;
      ++s;
    }
    return s;
  };

  // fractions summing below 1 leave a tail strip unused: everything past the
  // last cut belongs to the last named subset only if fractions covered it
  std::vector<std::vector<const SignExample*>> assigned(fractions.size());
  for (size_t i : order) {
    const int s = subset_of(examples[i].lon);
    if (s < 0) {
      ++out.wall_dropped;
      continue;
    }
    assigned[static_cast<size_t>(s)].push_back(&examples[i]);
  }

  // dedup truth strings across subsets in generation order
  std::unordered_set<std::string> seen;
  for (size_t s = 0; s < assigned.size(); ++s) {
    std::unordered_set<std::string> mine;
    for (const SignExample* e : assigned[s]) {
      if (seen.count(e->text)) {
        ++out.dedup_dropped;
        continue;
      }
      mine.insert(e->text);
      out.subsets[s].push_back(*e);
    }
    for (const auto& t : mine) seen.insert(t);
  }
  return out;
}

// Drops examples whose truth cannot be encoded (outside charset or > 37 ids).
struct FilterResult {
  std::vector<SignExample> kept;
  int64_t dropped = 0;
};

inline FilterResult filter_encodable(const std::vector<SignExample>& examples,
                                     const Charset& cs) {
  FilterResult r;
  for (const SignExample& e : examples) {
    LabelSeq seq;
    if (cs.try_encode(e.text, &seq)) r.kept.push_back(e);
    else ++r.dropped;
  }
  return r;
}

// ---------------------------------------------------------------------------
// word-content statistics (out-of-vocabulary analysis per subset)
// ---------------------------------------------------------------------------

struct SubsetStats {
  std::string name;
  int64_t nonstop_words = 0;
  int64_t unique_words = 0;
  int64_t unique_oov = 0;
  int64_t total_oov = 0;
  double percent_oov = 0;
};

// Stop words are the given lower-case list plus any word whose raw train
// frequency exceeds freq_threshold. OOV is measured against the train
// subset's non-stop vocabulary.
inline std::vector<SubsetStats> corpus_stats(const SplitSet& split,
                                             const std::vector<std::string>& stop_words,
                                             int64_t freq_threshold = 100) {
  if (split.names.empty() || split.names[0] != "train")
    throw ConfigError("corpus_stats requires a train subset first");

  std::unordered_set<std::string> stops(stop_words.begin(), stop_words.end());
  std::unordered_map<std::string, int64_t> train_freq;
  for (const SignExample& e : split.subset("train"))
    for (const std::string& w : split_words(e.text)) ++train_freq[w];

  auto is_stop = [&](const std::string& w) {
    if (stops.count(w)) return true;
    auto it = train_freq.find(w);
    return it != train_freq.end() && it->second > freq_threshold;
  };

  std::unordered_set<std::string> train_vocab;
  for (const auto& [w, c] : train_freq)
    if (!is_stop(w)) train_vocab.insert(w);

  std::vector<SubsetStats> out;
  for (size_t s = 0; s < split.names.size(); ++s) {
    SubsetStats st;
    st.name = split.names[s];
    std::unordered_set<std::string> uniq, uniq_oov;
    for (const SignExample& e : split.subsets[s])
      for (const std::string& w : split_words(e.text)) {
        if (is_stop(w)) continue;
        ++st.nonstop_words;
        uniq.insert(w);
        if (!train_vocab.count(w)) {
          ++st.total_oov;
          uniq_oov.insert(w);
        }
      }
    st.unique_words = static_cast<int64_t>(uniq.size());
    st.unique_oov = static_cast<int64_t>(uniq_oov.size());
    st.percent_oov = st.nonstop_words == 0
                         ? 0.0
                         : 100.0 * static_cast<double>(st.total_oov) /
                               static_cast<double>(st.nonstop_words);
    out.push_back(st);
  }
  return out;
}

}  // namespace street
