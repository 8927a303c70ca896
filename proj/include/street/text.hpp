#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <istream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "street/errors.hpp"

namespace street {

// ---------------------------------------------------------------------------
// minimal UTF-8 walking; malformed bytes pass through as single code units
// ---------------------------------------------------------------------------

namespace utf8 {

inline char32_t next(std::string_view s, size_t& i) {
  const unsigned char b0 = static_cast<unsigned char>(s[i]);
  auto cont = [&](size_t k) {
    return i + k < s.size() && (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80;
  };
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  if ((b0 & 0xE0) == 0xC0 && cont(1)) {
    char32_t cp = (b0 & 0x1Fu) << 6 | (static_cast<unsigned char>(s[i + 1]) & 0x3Fu);
    i += 2;
    return cp;
  }
  if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
    char32_t cp = (b0 & 0x0Fu) << 12 | (static_cast<unsigned char>(s[i + 1]) & 0x3Fu) << 6 |
                  (static_cast<unsigned char>(s[i + 2]) & 0x3Fu);
    i += 3;
    return cp;
  }
  if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
    char32_t cp = (b0 & 0x07u) << 18 | (static_cast<unsigned char>(s[i + 1]) & 0x3Fu) << 12 |
                  (static_cast<unsigned char>(s[i + 2]) & 0x3Fu) << 6 |
                  (static_cast<unsigned char>(s[i + 3]) & 0x3Fu);
    i += 4;
    return cp;
  }
  ++i;  // malformed: emit the byte itself
  return b0;
}

inline void append(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

}  // namespace utf8

// Case folding covers ASCII plus the accented inventory street signs use
// (grave/acute/circumflex/diaeresis vowels, c-cedilla, oe ligature).
// Anything outside the table passes through unchanged.
namespace detail {

struct CasePair {
  char32_t lower, upper;
};

inline const std::vector<CasePair>& case_pairs() {
  static const std::vector<CasePair> kPairs = {
      {0x00E0, 0x00C0},  // a grave
      {0x00E2, 0x00C2},  // a circumflex
      {0x00E7, 0x00C7},  // c cedilla
      {0x00E9, 0x00C9},  // e acute
      {0x00E8, 0x00C8},  // e grave
      {0x00EA, 0x00CA},  // e circumflex
      {0x00EB, 0x00CB},  // e diaeresis
      {0x00EE, 0x00CE},  // i circumflex
      {0x00F4, 0x00D4},  // o circumflex
      {0x00F9, 0x00D9},  // u grave
      {0x00FB, 0x00DB},  // u circumflex
  };
  return kPairs;
}

}  // namespace detail

inline char32_t to_lower_cp(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  for (const auto& p : detail::case_pairs())
    if (p.upper == cp) return p.lower;
  return cp;
}

inline char32_t to_upper_cp(char32_t cp) {
  if (cp >= 'a' && cp <= 'z') return cp - 32;
  for (const auto& p : detail::case_pairs())
    if (p.lower == cp) return p.upper;
  return cp;  // includes lower-only entries like ä ï œ ü ÿ
}

inline std::string to_lower(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (size_t i = 0; i < s.size();) utf8::append(out, to_lower_cp(utf8::next(s, i)));
  return out;
}

// First letter upper-cased, remainder lower-cased.
inline std::string capitalize(std::string_view s) {
  std::string out;
  size_t i = 0;
  if (i < s.size()) utf8::append(out, to_upper_cp(utf8::next(s, i)));
  while (i < s.size()) utf8::append(out, to_lower_cp(utf8::next(s, i)));
  return out;
}

// The words that map style keeps fully lower-case.
inline const std::vector<std::string>& title_stop_words() {
  static const std::vector<std::string> kWords = {"au", "aux", "de", "des", "du",  "et",
                                                  "la", "le",  "les", "sous", "sur"};
  return kWords;
}

inline bool is_title_stop_word(std::string_view lower_word) {
  for (const auto& w : title_stop_words())
    if (lower_word == w) return true;
  return false;
}

// Map-style Title Case: stop words fully lower; d'/l' prefixes lower with
// the suffix capitalized; every other word initial-capitalized. Idempotent.
inline std::string title_case_fold(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  size_t pos = 0;
  bool first = true;
  while (pos <= text.size()) {
    const size_t sp = text.find(' ', pos);
    const std::string_view word =
        text.substr(pos, sp == std::string_view::npos ? text.size() - pos : sp - pos);
    if (!first) out.push_back(' ');
    first = false;
    if (!word.empty()) {
      const std::string lower = to_lower(word);
      if (is_title_stop_word(lower)) {
        out += lower;
      } else if (lower.size() >= 2 && (lower[0] == 'd' || lower[0] == 'l') && lower[1] == '\'') {
        out += lower.substr(0, 2);
        out += capitalize(word.substr(2));
      } else {
        out += capitalize(word);
      }
    }
    if (sp == std::string_view::npos) break;
    pos = sp + 1;
  }
  return out;
}

// Runs of spaces folded to one space, ends trimmed.
inline std::string collapse_spaces(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool in_space = true;  // leading spaces dropped
  for (char c : s) {
    if (c == ' ') {
      in_space = true;
    } else {
      if (in_space && !out.empty()) out.push_back(' ');
      in_space = false;
      out.push_back(c);
    }
  }
  return out;
}

inline std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> words;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') ++i;
    size_t j = i;
    while (j < s.size() && s[j] != ' ') ++j;
    if (j > i) words.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return words;
}

// ---------------------------------------------------------------------------
// charset: dense class-id <-> UTF-8 string table, space at 0, null last
// ---------------------------------------------------------------------------

struct LabelSeq {
  std::vector<int> unpadded;  // length <= 37, no null ids for well-formed charsets
  std::vector<int> padded;    // exactly 37, null-filled
};

class Charset {
 public:
  static constexpr int kMaxLabelLength = 37;

  // One entry per line: "<decimal id>\t<utf-8 string>". Repeated ids declare
  // aliases folding to the first-listed canonical string.
  static Charset load(std::istream& in) {
    std::vector<std::pair<int, std::string>> entries;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const size_t tab = line.find('\t');
      if (tab == std::string::npos)
        throw CharsetError("line " + std::to_string(lineno) + ": missing tab");
      int id = 0;
      try {
        size_t used = 0;
        id = std::stoi(line.substr(0, tab), &used);
        if (used != tab) throw std::invalid_argument("trailing junk");
      } catch (const std::exception&) {
        throw CharsetError("line " + std::to_string(lineno) + ": bad class-id");
      }
      if (id < 0) throw CharsetError("line " + std::to_string(lineno) + ": negative class-id");
      entries.emplace_back(id, line.substr(tab + 1));
    }
    return from_entries(entries);
  }

  static Charset from_entries(const std::vector<std::pair<int, std::string>>& entries) {
    if (entries.empty()) throw CharsetError("empty charset");
    int max_id = 0;
    for (const auto& [id, _] : entries) max_id = std::max(max_id, id);
    Charset cs;
    cs.canonical_.assign(static_cast<size_t>(max_id) + 1, std::string());
    std::vector<bool> seen(static_cast<size_t>(max_id) + 1, false);
    for (const auto& [id, str] : entries) {
      if (str.empty()) throw CharsetError("empty string for id " + std::to_string(id));
      if (!seen[static_cast<size_t>(id)]) {
        seen[static_cast<size_t>(id)] = true;
        cs.canonical_[static_cast<size_t>(id)] = str;  // first listed is canonical
      }
      auto it = cs.to_id_.find(str);
      if (it != cs.to_id_.end()) {
        if (it->second != id)
          throw CharsetError("string \"" + str + "\" maps to ids " +
                             std::to_string(it->second) + " and " + std::to_string(id));
        continue;
      }
      cs.to_id_.emplace(str, id);
    }
    for (int id = 0; id <= max_id; ++id)
      if (!seen[static_cast<size_t>(id)])
        throw CharsetError("class-ids not dense: missing " + std::to_string(id));
    if (cs.canonical_[0] != " ")
      throw CharsetError("class-id 0 must map to a single space");
    for (const auto& [str, _] : cs.to_id_)
      cs.max_entry_bytes_ = std::max(cs.max_entry_bytes_, str.size());
    return cs;
  }

  int size() const { return static_cast<int>(canonical_.size()); }
  int null_id() const { return size() - 1; }
  const std::string& canonical(int id) const { return canonical_.at(static_cast<size_t>(id)); }

  // Greedy longest-match tokenization against all charset strings.
  LabelSeq encode(const std::string& text) const {
    LabelSeq seq;
    size_t i = 0;
    while (i < text.size()) {
      int id = -1;
      size_t best = 0;
      const size_t limit = std::min(max_entry_bytes_, text.size() - i);
      for (size_t len = limit; len >= 1; --len) {
        auto it = to_id_.find(std::string_view(text).substr(i, len));
        if (it != to_id_.end()) {
          id = it->second;
          best = len;
          break;
        }
      }
      if (id < 0) {
        size_t j = i;
        std::string_view sv(text);
        utf8::next(sv, j);
        throw UnencodableChar("character \"" + text.substr(i, j - i) + "\" at byte " +
                              std::to_string(i) + " is outside the charset");
      }
      seq.unpadded.push_back(id);
      if (static_cast<int>(seq.unpadded.size()) > kMaxLabelLength)
        throw TooLong("encoded length exceeds the maximum of " +
                      std::to_string(kMaxLabelLength));
      i += best;
    }
    seq.padded = seq.unpadded;
    seq.padded.resize(kMaxLabelLength, null_id());
    return seq;
  }

  bool try_encode(const std::string& text, LabelSeq* out, std::string* why = nullptr) const {
    try {
      LabelSeq seq = encode(text);
      if (out) *out = std::move(seq);
      return true;
    } catch (const Error& e) {
      if (why) *why = e.what();
      return false;
    }
  }

  std::string decode(std::span<const int> ids) const {
    std::string out;
    for (int id : ids) out += canonical(id);
    return out;
  }

  std::string to_text() const {
    std::ostringstream os;
    for (size_t id = 0; id < canonical_.size(); ++id)
      os << id << '\t' << canonical_[id] << '\n';
    // aliases after canonicals, stable order
    std::vector<std::pair<std::string, int>> aliases;
    for (const auto& [str, id] : to_id_)
      if (canonical_[static_cast<size_t>(id)] != str) aliases.emplace_back(str, id);
    std::sort(aliases.begin(), aliases.end(),
              [](const auto& a, const auto& b) { return a.second < b.second; });
    for (const auto& [str, id] : aliases) os << id << '\t' << str << '\n';
    return os.str();
  }

 private:
  std::vector<std::string> canonical_;
  std::map<std::string, int, std::less<>> to_id_;
  size_t max_entry_bytes_ = 0;
};

}  // namespace street
