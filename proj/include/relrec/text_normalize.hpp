#pragma once
// Folding used for alias matching: canonical decomposition, combining marks
// dropped, full Unicode case folding. Any code point that is not alphanumeric
// after folding separates words.

#include <string>
#include <string_view>
#include <vector>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "relrec/error.hpp"

namespace relrec {

struct Token {
  std::string folded;
  std::size_t begin = 0;  // byte offsets into the source text
  std::size_t end = 0;
};

namespace detail {

inline const icu::Normalizer2& nfd() {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* n = icu::Normalizer2::getNFDInstance(status);
  if (U_FAILURE(status) || !n) throw Error(ErrorCode::internal, "ICU NFD normalizer unavailable");
  return *n;
}

// Folds a single code point; returns an empty string for separators.
inline std::string fold_code_point(UChar32 cp, bool& is_word) {
  is_word = false;
  icu::UnicodeString decomposed;
  UErrorCode status = U_ZERO_ERROR;
  nfd().normalize(icu::UnicodeString(cp), decomposed, status);
  if (U_FAILURE(status)) decomposed = icu::UnicodeString(cp);
  icu::UnicodeString kept;
  for (int32_t i = 0; i < decomposed.length();) {
    UChar32 c = decomposed.char32At(i);
    i += U16_LENGTH(c);
    if (u_getCombiningClass(c) != 0 || u_charType(c) == U_NON_SPACING_MARK) continue;
    if (!u_isalnum(c)) return {};
    kept.append(c);
  }
  if (kept.isEmpty()) {
    // A bare combining mark belongs to the preceding word.
    is_word = u_getCombiningClass(cp) != 0 || u_charType(cp) == U_NON_SPACING_MARK;
    return {};
  }
  kept.foldCase();
  std::string out;
  kept.toUTF8String(out);
  is_word = true;
  return out;
}

}  // namespace detail

inline std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  Token cur;
  bool open = false;
  const auto* s = reinterpret_cast<const uint8_t*>(text.data());
  int32_t len = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < len) {
    int32_t start = i;
    UChar32 cp;
    U8_NEXT(s, i, len, cp);
    bool is_word = false;
    std::string folded = cp < 0 ? std::string() : detail::fold_code_point(cp, is_word);
    if (is_word && (open || !folded.empty())) {
      if (!open) {
        cur = Token{{}, static_cast<std::size_t>(start), 0};
        open = true;
      }
      cur.folded += folded;
      cur.end = static_cast<std::size_t>(i);
    } else if (open) {
      tokens.push_back(std::move(cur));
      open = false;
    }
  }
  if (open) tokens.push_back(std::move(cur));
  return tokens;
}

// Normalized key: folded tokens joined by single spaces.
inline std::string normalize_key(std::string_view text) {
  std::string out;
  for (const auto& t : tokenize(text)) {
    if (!out.empty()) out.push_back(' ');
    out += t.folded;
  }
  return out;
}

}  // namespace relrec
