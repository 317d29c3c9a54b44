#include "skillex/text.h"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "skillex/common.h"

namespace skillex::text {

namespace {

bool is_ascii(std::string_view s) {
  for (unsigned char c : s) {
    if (c >= 0x80) return false;
  }
  return true;
}

// NFKC + lowercase, returned as code points.
std::u32string fold_to_code_points(std::string_view text) {
  if (is_ascii(text)) {
    std::u32string out;
    out.reserve(text.size());
    for (unsigned char c : text) {
      out.push_back(c >= 'A' && c <= 'Z' ? c + ('a' - 'A') : c);
    }
    return out;
  }
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfkc = icu::Normalizer2::getNFKCInstance(status);
  if (U_FAILURE(status)) {
    throw Error(ErrorKind::kInvalidArgument, "ICU NFKC unavailable");
  }
  icu::UnicodeString source = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  icu::UnicodeString normalized = nfkc->normalize(source, status);
  if (U_FAILURE(status)) {
    throw Error(ErrorKind::kInvalidArgument, "NFKC normalization failed");
  }
  normalized.toLower(icu::Locale::getRoot());
  std::u32string out;
  out.reserve(static_cast<std::size_t>(normalized.length()));
  for (int32_t i = 0; i < normalized.length();) {
    const UChar32 c = normalized.char32At(i);
    out.push_back(static_cast<char32_t>(c));
    i += U16_LENGTH(c);
  }
  return out;
}

void append_utf8(std::string& out, char32_t c) {
  char buf[4];
  int32_t len = 0;
  UBool error = false;
  U8_APPEND(buf, len, 4, static_cast<UChar32>(c), error);
  if (error) {
    out += "\xEF\xBF\xBD";
  } else {
    out.append(buf, static_cast<std::size_t>(len));
  }
}

bool is_alnum(char32_t c) {
  if (c < 0x80) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
           (c >= '0' && c <= '9');
  }
  return u_isalnum(static_cast<UChar32>(c));
}

bool is_mark(char32_t c) {
  if (c < 0x80) return false;
  const auto mask = U_GET_GC_MASK(static_cast<UChar32>(c));
  return (mask & U_GC_M_MASK) != 0;
}

}  // namespace

std::u32string to_code_points(std::string_view utf8) {
  std::u32string out;
  out.reserve(utf8.size());
  const auto* s = reinterpret_cast<const uint8_t*>(utf8.data());
  const auto length = static_cast<int32_t>(utf8.size());
  for (int32_t i = 0; i < length;) {
    UChar32 c;
    U8_NEXT(s, i, length, c);
    out.push_back(c < 0 ? U'\uFFFD' : static_cast<char32_t>(c));
  }
  return out;
}

std::size_t code_point_length(std::string_view utf8) {
  return to_code_points(utf8).size();
}

std::string fold_case(std::string_view text) {
  std::string out;
  for (char32_t c : fold_to_code_points(text)) append_utf8(out, c);
  return out;
}

std::vector<std::string> normalize(std::string_view text) {
  const std::u32string cps = fold_to_code_points(text);
  std::vector<std::string> tokens;
  std::string current;
  // Kind of the last code point appended to `current`.
  enum class Last { kNone, kAlnum, kJoiner } last = Last::kNone;

  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
    last = Last::kNone;
  };

  for (std::size_t i = 0; i < cps.size(); ++i) {
    const char32_t c = cps[i];
    if (is_alnum(c) || (is_mark(c) && !current.empty())) {
      append_utf8(current, c);
      last = Last::kAlnum;
    } else if (c == U'+' || c == U'#') {
      if (last != Last::kNone) {
        append_utf8(current, c);
        last = Last::kJoiner;
      } else {
        flush();
      }
    } else if (c == U'.') {
      const bool alnum_follows = i + 1 < cps.size() && is_alnum(cps[i + 1]);
      if (alnum_follows) {
        append_utf8(current, c);
        last = Last::kJoiner;
      } else {
        flush();
      }
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

std::string normalized_form(std::string_view text) {
  std::string out;
  for (const auto& token : normalize(text)) {
    if (!out.empty()) out += ' ';
    out += token;
  }
  return out;
}

}  // namespace skillex::text
