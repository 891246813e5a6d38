#pragma once

// Small UTF-8 helpers shared by the parser, annotator and scorer.
//
// Offsets exposed to callers are code-point offsets. Case folding is simple
// one-to-one folding for ASCII, Latin-1, Latin Extended-A, Greek and Cyrillic;
// there is no locale dependence.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace rena::text {

inline constexpr char32_t kReplacementChar = 0xFFFD;

/// Decodes UTF-8; every invalid or truncated sequence yields one U+FFFD per
/// offending byte, so decoding is total over arbitrary bytes.
inline std::u32string decode_utf8(std::string_view in) {
  std::u32string out;
  out.reserve(in.size());
  const auto* s = reinterpret_cast<const unsigned char*>(in.data());
  const std::size_t n = in.size();
  std::size_t i = 0;
  while (i < n) {
    unsigned char c = s[i];
    if (c < 0x80) {
      out.push_back(c);
      ++i;
      continue;
    }
    int len = 0;
    char32_t cp = 0;
    char32_t min = 0;
    if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
      min = 0x80;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
      min = 0x800;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
      min = 0x10000;
    } else {
      out.push_back(kReplacementChar);
      ++i;
      continue;
    }
    if (i + static_cast<std::size_t>(len) > n) {
      out.push_back(kReplacementChar);
      ++i;
      continue;
    }
    bool ok = true;
    for (int k = 1; k < len; ++k) {
      unsigned char cc = s[i + static_cast<std::size_t>(k)];
      if ((cc & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (!ok || cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      out.push_back(kReplacementChar);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += static_cast<std::size_t>(len);
  }
  return out;
}

inline void append_utf8(std::string& out, char32_t cp) {
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

inline std::string encode_utf8(std::u32string_view in) {
  std::string out;
  out.reserve(in.size());
  for (char32_t cp : in) append_utf8(out, cp);
  return out;
}

inline std::size_t codepoint_length(std::string_view in) { return decode_utf8(in).size(); }

inline constexpr bool is_space(char32_t c) {
  switch (c) {
    case U' ': case U'\t': case U'\n': case U'\r': case U'\f': case U'\v':
    case 0x00A0: case 0x1680: case 0x2028: case 0x2029: case 0x202F:
    case 0x205F: case 0x3000: case 0xFEFF:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

inline constexpr char32_t fold(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 0x20;
  if (c < 0x80) return c;
  // Latin-1 uppercase, skipping the multiplication sign.
  if (c >= 0x00C0 && c <= 0x00DE && c != 0x00D7) return c + 0x20;
  // Latin Extended-A: even code points are uppercase in the paired ranges.
  if ((c >= 0x0100 && c <= 0x012F) || (c >= 0x0132 && c <= 0x0137) ||
      (c >= 0x014A && c <= 0x0177)) {
    return (c % 2 == 0) ? c + 1 : c;
  }
  if ((c >= 0x0139 && c <= 0x0148) || (c >= 0x0179 && c <= 0x017E)) {
    return (c % 2 == 1) ? c + 1 : c;
  }
  if (c == 0x0178) return 0x00FF;
  // Greek.
  if (c >= 0x0391 && c <= 0x03A9 && c != 0x03A2) return c + 0x20;
  if (c == 0x03C2) return 0x03C3;
  // Cyrillic.
  if (c >= 0x0410 && c <= 0x042F) return c + 0x20;
  if (c >= 0x0400 && c <= 0x040F) return c + 0x50;
  return c;
}

inline std::string casefold(std::string_view in) {
  std::string out;
  out.reserve(in.size());
  for (char32_t cp : decode_utf8(in)) append_utf8(out, fold(cp));
  return out;
}

inline std::string trim(std::string_view in) {
  auto cps = decode_utf8(in);
  std::size_t b = 0;
  std::size_t e = cps.size();
  while (b < e && is_space(cps[b])) ++b;
  while (e > b && is_space(cps[e - 1])) --e;
  return encode_utf8(std::u32string_view(cps).substr(b, e - b));
}

/// Trims and replaces every internal whitespace run with one ASCII space.
inline std::u32string collapse_whitespace(std::u32string_view in) {
  std::u32string out;
  out.reserve(in.size());
  bool pending = false;
  for (char32_t c : in) {
    if (is_space(c)) {
      pending = !out.empty();
      continue;
    }
    if (pending) out.push_back(U' ');
    pending = false;
    out.push_back(c);
  }
  return out;
}

inline std::string collapse_whitespace(std::string_view in) {
  return encode_utf8(collapse_whitespace(decode_utf8(in)));
}

/// casefold + trim + collapse internal whitespace.
inline std::string normalize_key(std::string_view in) {
  std::u32string cps = collapse_whitespace(decode_utf8(in));
  for (auto& c : cps) c = fold(c);
  return encode_utf8(cps);
}

/// Maps typographic double quotes to '"' and typographic single quotes to '\''.
inline std::string unify_quotes(std::string_view in) {
  std::string out;
  out.reserve(in.size());
  for (char32_t c : decode_utf8(in)) {
    switch (c) {
      case 0x201C: case 0x201D: case 0x201E: case 0x201F: case 0x2033:
      case 0x00AB: case 0x00BB: case 0xFF02:
        out.push_back('"');
        break;
      case 0x2018: case 0x2019: case 0x201A: case 0x201B: case 0x2032:
        out.push_back('\'');
        break;
      default:
        append_utf8(out, c);
    }
  }
  return out;
}

}  // namespace rena::text
