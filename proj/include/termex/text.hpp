#ifndef TERMEX_TEXT_HPP
#define TERMEX_TEXT_HPP

// Minimal UTF-8 handling for Russian/Latin scientific text: codepoint
// iteration, character classes and case folding. All offsets are byte
// offsets into the original string.

#include <cstdint>
#include <fstream>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace termex {

struct Codepoint {
  char32_t value = 0;
  std::size_t byte_pos = 0;
  std::size_t byte_len = 0;
};

// Permissive decoder: malformed bytes come back as single-byte codepoints
// so that offsets always partition the input.
inline std::vector<Codepoint> decode_utf8(std::string_view s) {
  std::vector<Codepoint> out;
  out.reserve(s.size());
  std::size_t i = 0;
  const std::size_t n = s.size();
  auto cont = [&](std::size_t k) {
    return k < n && (static_cast<unsigned char>(s[k]) & 0xC0) == 0x80;
  };
  while (i < n) {
    const unsigned char b = static_cast<unsigned char>(s[i]);
    char32_t cp = b;
    std::size_t len = 1;
    if (b >= 0xC2 && b <= 0xDF && cont(i + 1)) {
      cp = ((b & 0x1Fu) << 6) | (static_cast<unsigned char>(s[i + 1]) & 0x3Fu);
      len = 2;
    } else if (b >= 0xE0 && b <= 0xEF && cont(i + 1) && cont(i + 2)) {
      cp = ((b & 0x0Fu) << 12) |
           ((static_cast<unsigned char>(s[i + 1]) & 0x3Fu) << 6) |
           (static_cast<unsigned char>(s[i + 2]) & 0x3Fu);
      len = 3;
    } else if (b >= 0xF0 && b <= 0xF4 && cont(i + 1) && cont(i + 2) && cont(i + 3)) {
      cp = ((b & 0x07u) << 18) |
           ((static_cast<unsigned char>(s[i + 1]) & 0x3Fu) << 12) |
           ((static_cast<unsigned char>(s[i + 2]) & 0x3Fu) << 6) |
           (static_cast<unsigned char>(s[i + 3]) & 0x3Fu);
      len = 4;
    }
    out.push_back({cp, i, len});
    i += len;
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

inline bool is_ascii_digit(char32_t c) { return c >= U'0' && c <= U'9'; }

inline bool is_letter(char32_t c) {
  if ((c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z')) return true;
  if (c >= 0x0400 && c <= 0x04FF)                 // Cyrillic block
    return !(c >= 0x0482 && c <= 0x0489);         // signs and combining marks
  if (c >= 0x00C0 && c <= 0x024F)                 // Latin-1 Sup. + Extended-A/B
    return c != 0x00D7 && c != 0x00F7;
  return false;
}

inline bool is_upper(char32_t c) {
  if (c >= U'A' && c <= U'Z') return true;
  if (c >= 0x0410 && c <= 0x042F) return true;    // А..Я
  if (c >= 0x0400 && c <= 0x040F) return true;    // Ѐ..Џ (includes Ё)
  if (c >= 0x00C0 && c <= 0x00DE && c != 0x00D7) return true;
  return false;
}

inline bool is_word_char(char32_t c) { return is_letter(c) || is_ascii_digit(c); }

inline bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' ||
         c == U'\v' || c == 0x00A0 || c == 0x2028 || c == 0x2029;
}

inline char32_t fold_case(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 0x20;
  if (c >= 0x0410 && c <= 0x042F) return c + 0x20;  // А..Я -> а..я
  if (c >= 0x0400 && c <= 0x040F) return c + 0x50;  // Ѐ..Џ -> ѐ..џ (Ё -> ё)
  if (c >= 0x00C0 && c <= 0x00DE && c != 0x00D7) return c + 0x20;
  return c;
}

inline std::string fold_case(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (const Codepoint& cp : decode_utf8(s)) append_utf8(out, fold_case(cp.value));
  return out;
}

inline std::size_t codepoint_count(std::string_view s) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size();) {
    const unsigned char b = static_cast<unsigned char>(s[i]);
    if (b < 0x80 || b >= 0xC0) ++n;
    ++i;
  }
  // continuation-byte-only strings still count bytes
  return n == 0 ? s.size() : n;
}

// First / last n codepoints of s (whole string if shorter).
inline std::string prefix_codepoints(std::string_view s, std::size_t n) {
  const auto cps = decode_utf8(s);
  if (n >= cps.size()) return std::string(s);
  const auto& c = cps[n];
  return std::string(s.substr(0, c.byte_pos));
}

inline std::string suffix_codepoints(std::string_view s, std::size_t n) {
  const auto cps = decode_utf8(s);
  if (n >= cps.size()) return std::string(s);
  const auto& c = cps[cps.size() - n];
  return std::string(s.substr(c.byte_pos));
}

inline std::string strip(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '\n')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '\n')) --e;
  return std::string(s.substr(b, e - b));
}

// One entry per line, UTF-8; blank lines skipped. Used for stopword,
// verb-lexicon and abbreviation files.
inline std::vector<std::string> read_line_list(std::istream& in) {
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    std::string t = strip(line);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

}  // namespace termex

#endif  // TERMEX_TEXT_HPP
