#include "humbr/textsim.hpp"

#include <algorithm>
#include <cstdint>

namespace humbr {
namespace {

bool is_unicode_space(char32_t cp) {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

char32_t fold_case(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
  if (cp < 0x80) return cp;
  // Latin-1
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
  // Latin Extended-A: mostly even upper / odd lower pairs.
  if (cp >= 0x0100 && cp <= 0x0137 && cp != 0x0130) return cp | 1u;
  if (cp >= 0x0139 && cp <= 0x0148) return (cp & 1u) ? cp + 1 : cp;
  if (cp >= 0x014A && cp <= 0x0177) return cp | 1u;
  if (cp == 0x0178) return 0xFF;
  if (cp >= 0x0179 && cp <= 0x017E) return (cp & 1u) ? cp + 1 : cp;
  // Greek
  if (cp >= 0x0391 && cp <= 0x03A9 && cp != 0x03A2) return cp + 0x20;
  // Cyrillic
  if (cp >= 0x0400 && cp <= 0x040F) return cp + 0x50;
  if (cp >= 0x0410 && cp <= 0x042F) return cp + 0x20;
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
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

// Decodes one code point starting at text[pos]. Returns the number of bytes
// consumed, or 0 if the sequence is malformed.
std::size_t decode_utf8(std::string_view text, std::size_t pos, char32_t& cp) {
  const auto lead = static_cast<unsigned char>(text[pos]);
  std::size_t len = 0;
  if (lead < 0x80) {
    cp = lead;
    return 1;
  } else if ((lead & 0xE0) == 0xC0) {
    len = 2;
    cp = lead & 0x1F;
  } else if ((lead & 0xF0) == 0xE0) {
    len = 3;
    cp = lead & 0x0F;
  } else if ((lead & 0xF8) == 0xF0) {
    len = 4;
    cp = lead & 0x07;
  } else {
    return 0;
  }
  if (pos + len > text.size()) return 0;
  for (std::size_t i = 1; i < len; ++i) {
    const auto cont = static_cast<unsigned char>(text[pos + i]);
    if ((cont & 0xC0) != 0x80) return 0;
    cp = (cp << 6) | (cont & 0x3F);
  }
  return len;
}

}  // namespace

TokenSequence tokenize(std::string_view text) {
  TokenSequence out;
  std::string current;
  std::size_t pos = 0;
  while (pos < text.size()) {
    char32_t cp = 0;
    const std::size_t len = decode_utf8(text, pos, cp);
    if (len == 0) {
      current.push_back(text[pos]);
      ++pos;
      continue;
    }
    pos += len;
    if (is_unicode_space(cp)) {
      if (!current.empty()) {
        out.tokens.push_back(std::move(current));
        current.clear();
      }
      continue;
    }
    append_utf8(current, fold_case(cp));
  }
  if (!current.empty()) out.tokens.push_back(std::move(current));
  return out;
}

std::size_t lcs_length(std::span<const std::string> a,
                       std::span<const std::string> b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1
                                    : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(const TokenSequence& a, const TokenSequence& b) {
  const std::size_t lcs = lcs_length(a.tokens, b.tokens);
  if (lcs == 0) return 0.0;
  // With P = LCS/|b| and R = LCS/|a|, 2PR/(P+R) = 2·LCS/(|a|+|b|); this form
  // is bit-for-bit symmetric in (a, b).
  return 2.0 * static_cast<double>(lcs) /
         static_cast<double>(a.size() + b.size());
}

}  // namespace humbr
