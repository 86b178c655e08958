#pragma once

// Lexical similarity between candidate texts.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace humbr {

struct TokenSequence {
  std::vector<std::string> tokens;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  bool operator==(const TokenSequence&) const = default;
};

/// Splits on Unicode whitespace and applies simple case folding (Latin,
/// Greek, Cyrillic). Punctuation stays attached to its word; no stemming.
/// Bytes that are not valid UTF-8 pass through unchanged.
TokenSequence tokenize(std::string_view text);

/// Length of the longest common subsequence, O(|a|·|b|) time, O(|b|) space.
std::size_t lcs_length(std::span<const std::string> a,
                       std::span<const std::string> b);

/// ROUGE-L F1: P = LCS/|b|, R = LCS/|a|, F = 2PR/(P+R). Zero when either side
/// is empty (including empty vs empty) or nothing is shared.
double rouge_l(const TokenSequence& a, const TokenSequence& b);

}  // namespace humbr
