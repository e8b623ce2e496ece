#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace biosearch {

/// Settings for the edge n-gram analyzer shared by all lexical indexes.
struct AnalyzerConfig {
  int min_gram = 4;
  int max_gram = 30;
  bool lowercase = true;
  bool ascii_fold = true;

  /// Throws ConfigError unless 1 <= min_gram <= max_gram.
  void validate() const;

  bool operator==(const AnalyzerConfig&) const = default;
};

struct Token {
  std::string term;
  std::uint32_t position = 0;

  bool operator==(const Token&) const = default;
};

/// A token together with its byte range in the source text.
struct TokenSpan {
  Token token;
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Whitespace tokenizer. Leading and trailing punctuation is stripped;
/// hyphens and slashes inside a word are kept ("Real-time" stays whole).
std::vector<Token> tokenize(std::string_view text);
std::vector<TokenSpan> tokenize_with_offsets(std::string_view text);

/// Lowercases and folds diacritics per `cfg`.
std::string normalize(std::string_view term, const AnalyzerConfig& cfg);

/// tokenize + normalize; returns the normalized terms in order.
std::vector<std::string> analyze(std::string_view text, const AnalyzerConfig& cfg);

/// Prefixes of `term` with code-point lengths min_gram..min(max_gram, len),
/// followed by the full term when it falls outside that range. Output is
/// sorted by increasing length and free of duplicates.
std::vector<std::string> edge_ngrams(std::string_view term, const AnalyzerConfig& cfg);

using Bigram = std::pair<std::string, std::string>;

std::vector<Bigram> extract_bigrams(std::span<const Token> tokens);

struct QueryAst {
  std::vector<std::vector<Token>> phrases;  // one entry per quoted span
  std::vector<Token> free_terms;
  std::vector<Token> sequence;  // every token in query order; position = index
  std::string raw;
};

/// Splits a query into quoted phrases and free terms. Quotes pair left to
/// right; an unmatched trailing quote is an ordinary character. Both ASCII
/// and typographic double quotes are recognised. Throws EmptyQueryError when
/// the query holds no tokens.
QueryAst parse_query(std::string_view raw);

}  // namespace biosearch
