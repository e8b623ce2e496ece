#include "biosearch/analysis.hpp"

#include "biosearch/errors.hpp"
#include "biosearch/unicode.hpp"

namespace biosearch {

void AnalyzerConfig::validate() const {
  if (min_gram < 1 || min_gram > max_gram) {
    throw ConfigError("analyzer: require 1 <= min_gram <= max_gram (got " +
                      std::to_string(min_gram) + ", " + std::to_string(max_gram) + ")");
  }
}

std::vector<TokenSpan> tokenize_with_offsets(std::string_view text) {
  std::vector<TokenSpan> out;
  // (code point, byte offset) pairs of the current whitespace-delimited run
  std::vector<std::pair<char32_t, std::size_t>> run;

  auto flush = [&](std::size_t run_end) {
    if (run.empty()) return;
    std::size_t first = 0;
    std::size_t last = run.size();
    while (first < last && unicode::is_punct(run[first].first)) ++first;
    while (last > first && unicode::is_punct(run[last - 1].first)) --last;
    if (first < last) {
      const std::size_t begin = run[first].second;
      const std::size_t end = last < run.size() ? run[last].second : run_end;
      TokenSpan span;
      span.token.term = std::string(text.substr(begin, end - begin));
      span.token.position = static_cast<std::uint32_t>(out.size());
      span.begin = begin;
      span.end = end;
      out.push_back(std::move(span));
    }
    run.clear();
  };

  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t at = pos;
    const char32_t c = unicode::next_codepoint(text, pos);
    if (unicode::is_space(c)) {
      flush(at);
    } else {
      run.emplace_back(c, at);
    }
  }
  flush(text.size());
  return out;
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  for (auto& span : tokenize_with_offsets(text)) out.push_back(std::move(span.token));
  return out;
}

std::string normalize(std::string_view term, const AnalyzerConfig& cfg) {
  std::string out = unicode::to_nfc(term);
  if (cfg.lowercase) out = unicode::to_lower(out);
  if (cfg.ascii_fold) out = unicode::fold_to_ascii(out);
  return out;
}

std::vector<std::string> analyze(std::string_view text, const AnalyzerConfig& cfg) {
  std::vector<std::string> terms;
  for (auto& t : tokenize(text)) terms.push_back(normalize(t.term, cfg));
  return terms;
}

std::vector<std::string> edge_ngrams(std::string_view term, const AnalyzerConfig& cfg) {
  std::vector<std::string> grams;
  const std::size_t len = unicode::codepoint_count(term);
  const auto min_len = static_cast<std::size_t>(cfg.min_gram);
  const auto max_len = static_cast<std::size_t>(cfg.max_gram);
  std::size_t pos = unicode::prefix_bytes(term, min_len > 0 ? min_len - 1 : 0);
  for (std::size_t n = min_len; n <= max_len && n <= len; ++n) {
    unicode::next_codepoint(term, pos);
    grams.emplace_back(term.substr(0, pos));
  }
  if (len < min_len || len > max_len) grams.emplace_back(term);
  return grams;
}

std::vector<Bigram> extract_bigrams(std::span<const Token> tokens) {
  std::vector<Bigram> out;
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    out.emplace_back(tokens[i - 1].term, tokens[i].term);
  }
  return out;
}

namespace {

bool is_quote(char32_t c) { return c == U'"' || c == U'“' || c == U'”'; }

struct Segment {
  std::string_view text;
  bool quoted;
};

}  // namespace

QueryAst parse_query(std::string_view raw) {
  std::vector<std::pair<std::size_t, std::size_t>> quotes;  // byte begin, end
  for (std::size_t pos = 0; pos < raw.size();) {
    const std::size_t at = pos;
    if (is_quote(unicode::next_codepoint(raw, pos))) quotes.emplace_back(at, pos);
  }
  if (quotes.size() % 2 == 1) quotes.pop_back();  // unmatched: literal

  std::vector<Segment> segments;
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < quotes.size(); i += 2) {
    const auto [open_begin, open_end] = quotes[i];
    const auto [close_begin, close_end] = quotes[i + 1];
    segments.push_back({raw.substr(cursor, open_begin - cursor), false});
    segments.push_back({raw.substr(open_end, close_begin - open_end), true});
    cursor = close_end;
  }
  segments.push_back({raw.substr(cursor), false});

  QueryAst ast;
  ast.raw = std::string(raw);
  for (const auto& seg : segments) {
    std::vector<Token> tokens = tokenize(seg.text);
    for (auto& t : tokens) {
      t.position = static_cast<std::uint32_t>(ast.sequence.size());
      ast.sequence.push_back(t);
    }
    if (tokens.empty()) continue;
    if (seg.quoted) {
      ast.phrases.push_back(std::move(tokens));
    } else {
      for (auto& t : tokens) ast.free_terms.push_back(std::move(t));
    }
  }
  if (ast.sequence.empty()) throw EmptyQueryError();
  return ast;
}

}  // namespace biosearch
