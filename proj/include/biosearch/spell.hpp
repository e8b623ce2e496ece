#pragma once

#include <cstdint>
#include <iosfwd>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "biosearch/analysis.hpp"

namespace biosearch {

struct SpellConfig {
  int max_edit_distance = 2;

  /// Throws ConfigError unless max_edit_distance is 1 or 2.
  void validate() const;
};

/// Corpus unigram counts. Immutable after construction. The edit alphabet is
/// the set of code points occurring in the vocabulary.
class LanguageModel {
 public:
  LanguageModel() = default;
  /// Counts of zero are dropped; duplicate terms are summed.
  explicit LanguageModel(std::vector<std::pair<std::string, std::uint64_t>> counts);

  static LanguageModel from_terms(const std::vector<std::string>& terms);

  std::uint64_t count(std::string_view term) const;
  std::uint64_t count(const std::u32string& term) const;
  bool contains(std::string_view term) const { return count(term) > 0; }
  std::uint64_t total() const noexcept { return total_; }
  std::size_t size() const noexcept { return table_.size(); }

  /// Prior P(c) = count(c) / total.
  double probability(std::string_view term) const;

  /// Sorted (term, count) table.
  const std::vector<std::pair<std::string, std::uint64_t>>& table() const noexcept {
    return table_;
  }
  const std::u32string& alphabet() const noexcept { return alphabet_; }
  /// Code-point form of table()[i].first.
  const std::vector<std::u32string>& wide_terms() const noexcept { return wide_; }

  /// Tab-separated "term\tcount" lines sorted by term.
  void save(std::ostream& out) const;
  static LanguageModel load(std::istream& in);

 private:
  std::vector<std::pair<std::string, std::uint64_t>> table_;
  std::vector<std::u32string> wide_;
  std::unordered_map<std::u32string, std::uint64_t> lookup_;
  std::u32string alphabet_;
  std::uint64_t total_ = 0;
};

/// Every string one deletion, adjacent transposition, substitution or
/// insertion away from `w`, using `alphabet` for the latter two.
std::vector<std::u32string> edits1(const std::u32string& w, const std::u32string& alphabet);

/// In-vocabulary words reachable from `w` in at most cfg.max_edit_distance
/// edits (includes `w` itself when known).
std::set<std::string> candidates(std::string_view w, const LanguageModel& lm,
                                 const SpellConfig& cfg);

/// argmax of count(c) over the first non-empty tier: {w} if known, then
/// distance-1 words, then distance-2 words, else `w` unchanged. Ties go to
/// the lexicographically smallest candidate.
std::string correct(std::string_view w, const LanguageModel& lm, const SpellConfig& cfg);

struct CorrectedQuery {
  QueryAst ast;
  bool changed = false;
};

/// Corrects free terms (normalized with `analyzer` first); quoted phrase
/// tokens are left untouched. Terms whose correction equals their normalized
/// form keep their original spelling.
CorrectedQuery correct_query(const QueryAst& ast, const LanguageModel& lm,
                             const SpellConfig& cfg, const AnalyzerConfig& analyzer = {});

/// Rebuilds a query string from an AST, re-quoting phrases.
std::string render_query(const QueryAst& ast);

}  // namespace biosearch
