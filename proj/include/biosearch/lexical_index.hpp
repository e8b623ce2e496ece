#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "biosearch/analysis.hpp"
#include "biosearch/corpus.hpp"

namespace biosearch {

enum class Mechanism : std::uint8_t { Phrase, Bigram, Keyword, Semantic };

std::string_view to_string(Mechanism m) noexcept;
Mechanism mechanism_from_string(std::string_view s);

/// Okapi BM25 free parameters.
struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;

  /// Throws ConfigError unless k1 >= 0 and 0 <= b <= 1.
  void validate() const;
};

struct ScoredHit {
  std::string unit_id;
  double score = 0.0;
  Mechanism mechanism = Mechanism::Keyword;
};

enum class IndexField : std::uint8_t { Exact, Ngram };

/// One unit of text to index (a paragraph, or one field of a triplet).
struct IndexedText {
  std::string id;
  std::string text;
};

inline constexpr std::size_t kAllHits = std::numeric_limits<std::size_t>::max();

/// Positional inverted index over text units. The exact field holds normalized
/// whole terms with positions; the n-gram field holds edge n-grams of every
/// term. Units are numbered in ascending id order so postings sorted by unit
/// number are also sorted by id. Immutable once built.
class LexicalIndex {
 public:
  struct ExactPostings {
    std::vector<std::uint32_t> units;
    std::vector<std::uint32_t> tfs;
    std::vector<std::uint32_t> pos_begin;  // units.size() + 1 offsets into positions
    std::vector<std::uint32_t> positions;

    std::span<const std::uint32_t> positions_of(std::size_t i) const {
      return {positions.data() + pos_begin[i], positions.data() + pos_begin[i + 1]};
    }
  };

  struct GramPostings {
    std::vector<std::uint32_t> units;
    std::vector<std::uint32_t> freqs;
  };

  LexicalIndex() = default;

  /// Throws DuplicateError on a repeated unit id, ConfigError on a bad analyzer.
  static LexicalIndex build(std::vector<IndexedText> units, const AnalyzerConfig& analyzer);
  static LexicalIndex build(std::span<const Paragraph> paragraphs,
                            const AnalyzerConfig& analyzer);

  const AnalyzerConfig& analyzer() const noexcept { return analyzer_; }
  std::size_t unit_count() const noexcept { return units_.size(); }
  double avgdl() const noexcept { return avgdl_; }
  const std::string& unit_id(std::uint32_t unit) const { return units_[unit].id; }
  std::uint32_t unit_length(std::uint32_t unit) const { return units_[unit].length; }
  std::optional<std::uint32_t> find_unit(std::string_view id) const;

  const ExactPostings* exact_postings(std::string_view term) const;
  const GramPostings* gram_postings(std::string_view gram) const;
  std::size_t document_frequency(std::string_view term, IndexField field) const;

  /// ln(1 + (N - df + 0.5) / (df + 0.5)).
  double idf(std::size_t df) const;

  /// Sum over `terms` (duplicates count) of the BM25 contribution in `unit_id`.
  /// Terms are normalized with the index analyzer. Throws NotFoundError.
  double bm25_score(std::span<const std::string> terms, std::string_view unit_id,
                    const Bm25Params& params, IndexField field = IndexField::Exact) const;

  /// Units containing `phrase` as consecutive tokens, scored by BM25 over the
  /// phrase terms. Sorted by (score desc, unit id asc), at most k.
  std::vector<ScoredHit> phrase_search(std::span<const std::string> phrase, std::size_t k,
                                       const Bm25Params& params) const;

  /// Each bigram is matched as a two-token phrase; scores of matched bigrams
  /// are summed per unit.
  std::vector<ScoredHit> bigram_search(std::span<const Bigram> bigrams, std::size_t k,
                                       const Bm25Params& params) const;

  /// Whole query terms matched against the n-gram field; BM25 on that field.
  std::vector<ScoredHit> keyword_search(std::span<const std::string> terms, std::size_t k,
                                        const Bm25Params& params) const;

  /// Unsorted (unit, phrase BM25) pairs for every unit containing the phrase.
  std::vector<std::pair<std::uint32_t, double>> phrase_matches(
      std::span<const std::string> phrase, const Bm25Params& params) const;

  /// Unsorted (unit, BM25) pairs for every unit scoring > 0 on `field`.
  std::vector<std::pair<std::uint32_t, double>> score_all(std::span<const std::string> terms,
                                                          IndexField field,
                                                          const Bm25Params& params) const;

  /// Collection frequency of every exact term, sorted by term.
  std::vector<std::pair<std::string, std::uint64_t>> term_counts() const;

  void save(std::ostream& out) const;
  /// Throws FormatError on a bad magic number or format version.
  static LexicalIndex load(std::istream& in);

  static constexpr std::uint32_t kFormatVersion = 1;

 private:
  struct Unit {
    std::string id;
    std::uint32_t length = 0;
  };

  void finalize_stats();
  double term_weight(std::uint32_t tf, std::uint32_t unit, const Bm25Params& params) const;
  std::vector<ScoredHit> top_k(std::vector<std::pair<std::uint32_t, double>> scored,
                               std::size_t k, Mechanism mechanism) const;
  std::vector<std::string> normalized(std::span<const std::string> terms) const;

  AnalyzerConfig analyzer_;
  std::vector<Unit> units_;
  std::unordered_map<std::string, std::uint32_t> unit_lookup_;
  std::unordered_map<std::string, ExactPostings> exact_;
  std::unordered_map<std::string, GramPostings> grams_;
  double avgdl_ = 0.0;
};

}  // namespace biosearch
