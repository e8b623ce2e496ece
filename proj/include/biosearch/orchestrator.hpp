#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "biosearch/analysis.hpp"
#include "biosearch/corpus.hpp"
#include "biosearch/dense.hpp"
#include "biosearch/lexical_index.hpp"

namespace biosearch {

struct RetrievalConfig {
  std::size_t r = 20;
  std::size_t per_mechanism_k = 0;  // 0 means r
  bool qa_enabled = true;
  bool semantic_enabled = true;
  std::size_t reader_contexts = 10;  // top re-ranked passages handed to the reader
  Bm25Params bm25;
  MdrConfig mdr;

  /// Throws ConfigError.
  void validate() const;
  std::size_t fetch_k() const noexcept { return per_mechanism_k == 0 ? r : per_mechanism_k; }
};

struct RankedResult {
  std::string unit_id;
  std::string text;
  Mechanism mechanism = Mechanism::Phrase;
  double retrieval_score = 0.0;
  std::optional<double> rerank_score;
};

class Reranker {
 public:
  virtual ~Reranker() = default;
  virtual std::string identifier() const = 0;
  /// Relevance in [0, 1].
  virtual double score(std::string_view query, std::string_view passage) const = 0;
  /// Default loops over score(); remote rerankers batch.
  virtual std::vector<double> score_batch(std::string_view query,
                                          std::span<const std::string> passages) const;
};

/// Fraction of distinct normalized query terms present in the passage.
class BaselineReranker final : public Reranker {
 public:
  std::string identifier() const override { return "baseline"; }
  double score(std::string_view query, std::string_view passage) const override;
};

struct ReaderSpan {
  std::size_t context = 0;
  std::size_t begin = 0;  // byte offsets into the context
  std::size_t end = 0;

  bool operator==(const ReaderSpan&) const = default;
};

struct ReaderOutput {
  std::string answer;
  std::optional<ReaderSpan> span;
  double confidence = 0.0;
};

class Reader {
 public:
  virtual ~Reader() = default;
  virtual std::string identifier() const = 0;
  virtual ReaderOutput read(std::string_view question,
                            std::span<const std::string> contexts) const = 0;
};

/// Scores every span of 1..kMaxSpan tokens by the question terms around it:
/// a question term d tokens outside the span adds 1/d (d <= kWindow on each
/// side) and each question term inside the span subtracts 1. Best score wins,
/// then the earlier context, the shorter span and the earlier start.
/// Confidence is the score over its maximum, 2 * H(kWindow). A best score
/// <= 0 yields an empty answer.
class BaselineExtractiveReader final : public Reader {
 public:
  std::string identifier() const override { return "baseline-extractive"; }
  ReaderOutput read(std::string_view question,
                    std::span<const std::string> contexts) const override;

  static constexpr std::size_t kMaxSpan = 8;
  static constexpr std::size_t kWindow = 4;
};

enum class QueryKind : std::uint8_t { Question, PhraseOrKeywords };

std::string_view to_string(QueryKind k) noexcept;

/// A question ends with '?' or starts with an interrogative word.
QueryKind classify_query(std::string_view raw);

/// Paragraphs and passages with the lookups retrieval needs.
class UnitCatalog {
 public:
  UnitCatalog() = default;
  UnitCatalog(std::vector<Paragraph> paragraphs, std::vector<Passage> passages);

  const std::vector<Paragraph>& paragraphs() const noexcept { return paragraphs_; }
  const std::vector<Passage>& passages() const noexcept { return passages_; }
  const PassageTextLookup& passage_text() const noexcept { return passage_text_; }

  const Paragraph* paragraph(std::string_view para_id) const;
  const Passage* passage(std::string_view passage_id) const;
  /// The paragraph of the same document containing the passage's first token.
  const Paragraph* paragraph_of_passage(std::string_view passage_id) const;

 private:
  std::vector<Paragraph> paragraphs_;
  std::vector<Passage> passages_;
  std::unordered_map<std::string, std::size_t> paragraph_by_id_;
  std::unordered_map<std::string, std::size_t> passage_by_id_;
  std::unordered_map<std::string, std::size_t> passage_to_paragraph_;
  PassageTextLookup passage_text_;
};

struct RetrievalSources {
  const LexicalIndex* lexical = nullptr;
  const UnitCatalog* catalog = nullptr;
  const DenseIndex* dense = nullptr;  // semantic mechanism and QA need both
  const Encoder* encoder = nullptr;
};

/// Runs phrase, bigram, keyword and semantic retrieval in that order and
/// appends unseen paragraphs until r are collected. Without quoted phrases
/// the whole query is tried as one phrase. No re-ranking.
std::vector<RankedResult> fill_results(const QueryAst& query, const RetrievalConfig& cfg,
                                       const RetrievalSources& sources);

/// Stable sort by reranker score, descending.
void rerank(std::vector<RankedResult>& results, std::string_view query, const Reranker& reranker);

std::vector<RankedResult> retrieve_paragraphs(const QueryAst& query, const RetrievalConfig& cfg,
                                              const RetrievalSources& sources,
                                              const Reranker& reranker);

struct Answer {
  std::string text;
  HopChain supporting_chain;
  double reader_confidence = 0.0;
  std::vector<std::string> context_ids;  // re-ranked order
  std::vector<std::string> contexts;
  std::optional<ReaderSpan> span;
};

/// Multi-hop retrieval, re-ranking of the chain passages and extraction.
/// No chains, or no answer from the reader, gives an empty answer with zero
/// confidence and an empty supporting chain.
Answer answer_question(std::string_view question, const RetrievalConfig& cfg,
                       const RetrievalSources& sources, const Reranker& reranker,
                       const Reader& reader);

}  // namespace biosearch
