#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace biosearch {

/// unit_id -> graded relevance (>= 0).
using QueryJudgments = std::map<std::string, int>;

struct Qrels {
  std::map<std::string, QueryJudgments> judgments;

  /// Empty judgments for an unknown query.
  const QueryJudgments& for_query(const std::string& query_id) const;
};

struct RunFile {
  std::map<std::string, std::vector<std::string>> rankings;
};

enum class Gain : std::uint8_t { Linear, Exponential };

Gain gain_from_string(std::string_view s);

/// Relevant (grade >= 1) units among the top k over k. Slots past the end of
/// the ranking count as non-relevant. Throws ConfigError when k == 0.
double precision_at_k(std::span<const std::string> ranking, const QueryJudgments& judgments,
                      std::size_t k);

/// DCG@k / IDCG@k with log2(rank + 1) discounts; 0 when IDCG is 0. Linear gain
/// uses the grade, exponential gain 2^grade - 1.
double ndcg_at_k(std::span<const std::string> ranking, const QueryJudgments& judgments,
                 std::size_t k, Gain gain = Gain::Linear);

/// Lowercase, drop punctuation and the articles a/an/the, collapse spaces.
std::string normalize_answer(std::string_view text);

int exact_match(std::string_view prediction, std::span<const std::string> golds);

/// Best token-level F1 against any gold.
double token_f1(std::string_view prediction, std::span<const std::string> golds);

/// "query_id [iteration] unit_id grade" lines. Throws ParseError on malformed
/// lines or a repeated (query, unit) pair.
Qrels parse_qrels(std::istream& in, const std::string& source = "qrels");
Qrels read_qrels(const std::string& path);

/// "query_id unit_id" (file order), "query_id unit_id rank", or the six-column
/// "query_id Q0 unit_id rank score tag" form. Throws ParseError on a repeated
/// unit within a query.
RunFile parse_run(std::istream& in, const std::string& source = "run");
RunFile read_run(const std::string& path);

/// query_id -> answers, from "query_id<TAB>answer" lines. Several lines may
/// share a query id (multiple gold answers).
using AnswerSet = std::map<std::string, std::vector<std::string>>;
AnswerSet parse_answers(std::istream& in, const std::string& source = "answers");
AnswerSet read_answers(const std::string& path);

struct RetrievalReport {
  std::vector<std::size_t> ks;
  std::vector<double> precision;  // parallel to ks
  std::vector<double> ndcg;
  std::size_t queries = 0;
};

/// Means over every query in the qrels; a query absent from the run scores 0.
RetrievalReport evaluate_run(const RunFile& run, const Qrels& qrels,
                             std::span<const std::size_t> ks, Gain gain = Gain::Linear);

struct QaReport {
  double exact_match = 0.0;
  double f1 = 0.0;
  std::size_t questions = 0;
};

/// Means over every question in `golds`; a missing prediction is "".
QaReport evaluate_answers(const AnswerSet& predictions, const AnswerSet& golds);

void write_retrieval_table(const RetrievalReport& report, std::ostream& out);
void write_qa_table(const QaReport& report, std::ostream& out);

inline constexpr std::size_t kDefaultCutoffs[] = {5, 10, 20};

}  // namespace biosearch
