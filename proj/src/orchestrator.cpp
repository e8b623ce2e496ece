#include "biosearch/orchestrator.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_set>

#include "biosearch/errors.hpp"
#include "biosearch/unicode.hpp"

namespace biosearch {

void RetrievalConfig::validate() const {
  if (r < 1) throw ConfigError("retrieval: r must be >= 1");
  if (reader_contexts < 1) throw ConfigError("retrieval: reader_contexts must be >= 1");
  bm25.validate();
  mdr.validate();
}

std::vector<double> Reranker::score_batch(std::string_view query,
                                          std::span<const std::string> passages) const {
  std::vector<double> out;
  out.reserve(passages.size());
  for (const auto& p : passages) out.push_back(score(query, p));
  return out;
}

namespace {

std::set<std::string> term_set(std::string_view text) {
  static const AnalyzerConfig cfg{};
  std::vector<std::string> terms = analyze(text, cfg);
  return {terms.begin(), terms.end()};
}

}  // namespace

double BaselineReranker::score(std::string_view query, std::string_view passage) const {
  const std::set<std::string> q = term_set(query);
  if (q.empty()) return 0.0;
  const std::set<std::string> p = term_set(passage);
  std::size_t shared = 0;
  for (const auto& t : q) shared += p.count(t);
  return static_cast<double>(shared) / static_cast<double>(q.size());
}

ReaderOutput BaselineExtractiveReader::read(std::string_view question,
                                            std::span<const std::string> contexts) const {
  static const AnalyzerConfig cfg{};
  const std::set<std::string> q = term_set(question);
  double max_score = 0.0;
  for (std::size_t d = 1; d <= kWindow; ++d) max_score += 2.0 / static_cast<double>(d);

  ReaderOutput best;
  double best_score = 0.0;
  std::size_t best_len = 0;
  for (std::size_t c = 0; c < contexts.size(); ++c) {
    const std::vector<TokenSpan> toks = tokenize_with_offsets(contexts[c]);
    const std::size_t n = toks.size();
    std::vector<char> in_q(n);
    for (std::size_t i = 0; i < n; ++i) in_q[i] = q.count(normalize(toks[i].token.term, cfg)) != 0;

    for (std::size_t s = 0; s < n; ++s) {
      for (std::size_t e = s; e < n && e - s < kMaxSpan; ++e) {
        double score = 0.0;
        for (std::size_t d = 1; d <= kWindow && d <= s; ++d) {
          if (in_q[s - d]) score += 1.0 / static_cast<double>(d);
        }
        for (std::size_t d = 1; d <= kWindow && e + d < n; ++d) {
          if (in_q[e + d]) score += 1.0 / static_cast<double>(d);
        }
        for (std::size_t i = s; i <= e; ++i) score -= in_q[i] ? 1.0 : 0.0;
        const std::size_t len = e - s + 1;
        // Contexts and starts are visited in order, so only a strictly better
        // score, or an equal score with a shorter span in the same context,
        // replaces the incumbent.
        const bool better =
            score > best_score ||
            (best.span && score == best_score && c == best.span->context && len < best_len);
        if (!better) continue;
        best_score = score;
        best_len = len;
        best.span = ReaderSpan{c, toks[s].begin, toks[e].end};
      }
    }
  }
  if (!best.span || best_score <= 0.0) return {};
  best.answer = contexts[best.span->context].substr(best.span->begin,
                                                    best.span->end - best.span->begin);
  best.confidence = std::clamp(best_score / max_score, 0.0, 1.0);
  return best;
}

std::string_view to_string(QueryKind k) noexcept {
  return k == QueryKind::Question ? "question" : "phrase_or_keywords";
}

QueryKind classify_query(std::string_view raw) {
  static const std::set<std::string> interrogatives = {
      "how", "what", "which", "where", "when", "who", "why", "is", "are", "can", "does", "do"};
  const std::string text = clean_text(raw);
  if (!text.empty() && text.back() == '?') return QueryKind::Question;
  const std::vector<Token> tokens = tokenize(text);
  if (!tokens.empty() && interrogatives.count(unicode::to_lower(tokens.front().term)) != 0) {
    return QueryKind::Question;
  }
  return QueryKind::PhraseOrKeywords;
}

UnitCatalog::UnitCatalog(std::vector<Paragraph> paragraphs, std::vector<Passage> passages)
    : paragraphs_(std::move(paragraphs)), passages_(std::move(passages)) {
  std::map<std::string, std::vector<std::size_t>> by_doc;
  for (std::size_t i = 0; i < paragraphs_.size(); ++i) {
    if (!paragraph_by_id_.emplace(paragraphs_[i].para_id, i).second) {
      throw DuplicateError("duplicate paragraph id '" + paragraphs_[i].para_id + "'");
    }
    by_doc[paragraphs_[i].doc_id].push_back(i);
  }
  for (auto& [doc, list] : by_doc) {
    std::stable_sort(list.begin(), list.end(), [&](std::size_t a, std::size_t b) {
      return paragraphs_[a].token_offset < paragraphs_[b].token_offset;
    });
  }
  for (std::size_t i = 0; i < passages_.size(); ++i) {
    const Passage& p = passages_[i];
    if (!passage_by_id_.emplace(p.passage_id, i).second) {
      throw DuplicateError("duplicate passage id '" + p.passage_id + "'");
    }
    passage_text_.emplace(p.passage_id, p.text);
    auto it = by_doc.find(p.doc_id);
    if (it == by_doc.end()) continue;
    const std::vector<std::size_t>& list = it->second;
    // Last paragraph starting at or before the passage's first token.
    std::size_t chosen = list.front();
    for (std::size_t idx : list) {
      if (paragraphs_[idx].token_offset <= p.token_start) chosen = idx;
    }
    passage_to_paragraph_.emplace(p.passage_id, chosen);
  }
}

const Paragraph* UnitCatalog::paragraph(std::string_view para_id) const {
  auto it = paragraph_by_id_.find(std::string(para_id));
  return it == paragraph_by_id_.end() ? nullptr : &paragraphs_[it->second];
}

const Passage* UnitCatalog::passage(std::string_view passage_id) const {
  auto it = passage_by_id_.find(std::string(passage_id));
  return it == passage_by_id_.end() ? nullptr : &passages_[it->second];
}

const Paragraph* UnitCatalog::paragraph_of_passage(std::string_view passage_id) const {
  auto it = passage_to_paragraph_.find(std::string(passage_id));
  return it == passage_to_paragraph_.end() ? nullptr : &paragraphs_[it->second];
}

namespace {

std::vector<std::string> terms_of(std::span<const Token> tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.term);
  return out;
}

std::vector<ScoredHit> phrase_hits(const QueryAst& query, const LexicalIndex& index,
                                   std::size_t k, const Bm25Params& params) {
  if (query.phrases.empty()) {
    return index.phrase_search(terms_of(query.sequence), k, params);
  }
  std::map<std::uint32_t, double> summed;
  for (const auto& phrase : query.phrases) {
    for (const auto& [unit, s] : index.phrase_matches(terms_of(phrase), params)) summed[unit] += s;
  }
  std::vector<ScoredHit> hits;
  hits.reserve(summed.size());
  for (const auto& [unit, s] : summed) hits.push_back({index.unit_id(unit), s, Mechanism::Phrase});
  std::sort(hits.begin(), hits.end(), [](const ScoredHit& a, const ScoredHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.unit_id < b.unit_id;
  });
  if (hits.size() > k) hits.resize(k);
  return hits;
}

std::vector<ScoredHit> semantic_hits(const QueryAst& query, const RetrievalConfig& cfg,
                                     const RetrievalSources& sources, std::size_t k) {
  if (!cfg.semantic_enabled || sources.dense == nullptr || sources.encoder == nullptr ||
      sources.catalog == nullptr) {
    return {};
  }
  const std::vector<HopChain> chains = multi_hop_retrieve(
      query.raw, *sources.encoder, *sources.dense, sources.catalog->passage_text(), cfg.mdr);
  std::vector<ScoredHit> hits;
  std::unordered_set<std::string> seen;
  for (const auto& chain : chains) {
    for (const auto& pid : chain.passages) {
      const Paragraph* para = sources.catalog->paragraph_of_passage(pid);
      if (para == nullptr || !seen.insert(para->para_id).second) continue;
      hits.push_back({para->para_id, chain.combined_score, Mechanism::Semantic});
      if (hits.size() >= k) return hits;
    }
  }
  return hits;
}

}  // namespace

std::vector<RankedResult> fill_results(const QueryAst& query, const RetrievalConfig& cfg,
                                       const RetrievalSources& sources) {
  cfg.validate();
  if (sources.lexical == nullptr) throw ConfigError("retrieval: no lexical index loaded");
  const LexicalIndex& index = *sources.lexical;
  const std::size_t k = cfg.fetch_k();

  std::vector<RankedResult> results;
  std::unordered_set<std::string> seen;
  auto append = [&](const std::vector<ScoredHit>& hits) {
    for (const auto& h : hits) {
      if (results.size() >= cfg.r) return;
      if (!seen.insert(h.unit_id).second) continue;
      RankedResult r;
      r.unit_id = h.unit_id;
      r.mechanism = h.mechanism;
      r.retrieval_score = h.score;
      if (sources.catalog != nullptr) {
        if (const Paragraph* p = sources.catalog->paragraph(h.unit_id)) r.text = p->text;
      }
      results.push_back(std::move(r));
    }
  };

  append(phrase_hits(query, index, k, cfg.bm25));
  if (results.size() < cfg.r) {
    const std::vector<Bigram> bigrams = extract_bigrams(query.sequence);
    append(index.bigram_search(bigrams, k, cfg.bm25));
  }
  if (results.size() < cfg.r) append(index.keyword_search(terms_of(query.sequence), k, cfg.bm25));
  if (results.size() < cfg.r) append(semantic_hits(query, cfg, sources, k));
  return results;
}

void rerank(std::vector<RankedResult>& results, std::string_view query, const Reranker& reranker) {
  std::vector<std::string> texts;
  texts.reserve(results.size());
  for (const auto& r : results) texts.push_back(r.text);
  const std::vector<double> scores = reranker.score_batch(query, texts);
  if (scores.size() != results.size()) {
    throw PluginError("reranker returned " + std::to_string(scores.size()) + " scores for " +
                      std::to_string(results.size()) + " passages");
  }
  for (std::size_t i = 0; i < results.size(); ++i) {
    results[i].rerank_score = std::clamp(scores[i], 0.0, 1.0);
  }
  std::stable_sort(results.begin(), results.end(), [](const RankedResult& a, const RankedResult& b) {
    return *a.rerank_score > *b.rerank_score;
  });
}

std::vector<RankedResult> retrieve_paragraphs(const QueryAst& query, const RetrievalConfig& cfg,
                                              const RetrievalSources& sources,
                                              const Reranker& reranker) {
  std::vector<RankedResult> results = fill_results(query, cfg, sources);
  rerank(results, query.raw, reranker);
  return results;
}

Answer answer_question(std::string_view question, const RetrievalConfig& cfg,
                       const RetrievalSources& sources, const Reranker& reranker,
                       const Reader& reader) {
  cfg.validate();
  Answer answer;
  if (sources.dense == nullptr || sources.encoder == nullptr || sources.catalog == nullptr) {
    return answer;
  }
  const std::vector<HopChain> chains = multi_hop_retrieve(
      question, *sources.encoder, *sources.dense, sources.catalog->passage_text(), cfg.mdr);
  if (chains.empty()) return answer;

  std::vector<std::string> ids;
  std::unordered_set<std::string> seen;
  for (const auto& chain : chains) {
    for (const auto& pid : chain.passages) {
      if (seen.insert(pid).second) ids.push_back(pid);
    }
  }
  std::vector<std::string> texts;
  for (const auto& id : ids) texts.push_back(sources.catalog->passage_text().at(id));
  const std::vector<double> scores = reranker.score_batch(question, texts);
  if (scores.size() != ids.size()) {
    throw PluginError("reranker returned " + std::to_string(scores.size()) + " scores for " +
                      std::to_string(ids.size()) + " passages");
  }
  std::vector<std::size_t> order(ids.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  for (std::size_t i : order) {
    answer.context_ids.push_back(ids[i]);
    answer.contexts.push_back(texts[i]);
  }

  // The reader sees the best reader_contexts passages; indices into that
  // prefix are indices into answer.contexts.
  const std::size_t shown = std::min(cfg.reader_contexts, answer.contexts.size());
  const ReaderOutput out =
      reader.read(question, std::span<const std::string>(answer.contexts.data(), shown));
  if (out.answer.empty() || !out.span || out.span->context >= shown) {
    return answer;
  }
  answer.text = out.answer;
  answer.span = out.span;
  answer.reader_confidence = std::clamp(out.confidence, 0.0, 1.0);
  const std::string& source = answer.context_ids[out.span->context];
  for (const auto& chain : chains) {
    if (std::find(chain.passages.begin(), chain.passages.end(), source) != chain.passages.end()) {
      answer.supporting_chain = chain;
      break;
    }
  }
  return answer;
}

}  // namespace biosearch
