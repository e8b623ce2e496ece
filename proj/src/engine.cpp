#include "biosearch/engine.hpp"

#include <ostream>

#include "biosearch/errors.hpp"
#include "biosearch/graph_export.hpp"

namespace biosearch {

using nlohmann::json;

Engine::Engine(EngineConfig cfg, std::shared_ptr<const IndexSnapshot> snapshot)
    : cfg_(std::move(cfg)), snapshot_(std::move(snapshot)) {
  cfg_.validate();
  if (!snapshot_) throw ConfigError("engine: no index snapshot");
  encoder_ = make_encoder(cfg_.plugins);
  reranker_ = make_reranker(cfg_.plugins);
  reader_ = make_reader(cfg_.plugins);
  if (encoder_->identifier() != snapshot_->manifest.encoder_id) {
    throw ConfigError("index was built with encoder '" + snapshot_->manifest.encoder_id +
                      "' but the configured encoder is '" + encoder_->identifier() + "'");
  }
}

std::unique_ptr<Engine> Engine::open(const EngineConfig& cfg) {
  cfg.validate();
  const std::string encoder_id = make_encoder(cfg.plugins)->identifier();
  return std::make_unique<Engine>(cfg, load_index(cfg.index_dir, cfg, encoder_id));
}

RetrievalSources Engine::sources() const {
  return {&snapshot_->lexical, &snapshot_->catalog, &snapshot_->dense, encoder_.get()};
}

SearchResponse Engine::search(std::string_view query, std::optional<std::size_t> r,
                              bool spell) const {
  SearchResponse resp;
  resp.query = std::string(query);
  QueryAst ast = parse_query(query);
  if (spell) {
    CorrectedQuery corrected =
        correct_query(ast, snapshot_->language_model, cfg_.spell, snapshot_->manifest.analyzer);
    if (corrected.changed) {
      resp.corrected_query = corrected.ast.raw;
      ast = std::move(corrected.ast);
    }
  }
  resp.kind = classify_query(query);
  RetrievalConfig rc = cfg_.retrieval;
  if (r) rc.r = *r;
  resp.results = retrieve_paragraphs(ast, rc, sources(), *reranker_);
  return resp;
}

SpellResponse Engine::spell(std::string_view query) const {
  SpellResponse resp;
  resp.query = std::string(query);
  const CorrectedQuery corrected = correct_query(parse_query(query), snapshot_->language_model,
                                                 cfg_.spell, snapshot_->manifest.analyzer);
  resp.changed = corrected.changed;
  resp.corrected = corrected.changed ? corrected.ast.raw : resp.query;
  return resp;
}

TripletResponse Engine::triplets(std::string_view query, const FacetFilter& filter,
                                 std::size_t k) const {
  const QueryAst ast = parse_query(query);
  const std::vector<TripletHit> hits =
      snapshot_->triplets.search(ast, filter, kAllHits, cfg_.retrieval.bm25);
  TripletResponse resp;
  resp.total = hits.size();
  std::vector<Triplet> matched;
  matched.reserve(hits.size());
  for (const auto& h : hits) matched.push_back(snapshot_->triplets.triplets()[h.index]);
  resp.facet_counts = facet_counts(matched);
  for (std::size_t i = 0; i < hits.size() && i < k; ++i) {
    resp.results.push_back({std::move(matched[i]), hits[i].score});
  }
  return resp;
}

QaResponse Engine::qa(std::string_view question) const {
  QaResponse resp;
  resp.kind = classify_query(question);
  if (resp.kind != QueryKind::Question) {
    resp.skipped_reason = "query is not a question";
    return resp;
  }
  if (!cfg_.retrieval.qa_enabled) {
    resp.skipped_reason = "question answering is disabled";
    return resp;
  }
  if (clean_text(question).empty()) throw EmptyQueryError();
  resp.answer = answer_question(question, cfg_.retrieval, sources(), *reranker_, *reader_);
  return resp;
}

void Engine::export_graph(std::ostream& out) const {
  biosearch::export_graph(snapshot_->triplets.triplets(), GraphFormat::JsonLines, out);
}

json Engine::stats() const {
  const IndexManifest& m = manifest();
  return {{"documents", m.documents},   {"paragraphs", m.paragraphs},
          {"passages", m.passages},     {"triplets", m.triplets},
          {"vocabulary", m.vocabulary}, {"encoder", m.encoder_id},
          {"format_version", m.format_version}};
}

json to_json(const RankedResult& r) {
  json j = {{"unit_id", r.unit_id},
            {"text", r.text},
            {"mechanism", std::string(to_string(r.mechanism))},
            {"retrieval_score", r.retrieval_score}};
  j["rerank_score"] = r.rerank_score ? json(*r.rerank_score) : json(nullptr);
  return j;
}

json to_json(const SearchResponse& r) {
  json results = json::array();
  for (std::size_t i = 0; i < r.results.size(); ++i) {
    json item = to_json(r.results[i]);
    item["rank"] = i + 1;
    results.push_back(std::move(item));
  }
  json j = {{"query", r.query},
            {"kind", std::string(to_string(r.kind))},
            {"results", std::move(results)}};
  j["corrected_query"] = r.corrected_query ? json(*r.corrected_query) : json(nullptr);
  return j;
}

json to_json(const SpellResponse& r) {
  return {{"query", r.query}, {"corrected", r.corrected}, {"changed", r.changed}};
}

json to_json(const TripletResult& r) {
  json j = to_json(r.triplet);
  j["score"] = r.score;
  json facets = json::object();
  for (FacetField f : kFacetFields) facets[std::string(to_string(f))] = facet_value(r.triplet, f);
  j["facets"] = std::move(facets);
  return j;
}

json to_json(const FacetCounts& counts) {
  json j = json::object();
  for (const auto& [field, values] : counts) {
    json v = json::object();
    for (const auto& [value, n] : values) v[value] = n;
    j[std::string(to_string(field))] = std::move(v);
  }
  return j;
}

json to_json(const TripletResponse& r) {
  json results = json::array();
  for (const auto& t : r.results) results.push_back(to_json(t));
  return {{"results", std::move(results)},
          {"facet_counts", to_json(r.facet_counts)},
          {"total", r.total}};
}

json to_json(const HopChain& c) {
  return {{"passages", c.passages},
          {"hop_scores", c.hop_scores},
          {"combined_score", c.combined_score}};
}

json to_json(const Answer& a) {
  json contexts = json::array();
  for (std::size_t i = 0; i < a.contexts.size(); ++i) {
    contexts.push_back({{"passage_id", a.context_ids[i]}, {"text", a.contexts[i]}});
  }
  json j = {{"answer", a.text},
            {"confidence", a.reader_confidence},
            {"supporting_chain", to_json(a.supporting_chain)},
            {"contexts", std::move(contexts)}};
  j["span"] = a.span ? json{{"context", a.span->context},
                            {"start", a.span->begin},
                            {"end", a.span->end}}
                     : json(nullptr);
  return j;
}

json to_json(const QaResponse& r) {
  json j = {{"kind", std::string(to_string(r.kind))}, {"attempted", r.answer.has_value()}};
  if (r.answer) {
    j["result"] = to_json(*r.answer);
  } else {
    j["result"] = nullptr;
    j["skipped_reason"] = r.skipped_reason;
  }
  return j;
}

}  // namespace biosearch
