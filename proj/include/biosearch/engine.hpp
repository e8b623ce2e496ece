#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "biosearch/config.hpp"
#include "biosearch/index_store.hpp"

namespace biosearch {

struct SearchResponse {
  std::string query;
  std::optional<std::string> corrected_query;  // set when spelling changed the query
  QueryKind kind = QueryKind::PhraseOrKeywords;
  std::vector<RankedResult> results;
};

struct SpellResponse {
  std::string query;
  std::string corrected;
  bool changed = false;
};

struct TripletResult {
  Triplet triplet;
  double score = 0.0;
};

struct TripletResponse {
  std::vector<TripletResult> results;
  FacetCounts facet_counts;  // over every match, not only the returned page
  std::size_t total = 0;
};

struct QaResponse {
  QueryKind kind = QueryKind::PhraseOrKeywords;
  std::optional<Answer> answer;  // empty when QA was skipped
  std::string skipped_reason;
};

/// Query facade over one immutable index snapshot. Safe to share across
/// threads once constructed.
class Engine {
 public:
  /// Validates `cfg`, instantiates the plugins and checks that the configured
  /// encoder matches the one the snapshot was built with.
  Engine(EngineConfig cfg, std::shared_ptr<const IndexSnapshot> snapshot);

  /// Loads cfg.index_dir.
  static std::unique_ptr<Engine> open(const EngineConfig& cfg);

  const EngineConfig& config() const noexcept { return cfg_; }
  const IndexSnapshot& snapshot() const noexcept { return *snapshot_; }
  const IndexManifest& manifest() const noexcept { return snapshot_->manifest; }

  /// Throws EmptyQueryError.
  SearchResponse search(std::string_view query, std::optional<std::size_t> r = std::nullopt,
                        bool spell = false) const;
  SpellResponse spell(std::string_view query) const;
  TripletResponse triplets(std::string_view query, const FacetFilter& filter,
                           std::size_t k) const;
  QaResponse qa(std::string_view question) const;
  void export_graph(std::ostream& out) const;

  nlohmann::json stats() const;

 private:
  RetrievalSources sources() const;

  EngineConfig cfg_;
  std::shared_ptr<const IndexSnapshot> snapshot_;
  std::unique_ptr<Encoder> encoder_;
  std::unique_ptr<Reranker> reranker_;
  std::unique_ptr<Reader> reader_;
};

nlohmann::json to_json(const RankedResult& r);
nlohmann::json to_json(const SearchResponse& r);
nlohmann::json to_json(const SpellResponse& r);
nlohmann::json to_json(const TripletResult& r);
nlohmann::json to_json(const FacetCounts& counts);
nlohmann::json to_json(const TripletResponse& r);
nlohmann::json to_json(const HopChain& c);
nlohmann::json to_json(const Answer& a);
nlohmann::json to_json(const QaResponse& r);

}  // namespace biosearch
