#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "biosearch/corpus.hpp"

namespace biosearch {

struct Entity {
  std::string canonical_name;
  std::vector<std::string> aliases;  // always contains canonical_name
  std::string entity_type;
  std::string entity_subtype;
  std::string description;
  std::optional<std::string> ontology_id;

  bool operator==(const Entity&) const = default;
};

enum class TripletKind : std::uint8_t { Extracted, Metadata };

struct Provenance {
  std::string doc_id;
  std::string para_id;          // empty for document-level metadata
  std::optional<int> sentence;  // ordinal within the paragraph

  auto operator<=>(const Provenance&) const = default;
};

struct Triplet {
  std::string subject;
  std::string relation;
  std::string object;
  std::optional<Entity> subject_entity;
  std::optional<Entity> object_entity;
  Provenance provenance;
  TripletKind kind = TripletKind::Extracted;

  bool operator==(const Triplet&) const = default;
};

/// Surface (subject, relation, object) as produced by an extractor.
struct RawTriplet {
  std::string subject;
  std::string relation;
  std::string object;

  bool operator==(const RawTriplet&) const = default;
};

class CoreferenceResolver {
 public:
  virtual ~CoreferenceResolver() = default;
  virtual std::string resolve(std::string_view text) const = 0;
};

/// Pass-through resolver used when no coreference model is configured.
class IdentityResolver final : public CoreferenceResolver {
 public:
  std::string resolve(std::string_view text) const override { return std::string(text); }
};

std::string resolve_coreferences(std::string_view text, const CoreferenceResolver& resolver);

class TripletExtractor {
 public:
  virtual ~TripletExtractor() = default;
  virtual std::vector<RawTriplet> extract(std::string_view sentence) const = 0;
};

/// Lexicon-driven extractor. Runs of verb-lexicon tokens act as pivots; the
/// subject is the token span left of the pivot and the object the span to its
/// right, both bounded by other pivots, clause words ("that", "which", "and",
/// ...) and clause punctuation. A preposition directly after the pivot joins
/// the relation; after a copula, the relation extends through the first
/// preposition within kMaxRelationGap tokens ("are the main reservoir of").
class PatternExtractor final : public TripletExtractor {
 public:
  PatternExtractor();
  PatternExtractor(std::set<std::string> verbs, std::set<std::string> prepositions);

  std::vector<RawTriplet> extract(std::string_view sentence) const override;

  static const std::set<std::string>& default_verbs();
  static const std::set<std::string>& default_prepositions();

  static constexpr std::size_t kMaxRelationGap = 5;

 private:
  std::set<std::string> verbs_;
  std::set<std::string> prepositions_;
};

std::vector<RawTriplet> extract_triplets_baseline(std::string_view sentence);

/// Sentence boundaries: '.', '!' or '?' followed by whitespace and an
/// uppercase letter, digit or opening quote.
std::vector<std::string> split_sentences(std::string_view text);

/// Surface relation -> canonical relation. Values are canonicalized on insert;
/// a value that is itself a key is rejected so lookups never chain.
class RelationSynonyms {
 public:
  RelationSynonyms() = default;
  explicit RelationSynonyms(const std::map<std::string, std::string>& table);

  /// Tab-separated "surface<TAB>canonical" lines; '#' starts a comment.
  static RelationSynonyms load(const std::string& path);

  const std::string* find(std::string_view normalized) const;
  std::size_t size() const noexcept { return table_.size(); }

 private:
  std::map<std::string, std::string, std::less<>> table_;
};

/// Lowercase, collapse whitespace, drop leading auxiliaries
/// (is/are/was/were/has/have) while more than one word remains, then map
/// through `synonyms`.
std::string canonicalize_relation(std::string_view relation,
                                  const RelationSynonyms& synonyms = RelationSynonyms{});

/// Lowercase, fold diacritics, trim punctuation, collapse whitespace and drop
/// leading articles.
std::string normalize_mention(std::string_view mention);

/// Alias dictionary. When two entities share an alias the one with the
/// lexicographically smaller ontology_id keeps it and the collision is
/// recorded.
class Ontology {
 public:
  void add(Entity entity);

  /// One JSON entity per line: canonical_name, aliases, type, subtype,
  /// description, ontology_id.
  static Ontology load(const std::string& path);

  std::optional<Entity> link(std::string_view mention, bool substring_fallback = false) const;

  std::size_t size() const noexcept { return entities_.size(); }
  const std::vector<std::string>& collisions() const noexcept { return collisions_; }

 private:
  std::vector<Entity> entities_;
  std::unordered_map<std::string, std::size_t> alias_to_entity_;
  std::vector<std::string> collisions_;
};

std::optional<Entity> link_entity(std::string_view mention, const Ontology& ontology,
                                  bool substring_fallback = false);

/// authored_by / affiliated_with / published_in / references triplets.
std::vector<Triplet> metadata_triplets(const SourceDocument& doc);

struct SynthesisPipeline {
  const CoreferenceResolver& resolver;
  const TripletExtractor& extractor;
  const RelationSynonyms& synonyms;
  const Ontology& ontology;
  bool substring_fallback = false;
};

/// Coreference -> sentence split -> extraction -> relation canonicalization ->
/// entity linking over every paragraph, plus metadata triplets per document.
std::vector<Triplet> synthesize(std::span<const SourceDocument> documents,
                                std::span<const Paragraph> paragraphs,
                                const SynthesisPipeline& pipeline);

/// Throws ParseError when a triplet's provenance names an unknown document or
/// paragraph.
void check_provenance(std::span<const Triplet> triplets, std::span<const Paragraph> paragraphs,
                      std::span<const SourceDocument> documents);

nlohmann::json to_json(const Entity& e);
Entity entity_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Triplet& t);
/// Throws ParseError naming the offending field.
Triplet triplet_from_json(const nlohmann::json& j);

std::vector<Triplet> read_triplets(const std::string& path);
void write_triplets(std::span<const Triplet> triplets, std::ostream& out);

}  // namespace biosearch
