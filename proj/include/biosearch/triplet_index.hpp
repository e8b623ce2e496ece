#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "biosearch/analysis.hpp"
#include "biosearch/knowledge.hpp"
#include "biosearch/lexical_index.hpp"

namespace biosearch {

/// Weight of subject/relation/object matches versus alias/type/description
/// matches.
struct TripletWeights {
  double core = 3.0;
  double meta = 1.0;

  /// Throws ConfigError unless core > meta > 0.
  void validate() const;
};

enum class FacetField : std::uint8_t { SubjectType, SubjectSubtype, ObjectType, ObjectSubtype };

inline constexpr std::array<FacetField, 4> kFacetFields = {
    FacetField::SubjectType, FacetField::SubjectSubtype, FacetField::ObjectType,
    FacetField::ObjectSubtype};

/// Value reported for the facet of an unlinked subject or object.
inline constexpr std::string_view kUnlinked = "(unlinked)";

std::string_view to_string(FacetField f) noexcept;
std::optional<FacetField> facet_field_from_string(std::string_view s);

/// The facet value of `t`, or kUnlinked.
std::string facet_value(const Triplet& t, FacetField f);

/// Conjunction of one equality clause per facet field. Values compare after
/// lowercasing and diacritic folding.
struct FacetFilter {
  std::map<FacetField, std::string> clauses;

  bool matches(const Triplet& t) const;
  bool empty() const noexcept { return clauses.empty(); }
};

using FacetCounts = std::map<FacetField, std::map<std::string, std::size_t>>;

/// Per-field value counts over `triplets`; every field is present.
FacetCounts facet_counts(std::span<const Triplet> triplets);

struct TripletHit {
  std::size_t index = 0;  // position in TripletIndex::triplets()
  double score = 0.0;
};

/// Weighted multi-field search over triplets. Each field (subject, relation,
/// object, aliases, types, subtypes, descriptions) has its own lexical index;
/// a triplet scores sum(weight * BM25) over the n-gram fields.
class TripletIndex {
 public:
  TripletIndex() = default;

  static TripletIndex build(std::vector<Triplet> triplets, const AnalyzerConfig& analyzer,
                            const TripletWeights& weights);

  const std::vector<Triplet>& triplets() const noexcept { return triplets_; }
  const TripletWeights& weights() const noexcept { return weights_; }
  std::size_t size() const noexcept { return triplets_.size(); }

  /// Triplets scoring > 0 that contain every quoted phrase in at least one
  /// field and satisfy `filter`, sorted by (score desc, index asc). The
  /// filter applies before the cut to k.
  std::vector<TripletHit> search(const QueryAst& query, const FacetFilter& filter, std::size_t k,
                                 const Bm25Params& params) const;

  static constexpr std::size_t kFieldCount = 7;
  static std::string_view field_name(std::size_t field);

 private:
  std::vector<Triplet> triplets_;
  std::vector<LexicalIndex> fields_;
  TripletWeights weights_;
};

}  // namespace biosearch
