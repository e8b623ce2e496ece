#include "biosearch/triplet_index.hpp"

#include <algorithm>
#include <cstdio>
#include <unordered_map>

#include "biosearch/errors.hpp"

namespace biosearch {

void TripletWeights::validate() const {
  if (!(meta > 0.0)) throw ConfigError("triplet weights: meta weight must be > 0");
  if (!(core > meta)) throw ConfigError("triplet weights: core weight must exceed meta weight");
}

std::string_view to_string(FacetField f) noexcept {
  switch (f) {
    case FacetField::SubjectType: return "subject_type";
    case FacetField::SubjectSubtype: return "subject_subtype";
    case FacetField::ObjectType: return "object_type";
    case FacetField::ObjectSubtype: return "object_subtype";
  }
  return "";
}

std::optional<FacetField> facet_field_from_string(std::string_view s) {
  for (FacetField f : kFacetFields) {
    if (to_string(f) == s) return f;
  }
  return std::nullopt;
}

std::string facet_value(const Triplet& t, FacetField f) {
  const bool subject = f == FacetField::SubjectType || f == FacetField::SubjectSubtype;
  const std::optional<Entity>& e = subject ? t.subject_entity : t.object_entity;
  if (!e) return std::string(kUnlinked);
  const bool type = f == FacetField::SubjectType || f == FacetField::ObjectType;
  const std::string& v = type ? e->entity_type : e->entity_subtype;
  return v.empty() ? std::string(kUnlinked) : v;
}

namespace {

std::string facet_key(std::string_view v) {
  static const AnalyzerConfig cfg{};
  return normalize(clean_text(v), cfg);
}

}  // namespace

bool FacetFilter::matches(const Triplet& t) const {
  for (const auto& [field, value] : clauses) {
    if (facet_key(facet_value(t, field)) != facet_key(value)) return false;
  }
  return true;
}

FacetCounts facet_counts(std::span<const Triplet> triplets) {
  FacetCounts counts;
  for (FacetField f : kFacetFields) counts[f];
  for (const auto& t : triplets) {
    for (FacetField f : kFacetFields) ++counts[f][facet_value(t, f)];
  }
  return counts;
}

std::string_view TripletIndex::field_name(std::size_t field) {
  static constexpr std::string_view names[kFieldCount] = {
      "subject", "relation", "object", "aliases", "types", "subtypes", "descriptions"};
  return names[field];
}

namespace {

std::string unit_name(std::size_t i) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "t%010zu", i);
  return buf;
}

void append(std::string& out, std::string_view piece) {
  if (piece.empty()) return;
  if (!out.empty()) out += " | ";
  out += piece;
}

std::string field_text(const Triplet& t, std::size_t field) {
  std::string out;
  const std::optional<Entity>* entities[] = {&t.subject_entity, &t.object_entity};
  switch (field) {
    case 0: return t.subject;
    case 1: return t.relation;
    case 2: return t.object;
    case 3:
      for (const auto* e : entities) {
        if (*e) {
          for (const auto& a : (*e)->aliases) append(out, a);
        }
      }
      return out;
    case 4:
      for (const auto* e : entities) {
        if (*e) append(out, (*e)->entity_type);
      }
      return out;
    case 5:
      for (const auto* e : entities) {
        if (*e) append(out, (*e)->entity_subtype);
      }
      return out;
    default:
      for (const auto* e : entities) {
        if (*e) append(out, (*e)->description);
      }
      return out;
  }
}

}  // namespace

TripletIndex TripletIndex::build(std::vector<Triplet> triplets, const AnalyzerConfig& analyzer,
                                 const TripletWeights& weights) {
  weights.validate();
  TripletIndex idx;
  idx.weights_ = weights;
  idx.fields_.reserve(kFieldCount);
  for (std::size_t f = 0; f < kFieldCount; ++f) {
    std::vector<IndexedText> units;
    units.reserve(triplets.size());
    for (std::size_t i = 0; i < triplets.size(); ++i) {
      units.push_back({unit_name(i), field_text(triplets[i], f)});
    }
    idx.fields_.push_back(LexicalIndex::build(std::move(units), analyzer));
  }
  idx.triplets_ = std::move(triplets);
  return idx;
}

std::vector<TripletHit> TripletIndex::search(const QueryAst& query, const FacetFilter& filter,
                                             std::size_t k, const Bm25Params& params) const {
  if (triplets_.empty() || k == 0) return {};
  std::vector<std::string> terms;
  for (const auto& tok : query.sequence) terms.push_back(tok.term);

  // Unit numbers equal triplet indices because unit ids sort in index order.
  std::vector<double> score(triplets_.size(), 0.0);
  for (std::size_t f = 0; f < kFieldCount; ++f) {
    const double w = f < 3 ? weights_.core : weights_.meta;
    for (const auto& [unit, s] : fields_[f].score_all(terms, IndexField::Ngram, params)) {
      score[unit] += w * s;
    }
  }

  std::vector<bool> allowed(triplets_.size(), true);
  for (const auto& phrase : query.phrases) {
    std::vector<std::string> words;
    for (const auto& tok : phrase) words.push_back(tok.term);
    std::vector<bool> hit(triplets_.size(), false);
    for (std::size_t f = 0; f < kFieldCount; ++f) {
      for (const auto& [unit, s] : fields_[f].phrase_matches(words, params)) hit[unit] = true;
    }
    for (std::size_t i = 0; i < hit.size(); ++i) allowed[i] = allowed[i] && hit[i];
  }

  std::vector<TripletHit> hits;
  for (std::size_t i = 0; i < triplets_.size(); ++i) {
    if (score[i] > 0.0 && allowed[i] && filter.matches(triplets_[i])) hits.push_back({i, score[i]});
  }
  auto better = [](const TripletHit& a, const TripletHit& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.index < b.index;
  };
  if (hits.size() > k) {
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(k), hits.end(),
                      better);
    hits.resize(k);
  } else {
    std::sort(hits.begin(), hits.end(), better);
  }
  return hits;
}

}  // namespace biosearch
