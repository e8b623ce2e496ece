#include "biosearch/lexical_index.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>

#include "biosearch/binary_io.hpp"
#include "biosearch/errors.hpp"

namespace biosearch {

std::string_view to_string(Mechanism m) noexcept {
  switch (m) {
    case Mechanism::Phrase: return "phrase";
    case Mechanism::Bigram: return "bigram";
    case Mechanism::Keyword: return "keyword";
    case Mechanism::Semantic: return "semantic";
  }
  return "keyword";
}

Mechanism mechanism_from_string(std::string_view s) {
  if (s == "phrase") return Mechanism::Phrase;
  if (s == "bigram") return Mechanism::Bigram;
  if (s == "keyword") return Mechanism::Keyword;
  if (s == "semantic") return Mechanism::Semantic;
  throw ParseError("mechanism", "unknown mechanism '" + std::string(s) + "'");
}

void Bm25Params::validate() const {
  if (!(k1 >= 0.0) || !std::isfinite(k1)) throw ConfigError("bm25: k1 must be >= 0");
  if (!(b >= 0.0 && b <= 1.0)) throw ConfigError("bm25: b must lie in [0, 1]");
}

LexicalIndex LexicalIndex::build(std::span<const Paragraph> paragraphs,
                                 const AnalyzerConfig& analyzer) {
  std::vector<IndexedText> units;
  units.reserve(paragraphs.size());
  for (const auto& p : paragraphs) units.push_back({p.para_id, p.text});
  return build(std::move(units), analyzer);
}

LexicalIndex LexicalIndex::build(std::vector<IndexedText> units, const AnalyzerConfig& analyzer) {
  analyzer.validate();
  std::sort(units.begin(), units.end(),
            [](const IndexedText& a, const IndexedText& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < units.size(); ++i) {
    if (units[i].id == units[i - 1].id) {
      throw DuplicateError("duplicate unit id '" + units[i].id + "'");
    }
  }

  LexicalIndex idx;
  idx.analyzer_ = analyzer;
  idx.units_.reserve(units.size());
  std::unordered_map<std::string, std::vector<std::string>> gram_cache;

  for (std::uint32_t u = 0; u < units.size(); ++u) {
    const std::vector<std::string> terms = analyze(units[u].text, analyzer);
    idx.units_.push_back({std::move(units[u].id), static_cast<std::uint32_t>(terms.size())});
    idx.unit_lookup_.emplace(idx.units_.back().id, u);

    std::map<std::string_view, std::vector<std::uint32_t>> local_positions;
    std::map<std::string_view, std::uint32_t> local_grams;
    for (std::uint32_t pos = 0; pos < terms.size(); ++pos) {
      local_positions[terms[pos]].push_back(pos);
      auto cached = gram_cache.find(terms[pos]);
      if (cached == gram_cache.end()) {
        cached = gram_cache.emplace(terms[pos], edge_ngrams(terms[pos], analyzer)).first;
      }
      for (const auto& g : cached->second) ++local_grams[g];
    }
    for (auto& [term, positions] : local_positions) {
      auto& postings = idx.exact_[std::string(term)];
      if (postings.pos_begin.empty()) postings.pos_begin.push_back(0);
      postings.units.push_back(u);
      postings.tfs.push_back(static_cast<std::uint32_t>(positions.size()));
      postings.positions.insert(postings.positions.end(), positions.begin(), positions.end());
      postings.pos_begin.push_back(static_cast<std::uint32_t>(postings.positions.size()));
    }
    for (auto& [gram, freq] : local_grams) {
      auto& postings = idx.grams_[std::string(gram)];
      postings.units.push_back(u);
      postings.freqs.push_back(freq);
    }
  }
  idx.finalize_stats();
  return idx;
}

void LexicalIndex::finalize_stats() {
  double total = 0.0;
  for (const auto& u : units_) total += u.length;
  avgdl_ = units_.empty() ? 0.0 : total / static_cast<double>(units_.size());
}

std::optional<std::uint32_t> LexicalIndex::find_unit(std::string_view id) const {
  auto it = unit_lookup_.find(std::string(id));
  if (it == unit_lookup_.end()) return std::nullopt;
  return it->second;
}

const LexicalIndex::ExactPostings* LexicalIndex::exact_postings(std::string_view term) const {
  auto it = exact_.find(std::string(term));
  return it == exact_.end() ? nullptr : &it->second;
}

const LexicalIndex::GramPostings* LexicalIndex::gram_postings(std::string_view gram) const {
  auto it = grams_.find(std::string(gram));
  return it == grams_.end() ? nullptr : &it->second;
}

std::size_t LexicalIndex::document_frequency(std::string_view term, IndexField field) const {
  if (field == IndexField::Exact) {
    const auto* p = exact_postings(term);
    return p ? p->units.size() : 0;
  }
  const auto* p = gram_postings(term);
  return p ? p->units.size() : 0;
}

double LexicalIndex::idf(std::size_t df) const {
  const double n = static_cast<double>(units_.size());
  const double d = static_cast<double>(df);
  return std::log(1.0 + (n - d + 0.5) / (d + 0.5));
}

double LexicalIndex::term_weight(std::uint32_t tf, std::uint32_t unit,
                                 const Bm25Params& params) const {
  const double f = tf;
  const double rel_len = avgdl_ > 0.0 ? units_[unit].length / avgdl_ : 1.0;
  return f * (params.k1 + 1.0) / (f + params.k1 * (1.0 - params.b + params.b * rel_len));
}

std::vector<std::string> LexicalIndex::normalized(std::span<const std::string> terms) const {
  std::vector<std::string> out;
  out.reserve(terms.size());
  for (const auto& t : terms) out.push_back(normalize(t, analyzer_));
  return out;
}

namespace {

template <typename Postings>
std::optional<std::size_t> slot_of(const Postings& p, std::uint32_t unit) {
  auto it = std::lower_bound(p.units.begin(), p.units.end(), unit);
  if (it == p.units.end() || *it != unit) return std::nullopt;
  return static_cast<std::size_t>(it - p.units.begin());
}

}  // namespace

double LexicalIndex::bm25_score(std::span<const std::string> terms, std::string_view unit_id,
                                const Bm25Params& params, IndexField field) const {
  const auto unit = find_unit(unit_id);
  if (!unit) throw NotFoundError("unknown unit '" + std::string(unit_id) + "'");
  double score = 0.0;
  for (const auto& term : normalized(terms)) {
    if (field == IndexField::Exact) {
      const auto* p = exact_postings(term);
      if (!p) continue;
      if (auto slot = slot_of(*p, *unit)) {
        score += idf(p->units.size()) * term_weight(p->tfs[*slot], *unit, params);
      }
    } else {
      const auto* p = gram_postings(term);
      if (!p) continue;
      if (auto slot = slot_of(*p, *unit)) {
        score += idf(p->units.size()) * term_weight(p->freqs[*slot], *unit, params);
      }
    }
  }
  return score;
}

std::vector<std::pair<std::uint32_t, double>> LexicalIndex::phrase_matches(
    std::span<const std::string> phrase, const Bm25Params& params) const {
  std::vector<std::pair<std::uint32_t, double>> out;
  if (phrase.empty()) return out;
  const std::vector<std::string> terms = normalized(phrase);
  std::vector<const ExactPostings*> lists;
  for (const auto& t : terms) {
    const auto* p = exact_postings(t);
    if (!p) return out;
    lists.push_back(p);
  }
  std::size_t rarest = 0;
  for (std::size_t i = 1; i < lists.size(); ++i) {
    if (lists[i]->units.size() < lists[rarest]->units.size()) rarest = i;
  }

  std::vector<std::size_t> slots(lists.size());
  for (const std::uint32_t unit : lists[rarest]->units) {
    bool all_present = true;
    for (std::size_t i = 0; i < lists.size() && all_present; ++i) {
      auto slot = slot_of(*lists[i], unit);
      if (!slot) all_present = false;
      else slots[i] = *slot;
    }
    if (!all_present) continue;

    bool matched = false;
    for (const std::uint32_t start : lists[0]->positions_of(slots[0])) {
      bool ok = true;
      for (std::size_t i = 1; i < lists.size() && ok; ++i) {
        const auto pos = lists[i]->positions_of(slots[i]);
        ok = std::binary_search(pos.begin(), pos.end(), start + static_cast<std::uint32_t>(i));
      }
      if (ok) {
        matched = true;
        break;
      }
    }
    if (!matched) continue;

    double score = 0.0;
    for (std::size_t i = 0; i < lists.size(); ++i) {
      score += idf(lists[i]->units.size()) * term_weight(lists[i]->tfs[slots[i]], unit, params);
    }
    out.emplace_back(unit, score);
  }
  return out;
}

std::vector<std::pair<std::uint32_t, double>> LexicalIndex::score_all(
    std::span<const std::string> terms, IndexField field, const Bm25Params& params) const {
  std::vector<double> acc(units_.size(), 0.0);
  std::vector<char> touched(units_.size(), 0);
  std::vector<std::uint32_t> order;
  for (const auto& term : normalized(terms)) {
    const std::vector<std::uint32_t>* units = nullptr;
    const std::vector<std::uint32_t>* freqs = nullptr;
    if (field == IndexField::Exact) {
      if (const auto* p = exact_postings(term)) {
        units = &p->units;
        freqs = &p->tfs;
      }
    } else if (const auto* p = gram_postings(term)) {
      units = &p->units;
      freqs = &p->freqs;
    }
    if (!units) continue;
    const double w = idf(units->size());
    for (std::size_t i = 0; i < units->size(); ++i) {
      const std::uint32_t u = (*units)[i];
      acc[u] += w * term_weight((*freqs)[i], u, params);
      if (!touched[u]) {
        touched[u] = 1;
        order.push_back(u);
      }
    }
  }
  std::vector<std::pair<std::uint32_t, double>> out;
  out.reserve(order.size());
  for (const std::uint32_t u : order) {
    if (acc[u] > 0.0) out.emplace_back(u, acc[u]);
  }
  return out;
}

std::vector<ScoredHit> LexicalIndex::top_k(std::vector<std::pair<std::uint32_t, double>> scored,
                                           std::size_t k, Mechanism mechanism) const {
  auto better = [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;  // unit numbers follow id order
  };
  if (k < scored.size()) {
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k),
                      scored.end(), better);
    scored.resize(k);
  } else {
    std::sort(scored.begin(), scored.end(), better);
  }
  std::vector<ScoredHit> hits;
  hits.reserve(scored.size());
  for (const auto& [unit, score] : scored) hits.push_back({units_[unit].id, score, mechanism});
  return hits;
}

std::vector<ScoredHit> LexicalIndex::phrase_search(std::span<const std::string> phrase,
                                                   std::size_t k,
                                                   const Bm25Params& params) const {
  return top_k(phrase_matches(phrase, params), k, Mechanism::Phrase);
}

std::vector<ScoredHit> LexicalIndex::bigram_search(std::span<const Bigram> bigrams, std::size_t k,
                                                   const Bm25Params& params) const {
  std::map<std::uint32_t, double> summed;
  for (const auto& [first, second] : bigrams) {
    const std::string pair[2] = {first, second};
    for (const auto& [unit, score] : phrase_matches(pair, params)) summed[unit] += score;
  }
  return top_k({summed.begin(), summed.end()}, k, Mechanism::Bigram);
}

std::vector<ScoredHit> LexicalIndex::keyword_search(std::span<const std::string> terms,
                                                    std::size_t k,
                                                    const Bm25Params& params) const {
  return top_k(score_all(terms, IndexField::Ngram, params), k, Mechanism::Keyword);
}

std::vector<std::pair<std::string, std::uint64_t>> LexicalIndex::term_counts() const {
  std::vector<std::pair<std::string, std::uint64_t>> out;
  out.reserve(exact_.size());
  for (const auto& [term, p] : exact_) {
    std::uint64_t n = 0;
    for (auto tf : p.tfs) n += tf;
    out.emplace_back(term, n);
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

constexpr char kMagic[8] = {'B', 'S', 'L', 'E', 'X', 0, 0, 0};

template <typename Map>
std::vector<typename Map::const_pointer> sorted_entries(const Map& m) {
  std::vector<typename Map::const_pointer> v;
  v.reserve(m.size());
  for (const auto& e : m) v.push_back(&e);
  std::sort(v.begin(), v.end(), [](auto a, auto b) { return a->first < b->first; });
  return v;
}

}  // namespace

void LexicalIndex::save(std::ostream& out) const {
  binary::Writer w(out);
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kFormatVersion);
  w.i32(analyzer_.min_gram);
  w.i32(analyzer_.max_gram);
  w.u8(analyzer_.lowercase ? 1 : 0);
  w.u8(analyzer_.ascii_fold ? 1 : 0);

  w.u32(static_cast<std::uint32_t>(units_.size()));
  for (const auto& u : units_) {
    w.str(u.id);
    w.varint(u.length);
  }

  w.u32(static_cast<std::uint32_t>(exact_.size()));
  for (const auto* entry : sorted_entries(exact_)) {
    const auto& p = entry->second;
    w.str(entry->first);
    w.varint(p.units.size());
    std::uint32_t prev_unit = 0;
    for (std::size_t i = 0; i < p.units.size(); ++i) {
      w.varint(p.units[i] - prev_unit);
      prev_unit = p.units[i];
      w.varint(p.tfs[i]);
      std::uint32_t prev_pos = 0;
      for (const std::uint32_t pos : p.positions_of(i)) {
        w.varint(pos - prev_pos);
        prev_pos = pos;
      }
    }
  }

  w.u32(static_cast<std::uint32_t>(grams_.size()));
  for (const auto* entry : sorted_entries(grams_)) {
    const auto& p = entry->second;
    w.str(entry->first);
    w.varint(p.units.size());
    std::uint32_t prev_unit = 0;
    for (std::size_t i = 0; i < p.units.size(); ++i) {
      w.varint(p.units[i] - prev_unit);
      prev_unit = p.units[i];
      w.varint(p.freqs[i]);
    }
  }
}

LexicalIndex LexicalIndex::load(std::istream& in) {
  binary::Reader r(in);
  char magic[8];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw FormatError("lexical index: bad magic number");
  }
  const std::uint32_t version = r.u32();
  if (version != kFormatVersion) {
    throw FormatError("lexical index: format version " + std::to_string(version) +
                      " is not supported (expected " + std::to_string(kFormatVersion) + ")");
  }
  LexicalIndex idx;
  idx.analyzer_.min_gram = r.i32();
  idx.analyzer_.max_gram = r.i32();
  idx.analyzer_.lowercase = r.u8() != 0;
  idx.analyzer_.ascii_fold = r.u8() != 0;
  idx.analyzer_.validate();

  const std::uint32_t n_units = r.u32();
  idx.units_.reserve(n_units);
  for (std::uint32_t u = 0; u < n_units; ++u) {
    Unit unit;
    unit.id = r.str();
    unit.length = static_cast<std::uint32_t>(r.varint());
    if (!idx.unit_lookup_.emplace(unit.id, u).second) {
      throw FormatError("lexical index: duplicate unit id");
    }
    idx.units_.push_back(std::move(unit));
  }

  auto read_unit = [&](std::uint32_t& prev) {
    const std::uint64_t unit = prev + r.varint();
    if (unit >= n_units) throw FormatError("lexical index: posting refers to unknown unit");
    prev = static_cast<std::uint32_t>(unit);
    return prev;
  };

  const std::uint32_t n_terms = r.u32();
  for (std::uint32_t t = 0; t < n_terms; ++t) {
    std::string term = r.str();
    ExactPostings p;
    const std::uint64_t df = r.varint();
    if (df > n_units) throw FormatError("lexical index: document frequency out of range");
    p.pos_begin.push_back(0);
    std::uint32_t prev_unit = 0;
    for (std::uint64_t i = 0; i < df; ++i) {
      p.units.push_back(read_unit(prev_unit));
      const auto tf = static_cast<std::uint32_t>(r.varint());
      p.tfs.push_back(tf);
      std::uint32_t pos = 0;
      for (std::uint32_t j = 0; j < tf; ++j) {
        pos += static_cast<std::uint32_t>(r.varint());
        p.positions.push_back(pos);
      }
      p.pos_begin.push_back(static_cast<std::uint32_t>(p.positions.size()));
    }
    idx.exact_.emplace(std::move(term), std::move(p));
  }

  const std::uint32_t n_grams = r.u32();
  for (std::uint32_t g = 0; g < n_grams; ++g) {
    std::string gram = r.str();
    GramPostings p;
    const std::uint64_t df = r.varint();
    if (df > n_units) throw FormatError("lexical index: document frequency out of range");
    std::uint32_t prev_unit = 0;
    for (std::uint64_t i = 0; i < df; ++i) {
      p.units.push_back(read_unit(prev_unit));
      p.freqs.push_back(static_cast<std::uint32_t>(r.varint()));
    }
    idx.grams_.emplace(std::move(gram), std::move(p));
  }
  idx.finalize_stats();
  return idx;
}

}  // namespace biosearch
