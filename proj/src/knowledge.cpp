#include "biosearch/knowledge.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "biosearch/analysis.hpp"
#include "biosearch/errors.hpp"
#include "biosearch/unicode.hpp"

namespace biosearch {

using nlohmann::json;

std::string resolve_coreferences(std::string_view text, const CoreferenceResolver& resolver) {
  return resolver.resolve(text);
}

namespace {

const std::set<std::string> kClauseWords = {
    "that", "which", "who",   "whom",     "whose",    "and",  "but", "or",
    "while", "whereas", "because", "although", "though", "when", "where", "if",
};

const std::set<std::string> kCopulas = {"is", "are", "was", "were", "be", "been", "being"};

std::string join_terms(const std::vector<TokenSpan>& spans, std::size_t begin, std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (!out.empty()) out.push_back(' ');
    out += spans[i].token.term;
  }
  return out;
}

bool clause_break(std::string_view gap) {
  return gap.find_first_of(",;:()[]") != std::string_view::npos;
}

}  // namespace

PatternExtractor::PatternExtractor()
    : PatternExtractor(default_verbs(), default_prepositions()) {}

PatternExtractor::PatternExtractor(std::set<std::string> verbs, std::set<std::string> prepositions)
    : verbs_(std::move(verbs)), prepositions_(std::move(prepositions)) {}

const std::set<std::string>& PatternExtractor::default_verbs() {
  static const std::set<std::string> verbs = {
      "is",        "are",        "was",       "were",       "be",         "been",
      "has",       "have",       "had",       "infects",    "infect",     "infected",
      "causes",    "cause",      "caused",    "binds",      "bind",       "inhibits",
      "inhibit",   "inhibited",  "encodes",   "encode",     "encoded",    "activates",
      "activate",  "activated",  "induces",   "induce",     "induced",    "reduces",
      "reduce",    "reduced",    "increases", "increase",   "increased",  "treats",
      "treat",     "treated",    "prevents",  "prevent",    "targets",    "target",
      "transmits", "transmit",   "transmitted", "carries",  "carry",      "harbor",
      "harbors",   "harbour",    "harbours",  "contains",   "contain",    "exhibits",
      "exhibit",   "produces",   "produce",   "produced",   "regulates",  "regulate",
      "mediates",  "mediate",    "mediated",  "blocks",     "block",      "blocked",
      "uses",      "use",        "used",      "requires",   "require",    "enters",
      "enter",     "replicates", "replicate", "affects",    "affect",     "affected",
      "associated", "isolated",  "identified", "detected",  "found",      "expressed",
      "expresses", "express",    "spread",    "spreads",    "originated", "originates",
      "emerged",   "emerges",    "derived",   "linked",     "related",    "shows",
      "show",      "showed",     "suggests",  "suggest",    "remains",    "remain",
  };
  return verbs;
}

const std::set<std::string>& PatternExtractor::default_prepositions() {
  static const std::set<std::string> preps = {
      "of",   "in",   "on",      "at",    "by",   "for",     "with",   "from",
      "to",   "into", "through", "among", "via",  "against", "within", "between",
      "onto", "upon", "across",  "after", "during",
  };
  return preps;
}

std::vector<RawTriplet> PatternExtractor::extract(std::string_view sentence) const {
  const std::vector<TokenSpan> spans = tokenize_with_offsets(sentence);
  const std::size_t n = spans.size();
  std::vector<std::string> lower(n);
  std::vector<bool> pivot(n), stop(n), gap_break(n + 1, false);
  for (std::size_t i = 0; i < n; ++i) {
    lower[i] = unicode::to_lower(spans[i].token.term);
    pivot[i] = verbs_.count(lower[i]) != 0;
    stop[i] = kClauseWords.count(lower[i]) != 0;
    // gap_break[i]: clause punctuation between token i-1 and token i.
    if (i > 0) gap_break[i] = clause_break(sentence.substr(spans[i - 1].end,
                                                           spans[i].begin - spans[i - 1].end));
  }

  std::vector<RawTriplet> out;
  std::size_t i = 0;
  while (i < n) {
    if (!pivot[i]) {
      ++i;
      continue;
    }
    std::size_t pe = i + 1;
    while (pe < n && pivot[pe] && !gap_break[pe]) ++pe;
    const std::size_t ps = i;
    i = pe;

    std::size_t ss = ps;
    while (ss > 0 && !gap_break[ss] && !pivot[ss - 1] && !stop[ss - 1]) --ss;
    if (ss == ps) continue;

    std::size_t re = pe;
    while (re < n && !gap_break[re] && !pivot[re] && !stop[re]) ++re;
    if (re == pe) continue;

    bool copula = false;
    for (std::size_t k = ps; k < pe; ++k) copula = copula || kCopulas.count(lower[k]) != 0;

    std::size_t rel_end = pe;  // exclusive end of the relation tokens
    if (prepositions_.count(lower[pe]) != 0) {
      rel_end = pe + 1;
    } else if (copula) {
      const std::size_t limit = std::min(re, pe + kMaxRelationGap + 1);
      for (std::size_t k = pe + 1; k < limit; ++k) {
        if (prepositions_.count(lower[k]) != 0) {
          rel_end = k + 1;
          break;
        }
      }
    }
    if (rel_end >= re) continue;  // nothing left for the object

    out.push_back({join_terms(spans, ss, ps), join_terms(spans, ps, rel_end),
                   join_terms(spans, rel_end, re)});
  }
  return out;
}

std::vector<RawTriplet> extract_triplets_baseline(std::string_view sentence) {
  static const PatternExtractor extractor;
  return extractor.extract(sentence);
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  auto flush = [&](std::size_t begin, std::size_t end) {
    std::string s = clean_text(text.substr(begin, end - begin));
    if (!s.empty()) out.push_back(std::move(s));
  };
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    std::size_t j = i + 1;
    if (j >= text.size() || (text[j] != ' ' && text[j] != '\n' && text[j] != '\t')) continue;
    while (j < text.size() && (text[j] == ' ' || text[j] == '\n' || text[j] == '\t')) ++j;
    if (j >= text.size()) break;
    const unsigned char next = static_cast<unsigned char>(text[j]);
    const bool opener = std::isupper(next) || std::isdigit(next) || next == '"' || next == '(' ||
                        next >= 0x80;
    if (!opener) continue;
    flush(start, i + 1);
    start = j;
  }
  flush(start, text.size());
  return out;
}

namespace {

std::string normalize_relation_text(std::string_view relation) {
  return clean_text(unicode::to_lower(relation));
}

}  // namespace

RelationSynonyms::RelationSynonyms(const std::map<std::string, std::string>& table) {
  for (const auto& [surface, canonical] : table) {
    std::string key = canonicalize_relation(surface);
    std::string value = canonicalize_relation(canonical);
    if (key.empty() || value.empty()) throw ConfigError("relation synonyms: empty entry");
    if (key == value) continue;
    table_[key] = value;
  }
  for (const auto& [key, value] : table_) {
    if (table_.count(value) != 0) {
      throw ConfigError("relation synonyms: '" + key + "' maps to '" + value +
                        "', which is itself mapped");
    }
  }
}

RelationSynonyms RelationSynonyms::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open relation synonyms '" + path + "'");
  std::map<std::string, std::string> table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected surface<TAB>canonical");
    }
    table[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return RelationSynonyms(table);
}

const std::string* RelationSynonyms::find(std::string_view normalized) const {
  auto it = table_.find(normalized);
  return it == table_.end() ? nullptr : &it->second;
}

std::string canonicalize_relation(std::string_view relation, const RelationSynonyms& synonyms) {
  static const std::set<std::string, std::less<>> aux = {"is", "are", "was", "were", "has",
                                                         "have"};
  std::string text = normalize_relation_text(relation);
  for (;;) {
    const auto sp = text.find(' ');
    if (sp == std::string::npos) break;
    if (aux.count(std::string_view(text).substr(0, sp)) == 0) break;
    text.erase(0, sp + 1);
  }
  if (const std::string* mapped = synonyms.find(text)) return *mapped;
  return text;
}

std::string normalize_mention(std::string_view mention) {
  static const AnalyzerConfig cfg{};
  std::vector<std::string> terms = analyze(mention, cfg);
  std::size_t skip = 0;
  while (skip + 1 < terms.size() &&
         (terms[skip] == "the" || terms[skip] == "a" || terms[skip] == "an")) {
    ++skip;
  }
  std::string out;
  for (std::size_t i = skip; i < terms.size(); ++i) {
    if (!out.empty()) out.push_back(' ');
    out += terms[i];
  }
  return out;
}

void Ontology::add(Entity entity) {
  if (entity.canonical_name.empty()) throw ParseError("canonical_name", "must not be empty");
  if (std::find(entity.aliases.begin(), entity.aliases.end(), entity.canonical_name) ==
      entity.aliases.end()) {
    entity.aliases.insert(entity.aliases.begin(), entity.canonical_name);
  }
  const std::size_t index = entities_.size();
  const std::string my_id = entity.ontology_id.value_or(entity.canonical_name);
  for (const auto& alias : entity.aliases) {
    std::string key = normalize_mention(alias);
    if (key.empty()) continue;
    auto [it, inserted] = alias_to_entity_.emplace(key, index);
    if (inserted || it->second == index) continue;
    const Entity& holder = entities_[it->second];
    const std::string holder_id = holder.ontology_id.value_or(holder.canonical_name);
    const std::string& winner = my_id < holder_id ? my_id : holder_id;
    collisions_.push_back("alias '" + key + "' claimed by '" + holder_id + "' and '" + my_id +
                          "'; kept '" + winner + "'");
    spdlog::warn("ontology: {}", collisions_.back());
    if (my_id < holder_id) it->second = index;
  }
  entities_.push_back(std::move(entity));
}

Ontology Ontology::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open ontology '" + path + "'");
  Ontology onto;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (clean_text(line).empty()) continue;
    try {
      onto.add(entity_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError("", path + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError(e.field(), path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return onto;
}

std::optional<Entity> Ontology::link(std::string_view mention, bool substring_fallback) const {
  const std::string key = normalize_mention(mention);
  if (key.empty()) return std::nullopt;
  if (auto it = alias_to_entity_.find(key); it != alias_to_entity_.end()) {
    return entities_[it->second];
  }
  if (!substring_fallback) return std::nullopt;

  // Longest alias occurring as a contiguous token run of the mention; ties go
  // to the leftmost run.
  std::vector<std::string> words;
  std::istringstream ss(key);
  for (std::string w; ss >> w;) words.push_back(w);
  for (std::size_t len = words.size(); len-- > 1;) {
    for (std::size_t s = 0; s + len <= words.size(); ++s) {
      std::string sub;
      for (std::size_t k = s; k < s + len; ++k) {
        if (!sub.empty()) sub.push_back(' ');
        sub += words[k];
      }
      if (auto it = alias_to_entity_.find(sub); it != alias_to_entity_.end()) {
        return entities_[it->second];
      }
    }
  }
  return std::nullopt;
}

std::optional<Entity> link_entity(std::string_view mention, const Ontology& ontology,
                                  bool substring_fallback) {
  return ontology.link(mention, substring_fallback);
}

namespace {

Entity make_entity(std::string name, std::string type, std::string subtype,
                   std::string description = {}) {
  Entity e;
  e.aliases.push_back(name);
  e.canonical_name = std::move(name);
  e.entity_type = std::move(type);
  e.entity_subtype = std::move(subtype);
  e.description = std::move(description);
  return e;
}

}  // namespace

std::vector<Triplet> metadata_triplets(const SourceDocument& doc) {
  std::vector<Triplet> out;
  const Entity subject = make_entity(doc.doc_id, "Document", "article", doc.title);
  auto emit = [&](std::string relation, Entity object) {
    Triplet t;
    t.subject = doc.doc_id;
    t.relation = std::move(relation);
    t.object = object.canonical_name;
    t.subject_entity = subject;
    t.object_entity = std::move(object);
    t.provenance.doc_id = doc.doc_id;
    t.kind = TripletKind::Metadata;
    out.push_back(std::move(t));
  };
  for (const auto& a : doc.authors) emit("authored_by", make_entity(a, "Person", "author"));
  for (const auto& inst : doc.institutions) {
    emit("affiliated_with", make_entity(inst, "Institution", "institution"));
  }
  if (doc.publication_year) {
    emit("published_in", make_entity(std::to_string(*doc.publication_year), "Year",
                                     "publication_year"));
  }
  for (const auto& ref : doc.references) emit("references", make_entity(ref, "Document", "reference"));
  return out;
}

std::vector<Triplet> synthesize(std::span<const SourceDocument> documents,
                                std::span<const Paragraph> paragraphs,
                                const SynthesisPipeline& pipeline) {
  std::vector<Triplet> out;
  for (const auto& para : paragraphs) {
    const std::string resolved = resolve_coreferences(para.text, pipeline.resolver);
    const std::vector<std::string> sentences = split_sentences(resolved);
    for (std::size_t s = 0; s < sentences.size(); ++s) {
      for (auto& raw : pipeline.extractor.extract(sentences[s])) {
        Triplet t;
        t.relation = canonicalize_relation(raw.relation, pipeline.synonyms);
        if (t.relation.empty() || raw.subject.empty() || raw.object.empty()) continue;
        t.subject = std::move(raw.subject);
        t.object = std::move(raw.object);
        t.subject_entity = pipeline.ontology.link(t.subject, pipeline.substring_fallback);
        t.object_entity = pipeline.ontology.link(t.object, pipeline.substring_fallback);
        t.provenance = {para.doc_id, para.para_id, static_cast<int>(s)};
        t.kind = TripletKind::Extracted;
        out.push_back(std::move(t));
      }
    }
  }
  for (const auto& doc : documents) {
    for (auto& t : metadata_triplets(doc)) out.push_back(std::move(t));
  }
  return out;
}

void check_provenance(std::span<const Triplet> triplets, std::span<const Paragraph> paragraphs,
                      std::span<const SourceDocument> documents) {
  std::unordered_set<std::string> docs, paras;
  for (const auto& d : documents) docs.insert(d.doc_id);
  for (const auto& p : paragraphs) paras.insert(p.para_id);
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    const Provenance& p = triplets[i].provenance;
    if (docs.count(p.doc_id) == 0) {
      throw ParseError("provenance.doc_id",
                       "triplet " + std::to_string(i) + " cites unknown document '" + p.doc_id + "'");
    }
    if (!p.para_id.empty() && paras.count(p.para_id) == 0) {
      throw ParseError("provenance.para_id", "triplet " + std::to_string(i) +
                                                 " cites unknown paragraph '" + p.para_id + "'");
    }
  }
}

json to_json(const Entity& e) {
  json j = {{"canonical_name", e.canonical_name},
            {"aliases", e.aliases},
            {"type", e.entity_type},
            {"subtype", e.entity_subtype},
            {"description", e.description}};
  j["ontology_id"] = e.ontology_id ? json(*e.ontology_id) : json(nullptr);
  return j;
}

namespace {

std::string string_field(const json& j, const char* name, const std::string& prefix,
                         bool required) {
  auto it = j.find(name);
  if (it == j.end() || it->is_null()) {
    if (required) throw ParseError(prefix + name, "is required");
    return {};
  }
  if (!it->is_string()) throw ParseError(prefix + name, "must be a string");
  return it->get<std::string>();
}

Entity entity_from_json_at(const json& j, const std::string& prefix) {
  if (!j.is_object()) throw ParseError(prefix.empty() ? "" : prefix.substr(0, prefix.size() - 1),
                                       "entity must be an object");
  Entity e;
  e.canonical_name = string_field(j, "canonical_name", prefix, true);
  if (auto it = j.find("aliases"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw ParseError(prefix + "aliases", "must be an array of strings");
    for (const auto& a : *it) {
      if (!a.is_string()) throw ParseError(prefix + "aliases", "must be an array of strings");
      e.aliases.push_back(a.get<std::string>());
    }
  }
  if (std::find(e.aliases.begin(), e.aliases.end(), e.canonical_name) == e.aliases.end()) {
    e.aliases.insert(e.aliases.begin(), e.canonical_name);
  }
  e.entity_type = string_field(j, "type", prefix, false);
  e.entity_subtype = string_field(j, "subtype", prefix, false);
  e.description = string_field(j, "description", prefix, false);
  if (auto it = j.find("ontology_id"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw ParseError(prefix + "ontology_id", "must be a string");
    e.ontology_id = it->get<std::string>();
  }
  return e;
}

}  // namespace

Entity entity_from_json(const json& j) { return entity_from_json_at(j, ""); }

json to_json(const Triplet& t) {
  json prov = {{"doc_id", t.provenance.doc_id}, {"para_id", t.provenance.para_id}};
  prov["sentence"] = t.provenance.sentence ? json(*t.provenance.sentence) : json(nullptr);
  json j = {{"subject", t.subject}, {"relation", t.relation}, {"object", t.object}};
  j["subject_entity"] = t.subject_entity ? to_json(*t.subject_entity) : json(nullptr);
  j["object_entity"] = t.object_entity ? to_json(*t.object_entity) : json(nullptr);
  j["provenance"] = std::move(prov);
  j["kind"] = t.kind == TripletKind::Metadata ? "metadata" : "extracted";
  return j;
}

Triplet triplet_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("", "triplet must be a JSON object");
  Triplet t;
  t.subject = string_field(j, "subject", "", true);
  t.relation = string_field(j, "relation", "", true);
  t.object = string_field(j, "object", "", true);
  if (t.subject.empty()) throw ParseError("subject", "must not be empty");
  if (t.relation.empty()) throw ParseError("relation", "must not be empty");
  if (t.object.empty()) throw ParseError("object", "must not be empty");
  if (auto it = j.find("subject_entity"); it != j.end() && !it->is_null()) {
    t.subject_entity = entity_from_json_at(*it, "subject_entity.");
  }
  if (auto it = j.find("object_entity"); it != j.end() && !it->is_null()) {
    t.object_entity = entity_from_json_at(*it, "object_entity.");
  }
  auto prov = j.find("provenance");
  if (prov == j.end() || !prov->is_object()) throw ParseError("provenance", "is required");
  t.provenance.doc_id = string_field(*prov, "doc_id", "provenance.", true);
  t.provenance.para_id = string_field(*prov, "para_id", "provenance.", false);
  if (auto it = prov->find("sentence"); it != prov->end() && !it->is_null()) {
    if (!it->is_number_integer()) throw ParseError("provenance.sentence", "must be an integer");
    t.provenance.sentence = it->get<int>();
  }
  const std::string kind = string_field(j, "kind", "", false);
  if (kind.empty() || kind == "extracted") {
    t.kind = TripletKind::Extracted;
  } else if (kind == "metadata") {
    t.kind = TripletKind::Metadata;
  } else {
    throw ParseError("kind", "must be 'extracted' or 'metadata'");
  }
  return t;
}

std::vector<Triplet> read_triplets(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open triplet file '" + path + "'");
  std::vector<Triplet> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (clean_text(line).empty()) continue;
    try {
      out.push_back(triplet_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError("", path + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError(e.field(), path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_triplets(std::span<const Triplet> triplets, std::ostream& out) {
  for (const auto& t : triplets) out << to_json(t).dump() << '\n';
}

}  // namespace biosearch
