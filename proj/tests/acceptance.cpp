// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "biosearch/config.hpp"
#include "biosearch/engine.hpp"
#include "biosearch/evaluation.hpp"
#include "biosearch/index_store.hpp"
#include "biosearch/spell.hpp"
#include "biosearch/triplet_index.hpp"
#include "biosearch/unicode.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace biosearch;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

std::string unit_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "u%03zu", i);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome bm25_equivalence() {
  Outcome out;
  const auto t0 = Clock::now();
  synthetic::Rng rng(101);
  double worst = 0;
  for (int c = 0; c < 200 && out.pass; ++c) {
    const auto vocab = synthetic::vocabulary(rng, synthetic::uniform(rng, 2, 50));
    const std::size_t n = synthetic::uniform(rng, 1, 100);
    std::vector<oracle::Doc> docs;
    std::vector<IndexedText> units;
    for (std::size_t i = 0; i < n; ++i) {
      docs.push_back(synthetic::sentence(rng, vocab, 1, 40));
      units.push_back({unit_name(i), synthetic::join(docs.back())});
    }
    const LexicalIndex index = LexicalIndex::build(units, AnalyzerConfig{});
    Bm25Params params;
    if (c % 2 == 1) {
      params.k1 = std::uniform_real_distribution<double>(0.0, 3.0)(rng);
      params.b = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    }
    for (int q = 0; q < 5; ++q) {
      std::vector<std::string> query = synthetic::sentence(rng, vocab, 1, 4);
      if (q == 4) query.push_back("zzzunseen");
      const auto expected = oracle::bm25(docs, query, params.k1, params.b);
      for (std::size_t i = 0; i < n; ++i) {
        const double got = index.bm25_score(query, unit_name(i), params);
        worst = std::max(worst, std::abs(got - expected[i]));
        if (std::abs(got - expected[i]) > 1e-9) {
          out.fail(fmt("corpus %.0f: score differs by %g", c, std::abs(got - expected[i])));
        }
      }
    }
  }
  const double elapsed = seconds_since(t0);
  if (elapsed >= 30) out.fail(fmt("took %.1f s", elapsed));
  if (out.pass) out.detail = fmt("200 corpora, max |diff| %.2e, %.2f s", worst, elapsed);
  return out;
}

Outcome phrase_completeness() {
  Outcome out;
  synthetic::Rng rng(202);
  std::size_t checks = 0;
  for (int c = 0; c < 200 && out.pass; ++c) {
    // Small vocabularies so multi-token phrases actually occur.
    const auto vocab = synthetic::vocabulary(rng, synthetic::uniform(rng, 2, 12));
    const std::size_t n = synthetic::uniform(rng, 1, 100);
    std::vector<oracle::Doc> docs;
    std::vector<IndexedText> units;
    for (std::size_t i = 0; i < n; ++i) {
      docs.push_back(synthetic::sentence(rng, vocab, 1, 30));
      units.push_back({unit_name(i), synthetic::join(docs.back())});
    }
    const LexicalIndex index = LexicalIndex::build(units, AnalyzerConfig{});
    for (int q = 0; q < 10; ++q) {
      oracle::Doc phrase;
      if (q % 2 == 0) {
        // Slice of an existing document, so at least one hit exists.
        const auto& d = docs[synthetic::uniform(rng, 0, n - 1)];
        const std::size_t len = synthetic::uniform(rng, 1, std::min<std::size_t>(4, d.size()));
        const std::size_t start = synthetic::uniform(rng, 0, d.size() - len);
        phrase.assign(d.begin() + static_cast<std::ptrdiff_t>(start),
                      d.begin() + static_cast<std::ptrdiff_t>(start + len));
      } else {
        phrase = synthetic::sentence(rng, vocab, 1, 4);
      }
      std::set<std::size_t> got;
      for (const auto& h : index.phrase_search(phrase, kAllHits, Bm25Params{})) {
        got.insert(static_cast<std::size_t>(std::stoul(h.unit_id.substr(1))));
      }
      ++checks;
      if (got != oracle::phrase_hits(docs, phrase)) {
        out.fail(fmt("corpus %.0f query %.0f: hit sets differ", c, q));
      }
    }
  }
  if (out.pass) out.detail = std::to_string(checks) + " phrase queries over 200 corpora agree";
  return out;
}

Outcome edge_ngram_definition() {
  Outcome out;
  synthetic::Rng rng(303);
  const std::u32string letters = U"abcdefghijklmnopqrstuvwxyz0123456789-éüßøωжç";
  for (int i = 0; i < 1000 && out.pass; ++i) {
    std::u32string term;
    const std::size_t len = synthetic::uniform(rng, 1, 40);
    for (std::size_t j = 0; j < len; ++j) term.push_back(letters[synthetic::uniform(rng, 0, letters.size() - 1)]);
    AnalyzerConfig cfg;  // default 4..30 for the first half
    if (i >= 500) {
      cfg.min_gram = static_cast<int>(synthetic::uniform(rng, 1, 8));
      cfg.max_gram = static_cast<int>(synthetic::uniform(rng, cfg.min_gram, 35));
    }
    std::vector<std::string> expected;
    for (const auto& g : oracle::edge_ngrams(term, cfg.min_gram, cfg.max_gram)) {
      expected.push_back(oracle::utf8(g));
    }
    if (edge_ngrams(oracle::utf8(term), cfg) != expected) {
      out.fail("term " + oracle::utf8(term) + " differs");
    }
  }
  if (out.pass) out.detail = "1000 terms (500 default, 500 random gram bounds) match";
  return out;
}

LanguageModel fixture_language_model() {
  std::vector<Paragraph> paragraphs;
  for (const auto& d : read_corpus(fixtures::data("corpus.ndjson"))) {
    for (auto& p : segment_paragraphs(d)) paragraphs.push_back(std::move(p));
  }
  return LanguageModel(LexicalIndex::build(paragraphs, AnalyzerConfig{}).term_counts());
}

Outcome spell_correction() {
  Outcome out;
  const LanguageModel lm = fixture_language_model();
  const SpellConfig cfg;
  std::map<std::u32string, long> vocab;
  for (const auto& [term, count] : lm.table()) vocab[unicode::to_u32(term)] = static_cast<long>(count);
  const std::u32string& alphabet = lm.alphabet();

  std::vector<std::pair<std::string, std::uint64_t>> ranked = lm.table();
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  ranked.resize(std::min<std::size_t>(50, ranked.size()));

  std::size_t restored = 0;
  std::size_t eligible = 0;
  for (const auto& [term, count] : ranked) {
    const std::u32string w = unicode::to_u32(term);
    for (const auto& c : oracle::edit_neighbours(w, alphabet)) {
      if (vocab.count(c) != 0) continue;
      std::size_t in_vocab = 0;
      for (const auto& n : oracle::edit_neighbours(c, alphabet)) in_vocab += vocab.count(n);
      if (in_vocab != 1) continue;
      ++eligible;
      if (correct(oracle::utf8(c), lm, cfg) == term) {
        ++restored;
      } else {
        out.fail("corruption " + oracle::utf8(c) + " of " + term + " not restored");
      }
    }
  }

  for (const auto& [term, count] : lm.table()) {
    if (correct(term, lm, cfg) != term) out.fail("in-vocabulary word " + term + " altered");
  }

  // Random 0-3 edit corruptions of vocabulary words plus random strings,
  // against exhaustive tiered enumeration.
  synthetic::Rng rng(404);
  std::size_t tier_checks = 0;
  const auto& table = lm.table();
  for (int i = 0; i < 150; ++i) {
    std::u32string w;
    if (i % 5 == 4) {
      for (std::size_t j = synthetic::uniform(rng, 2, 7); j > 0; --j) {
        w.push_back(alphabet[synthetic::uniform(rng, 0, alphabet.size() - 1)]);
      }
    } else {
      w = unicode::to_u32(table[synthetic::uniform(rng, 0, table.size() - 1)].first);
      if (w.size() > 9) continue;
      for (std::size_t e = synthetic::uniform(rng, 0, 3); e > 0; --e) {
        const auto ns = oracle::edit_neighbours(w, alphabet);
        auto it = ns.begin();
        std::advance(it, static_cast<std::ptrdiff_t>(synthetic::uniform(rng, 0, ns.size() - 1)));
        w = *it;
      }
    }
    if (w.empty()) continue;
    ++tier_checks;
    const std::string expected = oracle::utf8(oracle::correct(w, vocab, alphabet, 2));
    const std::string got = correct(oracle::utf8(w), lm, cfg);
    if (got != expected) {
      out.fail("'" + oracle::utf8(w) + "' corrected to '" + got + "', exhaustive gives '" +
               expected + "'");
    }
  }
  if (eligible == 0) out.fail("no eligible corruptions");
  if (out.pass) {
    out.detail = std::to_string(restored) + "/" + std::to_string(eligible) +
                 " corruptions restored, " + std::to_string(lm.size()) +
                 " vocabulary words unchanged, " + std::to_string(tier_checks) +
                 " tier checks agree";
  }
  return out;
}

struct PairChain {
  std::vector<std::string> ids;
  double score;
};

Outcome multi_hop_exactness() {
  Outcome out;
  synthetic::Rng rng(505);
  const ReferenceEncoder encoder(256, 13);
  for (int c = 0; c < 50 && out.pass; ++c) {
    const auto vocab = synthetic::vocabulary(rng, 30);
    const std::size_t n = synthetic::uniform(rng, 2, 12);
    std::vector<Passage> passages;
    std::set<std::string> texts;
    while (passages.size() < n) {
      std::string text = synthetic::join(synthetic::sentence(rng, vocab, 4, 20));
      if (!texts.insert(text).second) continue;
      Passage p;
      p.doc_id = "d" + std::to_string(passages.size());
      p.passage_id = p.doc_id + "@0";
      p.text = text;
      passages.push_back(std::move(p));
    }
    const DenseIndex index = DenseIndex::build(passages, encoder);
    PassageTextLookup lookup;
    for (const auto& p : passages) lookup[p.passage_id] = p.text;
    const std::string question = synthetic::join(synthetic::sentence(rng, vocab, 3, 8));

    MdrConfig cfg;
    cfg.beam_k = static_cast<int>(n);
    cfg.chain_k = static_cast<int>(n * n);
    const auto chains = multi_hop_retrieve(question, encoder, index, lookup, cfg);

    // Exhaustive ordered pairs.
    std::vector<Embedding> vecs;
    for (const auto& p : passages) vecs.push_back(encoder.encode_passage(p.text));
    const Embedding q0 = encoder.encode_query(question, {});
    std::vector<PairChain> all;
    for (std::size_t i = 0; i < n; ++i) {
      const std::vector<std::string> prior = {passages[i].text};
      const Embedding q1 = encoder.encode_query(question, prior);
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        all.push_back({{passages[i].passage_id, passages[j].passage_id},
                       oracle::dot(q0, vecs[i]) + oracle::dot(q1, vecs[j])});
      }
    }
    std::sort(all.begin(), all.end(), [](const PairChain& a, const PairChain& b) {
      return a.score != b.score ? a.score > b.score : a.ids < b.ids;
    });
    if (chains.size() != all.size()) {
      out.fail(fmt("corpus %.0f: %.0f chains", c, static_cast<double>(chains.size())));
      break;
    }
    if (chains.front().passages != all.front().ids ||
        std::abs(chains.front().combined_score - all.front().score) > 1e-9) {
      out.fail(fmt("corpus %.0f: top chain differs", c));
    }
    std::map<std::vector<std::string>, double> by_ids;
    for (const auto& a : all) by_ids[a.ids] = a.score;
    for (const auto& ch : chains) {
      auto it = by_ids.find(ch.passages);
      if (it == by_ids.end() || std::abs(it->second - ch.combined_score) > 1e-9) {
        out.fail(fmt("corpus %.0f: chain score differs", c));
        break;
      }
    }
  }

  // Two-hop fixture: reservoir passage, then the species-count passage.
  fixtures::ScratchDir dir("acc-hop");
  EngineConfig cfg;
  cfg.index_dir = dir.str();
  const ReferenceEncoder enc(cfg.plugins.encoder_dimension, cfg.plugins.encoder_seed);
  build_index(read_corpus(fixtures::data("two_hop.ndjson")), cfg, enc, {}, dir.str());
  const auto engine = Engine::open(cfg);
  const QaResponse qa =
      engine->qa("How many species exist of the mammals that are the main reservoir of coronaviruses?");
  const std::vector<std::string> chain = {"hop-reservoir@0", "hop-species@0"};
  if (!qa.answer || qa.answer->text != "1200") {
    out.fail("two-hop fixture answer is '" + (qa.answer ? qa.answer->text : "") + "'");
  } else if (qa.answer->supporting_chain.passages != chain) {
    out.fail("two-hop fixture chain is not reservoir -> species");
  }
  if (out.pass) out.detail = "50 corpora top chain and all chain scores agree; two-hop answer 1200";
  return out;
}

std::optional<Entity> random_entity(synthetic::Rng& rng) {
  static const std::vector<std::string> types = {"Virus", "Protein", "Drug", "Species", ""};
  static const std::vector<std::string> subtypes = {"alpha", "Beta", "gamma", ""};
  if (synthetic::uniform(rng, 0, 4) == 0) return std::nullopt;
  Entity e;
  e.canonical_name = synthetic::word(rng, 4, 8);
  e.aliases = {e.canonical_name};
  e.entity_type = types[synthetic::uniform(rng, 0, types.size() - 1)];
  e.entity_subtype = subtypes[synthetic::uniform(rng, 0, subtypes.size() - 1)];
  return e;
}

std::string lower_ascii(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

// Facet value and filter predicate written out independently of the library.
std::string facet_of(const Triplet& t, FacetField f) {
  const bool subject = f == FacetField::SubjectType || f == FacetField::SubjectSubtype;
  const bool type = f == FacetField::SubjectType || f == FacetField::ObjectType;
  const auto& e = subject ? t.subject_entity : t.object_entity;
  if (!e) return "(unlinked)";
  const std::string& v = type ? e->entity_type : e->entity_subtype;
  return v.empty() ? "(unlinked)" : v;
}

bool predicate(const Triplet& t, const std::map<FacetField, std::string>& clauses) {
  for (const auto& [f, v] : clauses) {
    if (lower_ascii(facet_of(t, f)) != lower_ascii(v)) return false;
  }
  return true;
}

Outcome faceted_refinement() {
  Outcome out;
  synthetic::Rng rng(606);
  static const std::vector<std::string> values = {"virus", "PROTEIN", "Drug",  "species",
                                                  "alpha", "beta",    "Gamma", "(unlinked)"};
  std::size_t nonempty = 0;
  for (int c = 0; c < 200 && out.pass; ++c) {
    const auto vocab = synthetic::vocabulary(rng, 15, 4, 8);
    std::vector<Triplet> triplets;
    const std::size_t n = synthetic::uniform(rng, 1, 60);
    for (std::size_t i = 0; i < n; ++i) {
      Triplet t;
      t.subject = synthetic::join(synthetic::sentence(rng, vocab, 1, 3));
      t.relation = synthetic::join(synthetic::sentence(rng, vocab, 1, 2));
      t.object = synthetic::join(synthetic::sentence(rng, vocab, 1, 3));
      t.subject_entity = random_entity(rng);
      t.object_entity = random_entity(rng);
      t.provenance = {"d" + std::to_string(i), "d" + std::to_string(i) + "#0", 0};
      triplets.push_back(std::move(t));
    }
    const TripletIndex index = TripletIndex::build(triplets, AnalyzerConfig{}, TripletWeights{});
    const QueryAst query = parse_query(synthetic::join(synthetic::sentence(rng, vocab, 1, 3)));
    const auto unfiltered = index.search(query, {}, kAllHits, Bm25Params{});

    FacetFilter filter;
    std::vector<TripletHit> previous = unfiltered;
    std::vector<FacetField> order(kFacetFields.begin(), kFacetFields.end());
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t clauses = synthetic::uniform(rng, 1, 4);
    for (std::size_t k = 0; k < clauses && out.pass; ++k) {
      const FacetField field = order[k];
      const bool type = field == FacetField::SubjectType || field == FacetField::ObjectType;
      filter.clauses[field] = type ? values[synthetic::uniform(rng, 0, 3)]
                                   : values[synthetic::uniform(rng, 4, 6)];
      if (synthetic::uniform(rng, 0, 5) == 0) filter.clauses[field] = "(unlinked)";

      std::vector<TripletHit> expected;
      for (const auto& h : unfiltered) {
        if (predicate(index.triplets()[h.index], filter.clauses)) expected.push_back(h);
      }
      const std::size_t cut = synthetic::uniform(rng, 1, 10);
      const auto all = index.search(query, filter, kAllHits, Bm25Params{});
      const auto top = index.search(query, filter, cut, Bm25Params{});
      auto same = [](const std::vector<TripletHit>& a, const std::vector<TripletHit>& b,
                     std::size_t len) {
        if (a.size() < len || b.size() < len) return false;
        for (std::size_t i = 0; i < len; ++i) {
          if (a[i].index != b[i].index || a[i].score != b[i].score) return false;
        }
        return true;
      };
      if (all.size() != expected.size() || !same(all, expected, all.size())) {
        out.fail(fmt("case %.0f: filtered list differs from brute force", c));
      }
      if (top.size() != std::min(cut, expected.size()) || !same(top, expected, top.size())) {
        out.fail(fmt("case %.0f: top-k differs from brute force", c));
      }
      // Narrowing: the new list is an order-preserving subsequence of the old.
      std::size_t j = 0;
      for (const auto& h : all) {
        while (j < previous.size() && previous[j].index != h.index) ++j;
        if (j == previous.size()) {
          out.fail(fmt("case %.0f: adding a clause widened the result", c));
          break;
        }
      }
      nonempty += all.empty() ? 0 : 1;
      previous = all;
    }
  }
  if (nonempty == 0) out.fail("every filtered list was empty");
  if (out.pass) {
    out.detail = "200 cases order-identical to brute force, narrowing monotone (" +
                 std::to_string(nonempty) + " non-empty filtered lists)";
  }
  return out;
}

int rank_of(Mechanism m) { return static_cast<int>(m); }

/// Merge rule written out: mechanisms in order, first occurrence wins, stop
/// at r.
std::vector<std::string> simulate_fill(const QueryAst& q, const RetrievalConfig& cfg,
                                       const fixtures::MemoryIndex& mem) {
  std::vector<std::string> terms;
  for (const auto& t : q.sequence) terms.push_back(t.term);
  const std::size_t k = cfg.fetch_k();
  std::vector<std::vector<std::string>> lists(4);
  for (const auto& h : mem.lexical.phrase_search(terms, k, cfg.bm25)) lists[0].push_back(h.unit_id);
  for (const auto& h : mem.lexical.bigram_search(extract_bigrams(q.sequence), k, cfg.bm25)) {
    lists[1].push_back(h.unit_id);
  }
  for (const auto& h : mem.lexical.keyword_search(terms, k, cfg.bm25)) lists[2].push_back(h.unit_id);
  for (const auto& chain : multi_hop_retrieve(q.raw, mem.encoder, mem.dense,
                                              mem.catalog.passage_text(), cfg.mdr)) {
    for (const auto& pid : chain.passages) {
      const Passage* p = mem.catalog.passage(pid);
      const Paragraph* owner = nullptr;
      for (const auto& para : mem.catalog.paragraphs()) {
        if (para.doc_id == p->doc_id && para.token_offset <= p->token_start) owner = &para;
      }
      if (std::find(lists[3].begin(), lists[3].end(), owner->para_id) == lists[3].end() &&
          lists[3].size() < k) {
        lists[3].push_back(owner->para_id);
      }
    }
  }
  std::vector<std::string> merged;
  for (const auto& list : lists) {
    for (const auto& id : list) {
      if (merged.size() >= cfg.r) return merged;
      if (std::find(merged.begin(), merged.end(), id) == merged.end()) merged.push_back(id);
    }
  }
  return merged;
}

void check_fill(const QueryAst& q, const RetrievalConfig& cfg, const fixtures::MemoryIndex& mem,
                Outcome& out, const std::string& label) {
  const auto filled = fill_results(q, cfg, mem.sources());
  if (filled.size() > cfg.r) out.fail(label + ": more than r results");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < filled.size(); ++i) {
    if (!ids.insert(filled[i].unit_id).second) out.fail(label + ": duplicate " + filled[i].unit_id);
    if (i > 0 && rank_of(filled[i].mechanism) < rank_of(filled[i - 1].mechanism)) {
      out.fail(label + ": mechanism precedence violated");
    }
  }
  std::vector<std::string> order;
  for (const auto& r : filled) order.push_back(r.unit_id);
  if (order != simulate_fill(q, cfg, mem)) out.fail(label + ": differs from simulated merge");

  const BaselineReranker reranker;
  const auto reranked = retrieve_paragraphs(q, cfg, mem.sources(), reranker);
  auto key = [](const RankedResult& r) {
    return std::make_tuple(r.unit_id, rank_of(r.mechanism), r.retrieval_score, r.text);
  };
  std::vector<decltype(key(filled[0]))> a, b;
  for (const auto& r : filled) a.push_back(key(r));
  for (const auto& r : reranked) b.push_back(key(r));
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a != b) out.fail(label + ": re-ranking is not a permutation");
  for (std::size_t i = 1; i < reranked.size(); ++i) {
    if (*reranked[i].rerank_score > *reranked[i - 1].rerank_score) {
      out.fail(label + ": re-ranked list not sorted");
    }
  }
}

Outcome orchestrator_fill() {
  Outcome out;
  // Constructed fixture: 5 full-phrase paragraphs, 10 bigram-only, 3
  // keyword-only (prefix matches) and 5 bridge paragraphs with no query term
  // that repeat the distinctive words of one phrase paragraph, so the second
  // hop of dense retrieval lands on them.
  std::vector<SourceDocument> docs;
  auto add = [&](const std::string& id, const std::string& text) {
    docs.push_back(fixtures::doc(id, text));
  };
  const std::vector<std::string> bridge = {
      "harbour ferry lantern quarry willow meadow copper",
      "glacier thistle saddle orchard pebble falcon timber",
      "cobalt marrow vessel tundra ribbon canyon walnut",
      "prairie mosaic hollow kettle cinder beacon sparrow",
      "drizzle furrow lagoon parcel tinsel summit oyster"};
  for (int i = 0; i < 5; ++i) add("phr-" + std::to_string(i), "alpha beta gamma " + bridge[i]);
  for (int i = 0; i < 5; ++i) add("big-a" + std::to_string(i), "the alpha beta pair appears in trial " + std::to_string(i));
  for (int i = 0; i < 5; ++i) add("big-b" + std::to_string(i), "later beta gamma readings in cohort " + std::to_string(i));
  add("key-0", "alphabetical listing of reagents");
  add("key-1", "gammaglobulin levels were measured");
  add("key-2", "a betablocker was administered");
  for (int i = 0; i < 5; ++i) add("sem-" + std::to_string(i), bridge[i]);
  const fixtures::MemoryIndex mem(docs);

  const RetrievalConfig cfg;  // r = 20
  const QueryAst q = parse_query("alpha beta gamma");
  check_fill(q, cfg, mem, out, "fixture");
  const auto filled = fill_results(q, cfg, mem.sources());
  std::map<Mechanism, int> per;
  for (const auto& r : filled) ++per[r.mechanism];
  if (filled.size() != 20 || per[Mechanism::Phrase] != 5 || per[Mechanism::Bigram] != 10 ||
      per[Mechanism::Keyword] != 3 || per[Mechanism::Semantic] != 2) {
    out.fail("fixture: " + std::to_string(filled.size()) + " results (phrase " +
             std::to_string(per[Mechanism::Phrase]) + ", bigram " +
             std::to_string(per[Mechanism::Bigram]) + ", keyword " +
             std::to_string(per[Mechanism::Keyword]) + ", semantic " +
             std::to_string(per[Mechanism::Semantic]) + ")");
  }

  // Random corpora and queries.
  synthetic::Rng rng(707);
  for (int c = 0; c < 30 && out.pass; ++c) {
    const auto vocab = synthetic::vocabulary(rng, synthetic::uniform(rng, 5, 30), 3, 9);
    std::vector<SourceDocument> rdocs;
    for (std::size_t d = 0, n = synthetic::uniform(rng, 3, 40); d < n; ++d) {
      std::vector<std::string> body;
      for (std::size_t b = synthetic::uniform(rng, 0, 2); b > 0; --b) {
        body.push_back(synthetic::join(synthetic::sentence(rng, vocab, 3, 25)));
      }
      rdocs.push_back(fixtures::doc("r" + std::to_string(d),
                                    synthetic::join(synthetic::sentence(rng, vocab, 3, 25)), body));
    }
    const fixtures::MemoryIndex rmem(rdocs);
    RetrievalConfig rcfg;
    rcfg.r = synthetic::uniform(rng, 1, 25);
    for (int qi = 0; qi < 3; ++qi) {
      check_fill(parse_query(synthetic::join(synthetic::sentence(rng, vocab, 1, 4))), rcfg, rmem, out,
                 fmt("corpus %.0f query %.0f", c, qi));
    }
  }
  if (out.pass) out.detail = "fixture fills 5 phrase + 10 bigram + 3 keyword + 2 semantic = 20; 90 random fills hold";
  return out;
}

Outcome metrics() {
  Outcome out;
  const std::vector<std::string> ranking = {"d1", "d2", "d3"};
  const QueryJudgments grades = {{"d1", 0}, {"d2", 2}, {"d3", 3}};
  const double formula = (2 / std::log2(3.0) + 3 / 2.0) / (3 + 2 / std::log2(3.0));
  const double got = ndcg_at_k(ranking, grades, 3);
  if (std::abs(got - formula) > 1e-6 || std::abs(got - 0.6480) > 5e-5) {
    out.fail(fmt("NDCG of [0,2,3] is %.6f", got));
  }
  const std::vector<std::string> ideal = {"d3", "d2", "d1"};
  if (std::abs(ndcg_at_k(ideal, grades, 3) - 1.0) > 1e-12) out.fail("ideal ranking is not 1.0");

  synthetic::Rng rng(808);
  const std::vector<std::string> words = {"the", "a", "bats", "Bats", "1200", "species", "an",
                                          "virus", "ACE2", "human", "cells,", "of", "2020."};
  for (int c = 0; c < 100 && out.pass; ++c) {
    std::vector<std::string> run;
    QueryJudgments judged;
    for (std::size_t i = 0, n = synthetic::uniform(rng, 0, 15); i < n; ++i) {
      run.push_back("d" + std::to_string(i));
    }
    for (std::size_t i = 0; i < 20; ++i) {
      if (synthetic::uniform(rng, 0, 2) == 0) judged["d" + std::to_string(i)] = static_cast<int>(synthetic::uniform(rng, 0, 3));
    }
    std::shuffle(run.begin(), run.end(), rng);
    const std::size_t k = synthetic::uniform(rng, 1, 20);
    if (precision_at_k(run, judged, k) != oracle::precision_at_k(run, judged, k)) {
      out.fail(fmt("case %.0f: P@%.0f differs", c, static_cast<double>(k)));
    }
    if (std::abs(ndcg_at_k(run, judged, k) - oracle::ndcg_at_k(run, judged, k)) > 1e-12) {
      out.fail(fmt("case %.0f: NDCG@%.0f differs", c, static_cast<double>(k)));
    }
    auto phrase = [&] {
      std::vector<std::string> w;
      for (std::size_t i = synthetic::uniform(rng, 0, 4); i > 0; --i) {
        w.push_back(words[synthetic::uniform(rng, 0, words.size() - 1)]);
      }
      return synthetic::join(w);
    };
    const std::string pred = phrase();
    std::vector<std::string> golds;
    for (std::size_t i = synthetic::uniform(rng, 1, 3); i > 0; --i) golds.push_back(phrase());
    if (c % 4 == 0) golds.push_back(pred);
    if (exact_match(pred, golds) != oracle::exact_match(pred, golds)) {
      out.fail(fmt("case %.0f: EM differs", c));
    }
    if (std::abs(token_f1(pred, golds) - oracle::token_f1(pred, golds)) > 1e-12) {
      out.fail(fmt("case %.0f: F1 differs", c));
    }
  }
  if (out.pass) out.detail = fmt("NDCG([0,2,3]) = %.6f, ideal = 1; 100 random P@k/NDCG/EM/F1 cases agree", got);
  return out;
}

Outcome desk_benchmark() {
  Outcome out;
  const auto docs = synthetic::documents(1000, 909);
  fixtures::ScratchDir first("acc-bench-a");
  fixtures::ScratchDir second("acc-bench-b");
  EngineConfig cfg;
  cfg.index_dir = first.str();
  const ReferenceEncoder enc(cfg.plugins.encoder_dimension, cfg.plugins.encoder_seed);

  const auto t0 = Clock::now();
  BuildOptions opts;
  const IndexManifest a = build_index(docs, cfg, enc, opts, first.str());
  const double build_s = seconds_since(t0);
  opts.threads = 1;
  const IndexManifest b = build_index(docs, cfg, enc, opts, second.str());

  if (build_s >= 60) out.fail(fmt("indexing took %.1f s", build_s));
  if (a.fingerprint != b.fingerprint) out.fail("fingerprints differ between runs");
  for (auto name : kIndexFiles) {
    const std::string n(name);
    if (fixtures::slurp(first.file(n)) != fixtures::slurp(second.file(n))) {
      out.fail(n + " differs between runs");
    }
  }

  cfg.retrieval.semantic_enabled = false;
  const auto engine = Engine::open(cfg);
  synthetic::Rng rng(910);
  std::vector<double> ms;
  for (int i = 0; i < 101; ++i) {
    const auto& d = docs[synthetic::uniform(rng, 0, docs.size() - 1)];
    const auto words = analyze(d.abstract_text, AnalyzerConfig{});
    const std::size_t start = synthetic::uniform(rng, 0, words.size() - 3);
    const std::string q = words[start] + " " + words[start + 1] + " " + words[start + 2];
    const auto q0 = Clock::now();
    const auto resp = engine->search(q, std::nullopt, false);
    ms.push_back(seconds_since(q0) * 1000);
    if (resp.results.empty()) out.fail("query '" + q + "' returned nothing");
  }
  std::sort(ms.begin(), ms.end());
  const double p50 = ms[ms.size() / 2];
  if (p50 >= 50) out.fail(fmt("lexical p50 %.1f ms", p50));
  if (out.pass) {
    out.detail = fmt("1000 docs indexed in %.2f s, lexical p50 %.2f ms", build_s, p50) +
                 ", re-run byte-identical (" + a.fingerprint.substr(0, 12) + ")";
  }
  return out;
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::warn);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"bm25-oracle-equivalence", bm25_equivalence},
      {"phrase-search-completeness", phrase_completeness},
      {"edge-ngram-definition", edge_ngram_definition},
      {"spell-correction", spell_correction},
      {"multi-hop-exactness", multi_hop_exactness},
      {"faceted-refinement", faceted_refinement},
      {"orchestrator-fill-contract", orchestrator_fill},
      {"metrics", metrics},
      {"desk-benchmark", desk_benchmark},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
