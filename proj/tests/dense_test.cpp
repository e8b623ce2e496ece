#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "biosearch/dense.hpp"
#include "biosearch/errors.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace biosearch;

namespace {

std::vector<Passage> make_passages(const std::vector<std::string>& texts) {
  std::vector<Passage> out;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    Passage p;
    p.doc_id = "d" + std::to_string(i);
    p.passage_id = p.doc_id + "@0";
    p.text = texts[i];
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

TEST(ReferenceEncoder, UnitNormAndDeterministic) {
  const ReferenceEncoder enc(256, 13);
  const Embedding a = enc.encode_passage("Bats are the main reservoir of coronaviruses.");
  ASSERT_EQ(a.size(), 256u);
  EXPECT_NEAR(oracle::dot(a, a), 1.0, 1e-12);
  EXPECT_EQ(a, ReferenceEncoder(256, 13).encode_passage("Bats are the main reservoir of coronaviruses."));
  EXPECT_NE(a, ReferenceEncoder(256, 14).encode_passage("Bats are the main reservoir of coronaviruses."));
  EXPECT_EQ(enc.identifier(), "reference-hash-v1:d=256:seed=13");
}

TEST(ReferenceEncoder, NormalizesSurfaceForms) {
  const ReferenceEncoder enc(128, 1);
  EXPECT_EQ(enc.encode_passage("BATS, Reservoir!"), enc.encode_passage("bats reservoir"));
}

TEST(ReferenceEncoder, EmptyTextIsZero) {
  const ReferenceEncoder enc(64, 1);
  for (double x : enc.encode_passage("")) EXPECT_EQ(x, 0.0);
}

TEST(ReferenceEncoder, SimilarTextScoresHigher) {
  const ReferenceEncoder enc(256, 13);
  const Embedding q = enc.encode_query("main reservoir of coronaviruses", {});
  const double near = inner_product(q, enc.encode_passage("Bats are the main reservoir of coronaviruses."));
  const double far = inner_product(q, enc.encode_passage("Masks reduce droplet transmission indoors."));
  EXPECT_GT(near, far);
}

TEST(ReferenceEncoder, QueryIncludesPriorPassages) {
  const ReferenceEncoder enc(256, 13);
  const std::vector<std::string> prior = {"bats"};
  EXPECT_EQ(enc.encode_query("how many species", prior), enc.encode_passage("how many species bats"));
  EXPECT_THROW(ReferenceEncoder(4, 1), ConfigError);
}

TEST(DenseIndex, MipsMatchesBruteForce) {
  synthetic::Rng rng(3);
  const ReferenceEncoder enc(64, 7);
  const auto vocab = synthetic::vocabulary(rng, 25);
  std::vector<std::string> texts;
  for (int i = 0; i < 40; ++i) texts.push_back(synthetic::join(synthetic::sentence(rng, vocab, 3, 15)));
  const auto passages = make_passages(texts);
  const DenseIndex index = DenseIndex::build(passages, enc);
  for (int q = 0; q < 20; ++q) {
    const Embedding qv = enc.encode_query(synthetic::join(synthetic::sentence(rng, vocab, 2, 5)), {});
    std::vector<std::pair<double, std::string>> brute;
    for (const auto& p : passages) brute.emplace_back(oracle::dot(qv, enc.encode_passage(p.text)), p.passage_id);
    std::sort(brute.begin(), brute.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    const auto hits = index.mips_search(qv, 7);
    ASSERT_EQ(hits.size(), 7u);
    for (std::size_t i = 0; i < hits.size(); ++i) {
      EXPECT_EQ(hits[i].passage_id, brute[i].second);
      EXPECT_NEAR(hits[i].score, brute[i].first, 1e-12);
    }
  }
  const Embedding wrong(32, 0.0);
  EXPECT_THROW(index.mips_search(wrong, 3), ConfigError);
}

TEST(DenseIndex, DuplicateIdsRejected) {
  auto passages = make_passages({"a b", "c d"});
  passages[1].passage_id = passages[0].passage_id;
  EXPECT_THROW(DenseIndex::build(passages, ReferenceEncoder(16, 1)), DuplicateError);
}

TEST(DenseIndex, SaveLoadKeepsFloat32Values) {
  const ReferenceEncoder enc(32, 5);
  const DenseIndex index = DenseIndex::build(make_passages({"alpha beta", "gamma delta", "beta gamma"}), enc);
  std::stringstream ss;
  index.save(ss);
  const DenseIndex back = DenseIndex::load(ss);
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back.encoder_id(), enc.identifier());
  EXPECT_EQ(back.passage_id(2), index.passage_id(2));
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t d = 0; d < 32; ++d) {
      EXPECT_EQ(back.vector(i)[d], static_cast<double>(static_cast<float>(index.vector(i)[d])));
    }
  }
  std::stringstream garbage("nope");
  EXPECT_THROW(DenseIndex::load(garbage), FormatError);
}

TEST(MultiHop, ExhaustivePairsWithFullBeam) {
  synthetic::Rng rng(9);
  const ReferenceEncoder enc(128, 13);
  for (int c = 0; c < 10; ++c) {
    const auto vocab = synthetic::vocabulary(rng, 20);
    std::vector<std::string> texts;
    std::set<std::string> seen;
    while (texts.size() < 6) {
      auto t = synthetic::join(synthetic::sentence(rng, vocab, 3, 10));
      if (seen.insert(t).second) texts.push_back(t);
    }
    const auto passages = make_passages(texts);
    const DenseIndex index = DenseIndex::build(passages, enc);
    PassageTextLookup lookup;
    for (const auto& p : passages) lookup[p.passage_id] = p.text;
    const std::string question = synthetic::join(synthetic::sentence(rng, vocab, 3, 6));
    MdrConfig cfg;
    cfg.beam_k = 6;
    cfg.chain_k = 36;
    const auto chains = multi_hop_retrieve(question, enc, index, lookup, cfg);
    ASSERT_EQ(chains.size(), 30u);
    double best = -1e9;
    std::vector<std::string> best_ids;
    for (std::size_t i = 0; i < 6; ++i) {
      const Embedding q1 = enc.encode_query(question, std::vector<std::string>{texts[i]});
      const double s1 = oracle::dot(enc.encode_query(question, {}), enc.encode_passage(texts[i]));
      for (std::size_t j = 0; j < 6; ++j) {
        if (i == j) continue;
        const double s = s1 + oracle::dot(q1, enc.encode_passage(texts[j]));
        const std::vector<std::string> ids = {passages[i].passage_id, passages[j].passage_id};
        if (s > best || (s == best && ids < best_ids)) {
          best = s;
          best_ids = ids;
        }
      }
    }
    EXPECT_EQ(chains[0].passages, best_ids);
    EXPECT_NEAR(chains[0].combined_score, best, 1e-9);
    for (std::size_t i = 1; i < chains.size(); ++i) {
      EXPECT_GE(chains[i - 1].combined_score, chains[i].combined_score);
    }
  }
}

TEST(MultiHop, ChainsNeverRepeatPassagesAndRespectLimits) {
  const ReferenceEncoder enc(64, 2);
  const auto passages = make_passages({"bats reservoir", "species of bats", "masks", "vaccines"});
  const DenseIndex index = DenseIndex::build(passages, enc);
  PassageTextLookup lookup;
  for (const auto& p : passages) lookup[p.passage_id] = p.text;
  MdrConfig cfg;
  cfg.iterations = 3;
  cfg.beam_k = 2;
  cfg.chain_k = 3;
  const auto chains = multi_hop_retrieve("bats species", enc, index, lookup, cfg);
  ASSERT_EQ(chains.size(), 3u);
  for (const auto& c : chains) {
    ASSERT_EQ(c.passages.size(), 3u);
    EXPECT_EQ(std::set<std::string>(c.passages.begin(), c.passages.end()).size(), 3u);
    EXPECT_NEAR(c.combined_score, c.hop_scores[0] + c.hop_scores[1] + c.hop_scores[2], 1e-12);
  }
  cfg.combine = MdrConfig::Combine::Product;
  for (const auto& c : multi_hop_retrieve("bats species", enc, index, lookup, cfg)) {
    EXPECT_NEAR(c.combined_score, c.hop_scores[0] * c.hop_scores[1] * c.hop_scores[2], 1e-12);
  }
}

TEST(MultiHop, TooFewPassagesGivesNoChains) {
  const ReferenceEncoder enc(32, 2);
  const auto passages = make_passages({"only one"});
  const DenseIndex index = DenseIndex::build(passages, enc);
  PassageTextLookup lookup = {{passages[0].passage_id, passages[0].text}};
  EXPECT_TRUE(multi_hop_retrieve("one", enc, index, lookup, MdrConfig{}).empty());
  EXPECT_TRUE(multi_hop_retrieve("one", enc, DenseIndex{}, lookup, MdrConfig{}).empty());
  MdrConfig bad;
  bad.beam_k = 0;
  EXPECT_THROW(bad.validate(), ConfigError);
}
