#include "biosearch/dense.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "biosearch/analysis.hpp"
#include "biosearch/binary_io.hpp"
#include "biosearch/errors.hpp"

namespace biosearch {

double inner_product(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

std::vector<Embedding> Encoder::encode_passages(std::span<const std::string> texts) const {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(encode_passage(t));
  return out;
}

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

ReferenceEncoder::ReferenceEncoder(std::size_t dimension, std::uint64_t seed)
    : dimension_(dimension), seed_(seed) {
  if (dimension < 8) throw ConfigError("reference encoder: dimension must be >= 8");
}

std::string ReferenceEncoder::identifier() const {
  return "reference-hash-v1:d=" + std::to_string(dimension_) + ":seed=" + std::to_string(seed_);
}

void ReferenceEncoder::add_feature(Embedding& v, std::string_view kind, std::string_view feature,
                                   double weight) const {
  const std::uint64_t h = fnv1a(feature, fnv1a(kind) ^ splitmix64(seed_));
  for (std::size_t j = 0; j < kProjectionsPerFeature; ++j) {
    const std::uint64_t x = splitmix64(h + j * 0x632be59bd9b4e019ULL);
    const double sign = (x >> 63) != 0 ? -1.0 : 1.0;
    v[static_cast<std::size_t>(x % dimension_)] += sign * weight;
  }
}

Embedding ReferenceEncoder::encode_passage(std::string_view text) const {
  Embedding v(dimension_, 0.0);
  for (const auto& word : analyze(text, AnalyzerConfig{})) {
    add_feature(v, "w", word, 1.0);
    const std::string padded = "#" + word + "#";
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
      add_feature(v, "c", std::string_view(padded).substr(i, 3), kTrigramWeight);
    }
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (double& x : v) x /= norm;
  }
  return v;
}

Embedding ReferenceEncoder::encode_query(std::string_view question,
                                         std::span<const std::string> prior_passages) const {
  std::string text(question);
  for (const auto& p : prior_passages) {
    text.push_back(' ');
    text += p;
  }
  return encode_passage(text);
}

void MdrConfig::validate() const {
  if (iterations < 1) throw ConfigError("mdr: iterations must be >= 1");
  if (beam_k < 1) throw ConfigError("mdr: beam_k must be >= 1");
  if (chain_k < 1) throw ConfigError("mdr: chain_k must be >= 1");
}

DenseIndex DenseIndex::build(std::span<const Passage> passages, const Encoder& encoder) {
  std::vector<std::string> ids;
  std::vector<std::string> texts;
  ids.reserve(passages.size());
  texts.reserve(passages.size());
  for (const auto& p : passages) {
    ids.push_back(p.passage_id);
    texts.push_back(p.text);
  }
  std::vector<Embedding> vectors = encoder.encode_passages(texts);
  if (vectors.size() != ids.size()) {
    throw BuildError("encoder returned " + std::to_string(vectors.size()) + " vectors for " +
                      std::to_string(ids.size()) + " passages");
  }
  return from_vectors(std::move(ids), std::move(vectors), encoder.dimension(),
                      encoder.identifier());
}

DenseIndex DenseIndex::from_vectors(std::vector<std::string> ids, std::vector<Embedding> vectors,
                                    std::size_t dimension, std::string encoder_id) {
  DenseIndex idx;
  idx.dimension_ = dimension;
  idx.encoder_id_ = std::move(encoder_id);
  idx.data_.reserve(ids.size() * dimension);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (vectors[i].size() != dimension) {
      throw BuildError("embedding for '" + ids[i] + "' has dimension " +
                        std::to_string(vectors[i].size()) + ", expected " +
                        std::to_string(dimension));
    }
    for (double x : vectors[i]) {
      if (!std::isfinite(x)) throw BuildError("embedding for '" + ids[i] + "' is not finite");
    }
    if (!idx.lookup_.emplace(ids[i], i).second) {
      throw DuplicateError("duplicate passage id '" + ids[i] + "'");
    }
    idx.data_.insert(idx.data_.end(), vectors[i].begin(), vectors[i].end());
  }
  idx.ids_ = std::move(ids);
  return idx;
}

std::ptrdiff_t DenseIndex::find(std::string_view passage_id) const {
  auto it = lookup_.find(std::string(passage_id));
  return it == lookup_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
}

void DenseIndex::check_dimension(std::size_t d) const {
  if (d != dimension_ && !ids_.empty()) {
    throw ConfigError("query dimension " + std::to_string(d) + " does not match index dimension " +
                      std::to_string(dimension_));
  }
}

std::vector<double> DenseIndex::scores(std::span<const double> q) const {
  check_dimension(q.size());
  std::vector<double> out(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) out[i] = inner_product(q, vector(i));
  return out;
}

namespace {

// Indices of the k best scores, excluding `skip`, ordered by (score desc, id asc).
std::vector<std::size_t> select_top(const std::vector<double>& scores,
                                    const std::vector<std::string>& ids, std::size_t k,
                                    std::span<const std::size_t> skip = {}) {
  std::vector<std::size_t> order;
  order.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (std::find(skip.begin(), skip.end(), i) == skip.end()) order.push_back(i);
  }
  auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids[a] < ids[b];
  };
  k = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    better);
  order.resize(k);
  return order;
}

}  // namespace

std::vector<DenseHit> DenseIndex::mips_search(std::span<const double> q, std::size_t k) const {
  const std::vector<double> s = scores(q);
  std::vector<DenseHit> hits;
  for (std::size_t i : select_top(s, ids_, k)) hits.push_back({ids_[i], s[i]});
  return hits;
}

namespace {

constexpr char kDenseMagic[8] = {'B', 'S', 'D', 'N', 'S', 0, 0, 0};

}  // namespace

void DenseIndex::save(std::ostream& out) const {
  binary::Writer w(out);
  w.bytes(kDenseMagic, sizeof kDenseMagic);
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(dimension_));
  w.u32(static_cast<std::uint32_t>(ids_.size()));
  w.str(encoder_id_);
  for (double x : data_) w.f32(static_cast<float>(x));
  for (const auto& id : ids_) w.str(id);
}

DenseIndex DenseIndex::load(std::istream& in) {
  binary::Reader r(in);
  char magic[8];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kDenseMagic, sizeof magic) != 0) {
    throw FormatError("dense index: bad magic number");
  }
  const std::uint32_t version = r.u32();
  if (version != kFormatVersion) {
    throw FormatError("dense index: format version " + std::to_string(version) +
                      " is not supported (expected " + std::to_string(kFormatVersion) + ")");
  }
  const std::size_t dimension = r.u32();
  const std::size_t count = r.u32();
  std::string encoder_id = r.str();
  std::vector<Embedding> vectors(count, Embedding(dimension));
  for (auto& v : vectors) {
    for (double& x : v) x = r.f32();
  }
  std::vector<std::string> ids;
  ids.reserve(count);
  for (std::size_t i = 0; i < count; ++i) ids.push_back(r.str());
  return from_vectors(std::move(ids), std::move(vectors), dimension, std::move(encoder_id));
}

std::vector<HopChain> multi_hop_retrieve(std::string_view question, const Encoder& encoder,
                                         const DenseIndex& index,
                                         const PassageTextLookup& passage_text,
                                         const MdrConfig& cfg) {
  cfg.validate();
  if (index.empty()) return {};

  std::vector<std::string> ids(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) ids[i] = index.passage_id(i);

  struct Partial {
    std::vector<std::size_t> passages;
    std::vector<double> scores;
  };
  const auto beam = static_cast<std::size_t>(cfg.beam_k);

  std::vector<Partial> beams;
  {
    const Embedding q = encoder.encode_query(question, {});
    const std::vector<double> s = index.scores(q);
    for (std::size_t i : select_top(s, ids, beam)) beams.push_back({{i}, {s[i]}});
  }

  for (int hop = 2; hop <= cfg.iterations; ++hop) {
    std::vector<Partial> next;
    for (const auto& chain : beams) {
      std::vector<std::string> texts;
      for (std::size_t i : chain.passages) {
        auto it = passage_text.find(ids[i]);
        if (it == passage_text.end()) {
          throw NotFoundError("no text for passage '" + ids[i] + "'");
        }
        texts.push_back(it->second);
      }
      const Embedding q = encoder.encode_query(question, texts);
      const std::vector<double> s = index.scores(q);
      for (std::size_t i : select_top(s, ids, beam, chain.passages)) {
        Partial extended = chain;
        extended.passages.push_back(i);
        extended.scores.push_back(s[i]);
        next.push_back(std::move(extended));
      }
    }
    beams = std::move(next);
  }

  std::vector<HopChain> chains;
  chains.reserve(beams.size());
  for (auto& partial : beams) {
    HopChain c;
    for (std::size_t i : partial.passages) c.passages.push_back(ids[i]);
    c.hop_scores = std::move(partial.scores);
    if (cfg.combine == MdrConfig::Combine::Sum) {
      c.combined_score = std::accumulate(c.hop_scores.begin(), c.hop_scores.end(), 0.0);
    } else {
      c.combined_score = std::accumulate(c.hop_scores.begin(), c.hop_scores.end(), 1.0,
                                         std::multiplies<>());
    }
    chains.push_back(std::move(c));
  }
  std::sort(chains.begin(), chains.end(), [](const HopChain& a, const HopChain& b) {
    if (a.combined_score != b.combined_score) return a.combined_score > b.combined_score;
    return a.passages < b.passages;
  });
  if (chains.size() > static_cast<std::size_t>(cfg.chain_k)) {
    chains.resize(static_cast<std::size_t>(cfg.chain_k));
  }
  return chains;
}

}  // namespace biosearch
