#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "biosearch/corpus.hpp"

namespace biosearch {

using Embedding = std::vector<double>;

double inner_product(std::span<const double> a, std::span<const double> b);

/// Maps passages and (multi-hop) queries into one vector space.
class Encoder {
 public:
  virtual ~Encoder() = default;

  virtual std::size_t dimension() const = 0;
  /// Stable identifier stored in the dense index header.
  virtual std::string identifier() const = 0;

  virtual Embedding encode_passage(std::string_view text) const = 0;
  virtual Embedding encode_query(std::string_view question,
                                 std::span<const std::string> prior_passages) const = 0;

  /// Default loops over encode_passage; remote encoders batch.
  virtual std::vector<Embedding> encode_passages(std::span<const std::string> texts) const;
};

/// Deterministic hashing encoder standing in for a trained model. Features
/// are normalized word unigrams plus character trigrams of each word; each
/// feature adds a seeded ±1 to a few coordinates (a sparse random sign
/// projection) and the result is L2-normalized. Queries are encoded as the
/// question followed by the prior passage texts.
class ReferenceEncoder final : public Encoder {
 public:
  /// Throws ConfigError when dimension < 8.
  ReferenceEncoder(std::size_t dimension, std::uint64_t seed);

  std::size_t dimension() const override { return dimension_; }
  std::string identifier() const override;
  Embedding encode_passage(std::string_view text) const override;
  Embedding encode_query(std::string_view question,
                         std::span<const std::string> prior_passages) const override;

  static constexpr std::size_t kProjectionsPerFeature = 4;
  static constexpr double kTrigramWeight = 0.5;

 private:
  void add_feature(Embedding& v, std::string_view kind, std::string_view feature,
                   double weight) const;

  std::size_t dimension_;
  std::uint64_t seed_;
};

struct MdrConfig {
  int iterations = 2;
  int beam_k = 5;
  int chain_k = 5;
  enum class Combine : std::uint8_t { Sum, Product } combine = Combine::Sum;

  /// Throws ConfigError unless every count is >= 1.
  void validate() const;
};

struct HopChain {
  std::vector<std::string> passages;
  std::vector<double> hop_scores;
  double combined_score = 0.0;
};

struct DenseHit {
  std::string passage_id;
  double score = 0.0;
};

/// Flat (exhaustive) inner-product index. Immutable once built.
class DenseIndex {
 public:
  DenseIndex() = default;

  /// Throws DuplicateError on repeated passage ids and BuildError when the
  /// encoder returns a vector of the wrong dimension.
  static DenseIndex build(std::span<const Passage> passages, const Encoder& encoder);
  static DenseIndex from_vectors(std::vector<std::string> ids, std::vector<Embedding> vectors,
                                 std::size_t dimension, std::string encoder_id);

  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }
  std::size_t dimension() const noexcept { return dimension_; }
  const std::string& encoder_id() const noexcept { return encoder_id_; }
  const std::string& passage_id(std::size_t i) const { return ids_[i]; }
  std::span<const double> vector(std::size_t i) const {
    return {data_.data() + i * dimension_, dimension_};
  }
  std::ptrdiff_t find(std::string_view passage_id) const;

  /// Inner product of `q` with every stored vector, in storage order.
  std::vector<double> scores(std::span<const double> q) const;

  /// Exact top-k by inner product, ties by passage id. Throws ConfigError on
  /// dimension mismatch.
  std::vector<DenseHit> mips_search(std::span<const double> q, std::size_t k) const;

  /// Header, little-endian float32 vectors, then the passage id table.
  void save(std::ostream& out) const;
  static DenseIndex load(std::istream& in);

  static constexpr std::uint32_t kFormatVersion = 1;

 private:
  void check_dimension(std::size_t d) const;

  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> lookup_;
  std::vector<double> data_;
  std::size_t dimension_ = 0;
  std::string encoder_id_;
};

/// Resolves passage ids to their text for query reformulation.
using PassageTextLookup = std::unordered_map<std::string, std::string>;

/// Iterative retrieval. Hop 1 takes the top beam_k passages for the question;
/// each later hop re-encodes the question with the chain's passages and
/// extends every chain by its top beam_k unseen passages. Chains that cannot
/// reach `iterations` passages are dropped. Returns the best chain_k chains
/// by combined score, ties broken by the passage id sequence.
std::vector<HopChain> multi_hop_retrieve(std::string_view question, const Encoder& encoder,
                                         const DenseIndex& index,
                                         const PassageTextLookup& passage_text,
                                         const MdrConfig& cfg);

}  // namespace biosearch
