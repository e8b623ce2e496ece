#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "biosearch/dense.hpp"
#include "biosearch/orchestrator.hpp"

namespace biosearch {

/// Connection settings for a remote model service.
struct HttpClientConfig {
  std::string url;  // scheme://host:port, no trailing path
  int timeout_ms = 5000;
  int retries = 2;
  std::size_t batch_size = 32;
  std::size_t max_concurrency = 4;

  void validate(const std::string& name) const;
};

struct PluginSettings {
  std::string encoder = "reference";
  std::string reranker = "baseline";
  std::string reader = "baseline-extractive";
  std::size_t encoder_dimension = 256;
  std::uint64_t encoder_seed = 13;
  HttpClientConfig encoder_http;
  HttpClientConfig reranker_http;
  HttpClientConfig reader_http;
};

/// Name -> factory table. Unknown names raise ConfigError listing the
/// registered ones.
template <typename T>
class PluginRegistry {
 public:
  using Factory = std::function<std::unique_ptr<T>(const PluginSettings&)>;

  void add(std::string name, Factory factory) { factories_[std::move(name)] = std::move(factory); }
  bool contains(const std::string& name) const { return factories_.count(name) != 0; }
  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [name, f] : factories_) out.push_back(name);
    return out;
  }
  std::unique_ptr<T> create(const std::string& name, const PluginSettings& settings) const;

 private:
  std::map<std::string, Factory> factories_;
};

PluginRegistry<Encoder>& encoder_registry();
PluginRegistry<Reranker>& reranker_registry();
PluginRegistry<Reader>& reader_registry();

std::unique_ptr<Encoder> make_encoder(const PluginSettings& settings);
std::unique_ptr<Reranker> make_reranker(const PluginSettings& settings);
std::unique_ptr<Reader> make_reader(const PluginSettings& settings);

/// Throws ConfigError when any configured identifier is unregistered.
void check_plugins(const PluginSettings& settings);

/// POST {url}/encode. Passages: {"kind":"passage","texts":[...]}; queries:
/// {"kind":"query","question":q,"prior_passages":[...]}. The reply is
/// {"embeddings":[[...], ...]}.
class HttpEncoder final : public Encoder {
 public:
  HttpEncoder(HttpClientConfig cfg, std::size_t dimension);
  ~HttpEncoder() override;

  std::size_t dimension() const override { return dimension_; }
  std::string identifier() const override;
  Embedding encode_passage(std::string_view text) const override;
  Embedding encode_query(std::string_view question,
                         std::span<const std::string> prior_passages) const override;
  std::vector<Embedding> encode_passages(std::span<const std::string> texts) const override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::size_t dimension_;
};

/// POST {url}/rerank with {"query":q,"passages":[...]}; reply {"scores":[...]}.
class HttpReranker final : public Reranker {
 public:
  explicit HttpReranker(HttpClientConfig cfg);
  ~HttpReranker() override;

  std::string identifier() const override;
  double score(std::string_view query, std::string_view passage) const override;
  std::vector<double> score_batch(std::string_view query,
                                  std::span<const std::string> passages) const override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// POST {url}/read with {"question":q,"contexts":[...]}; reply
/// {"answer":a,"context":i,"start":s,"end":e,"confidence":c} where the span
/// fields may be null.
class HttpReader final : public Reader {
 public:
  explicit HttpReader(HttpClientConfig cfg);
  ~HttpReader() override;

  std::string identifier() const override;
  ReaderOutput read(std::string_view question,
                    std::span<const std::string> contexts) const override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace biosearch
