#include "biosearch/plugins.hpp"

#include <cmath>
#include <semaphore>
#include <thread>

#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "biosearch/errors.hpp"

namespace biosearch {

using nlohmann::json;

void HttpClientConfig::validate(const std::string& name) const {
  if (url.empty()) throw ConfigError(name + ": url is required for the http plugin");
  if (timeout_ms <= 0) throw ConfigError(name + ": timeout_ms must be > 0");
  if (retries < 0) throw ConfigError(name + ": retries must be >= 0");
  if (batch_size == 0) throw ConfigError(name + ": batch_size must be >= 1");
  if (max_concurrency == 0) throw ConfigError(name + ": max_concurrency must be >= 1");
}

template <typename T>
std::unique_ptr<T> PluginRegistry<T>::create(const std::string& name,
                                             const PluginSettings& settings) const {
  auto it = factories_.find(name);
  if (it == factories_.end()) {
    std::string known;
    for (const auto& n : names()) known += (known.empty() ? "" : ", ") + n;
    throw ConfigError("unknown plugin '" + name + "' (registered: " + known + ")");
  }
  return it->second(settings);
}

template class PluginRegistry<Encoder>;
template class PluginRegistry<Reranker>;
template class PluginRegistry<Reader>;

PluginRegistry<Encoder>& encoder_registry() {
  static PluginRegistry<Encoder> reg = [] {
    PluginRegistry<Encoder> r;
    r.add("reference", [](const PluginSettings& s) {
      return std::make_unique<ReferenceEncoder>(s.encoder_dimension, s.encoder_seed);
    });
    r.add("http", [](const PluginSettings& s) {
      return std::make_unique<HttpEncoder>(s.encoder_http, s.encoder_dimension);
    });
    return r;
  }();
  return reg;
}

PluginRegistry<Reranker>& reranker_registry() {
  static PluginRegistry<Reranker> reg = [] {
    PluginRegistry<Reranker> r;
    r.add("baseline", [](const PluginSettings&) { return std::make_unique<BaselineReranker>(); });
    r.add("http", [](const PluginSettings& s) {
      return std::make_unique<HttpReranker>(s.reranker_http);
    });
    return r;
  }();
  return reg;
}

PluginRegistry<Reader>& reader_registry() {
  static PluginRegistry<Reader> reg = [] {
    PluginRegistry<Reader> r;
    r.add("baseline-extractive",
          [](const PluginSettings&) { return std::make_unique<BaselineExtractiveReader>(); });
    r.add("http", [](const PluginSettings& s) { return std::make_unique<HttpReader>(s.reader_http); });
    return r;
  }();
  return reg;
}

std::unique_ptr<Encoder> make_encoder(const PluginSettings& settings) {
  return encoder_registry().create(settings.encoder, settings);
}

std::unique_ptr<Reranker> make_reranker(const PluginSettings& settings) {
  return reranker_registry().create(settings.reranker, settings);
}

std::unique_ptr<Reader> make_reader(const PluginSettings& settings) {
  return reader_registry().create(settings.reader, settings);
}

void check_plugins(const PluginSettings& settings) {
  auto require = [](bool ok, const char* kind, const std::string& name) {
    if (!ok) throw ConfigError(std::string("unknown ") + kind + " plugin '" + name + "'");
  };
  require(encoder_registry().contains(settings.encoder), "encoder", settings.encoder);
  require(reranker_registry().contains(settings.reranker), "reranker", settings.reranker);
  require(reader_registry().contains(settings.reader), "reader", settings.reader);
  if (settings.encoder == "http") settings.encoder_http.validate("encoder");
  if (settings.reranker == "http") settings.reranker_http.validate("reranker");
  if (settings.reader == "http") settings.reader_http.validate("reader");
}

namespace {

/// JSON-over-HTTP POST with retries and a bound on in-flight requests.
class JsonClient {
 public:
  explicit JsonClient(HttpClientConfig cfg)
      : cfg_(std::move(cfg)), slots_(static_cast<std::ptrdiff_t>(cfg_.max_concurrency)) {
    cfg_.validate("http plugin");
  }

  const HttpClientConfig& config() const noexcept { return cfg_; }

  json post(const std::string& path, const json& body) const {
    slots_.acquire();
    struct Release {
      std::counting_semaphore<>& s;
      ~Release() { s.release(); }
    } release{slots_};

    const std::string payload = body.dump();
    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
      httplib::Client client(cfg_.url);
      const auto ms = std::chrono::milliseconds(cfg_.timeout_ms);
      client.set_connection_timeout(ms);
      client.set_read_timeout(ms);
      client.set_write_timeout(ms);
      auto res = client.Post(path, payload, "application/json");
      if (!res) {
        last_error = httplib::to_string(res.error());
      } else if (res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
      } else if (res->status != 200) {
        throw PluginError(cfg_.url + path + ": HTTP " + std::to_string(res->status) + ": " +
                          res->body);
      } else {
        try {
          return json::parse(res->body);
        } catch (const json::exception& e) {
          throw PluginError(cfg_.url + path + ": malformed reply: " + e.what());
        }
      }
      spdlog::warn("{}{}: attempt {} failed: {}", cfg_.url, path, attempt + 1, last_error);
      if (attempt < cfg_.retries) {
        std::this_thread::sleep_for(std::chrono::milliseconds(50 << attempt));
      }
    }
    throw PluginError(cfg_.url + path + ": giving up after " + std::to_string(cfg_.retries + 1) +
                      " attempts: " + last_error);
  }

 private:
  HttpClientConfig cfg_;
  mutable std::counting_semaphore<> slots_;
};

std::vector<Embedding> parse_embeddings(const json& reply, std::size_t expected,
                                        std::size_t dimension) {
  auto it = reply.find("embeddings");
  if (it == reply.end() || !it->is_array() || it->size() != expected) {
    throw PluginError("encoder reply must hold " + std::to_string(expected) + " embeddings");
  }
  std::vector<Embedding> out;
  for (const auto& row : *it) {
    if (!row.is_array() || row.size() != dimension) {
      throw PluginError("encoder returned a vector of the wrong dimension");
    }
    Embedding v;
    v.reserve(dimension);
    for (const auto& x : row) {
      if (!x.is_number()) throw PluginError("encoder returned a non-numeric coordinate");
      v.push_back(x.get<double>());
    }
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace

struct HttpEncoder::Impl {
  explicit Impl(HttpClientConfig cfg) : client(std::move(cfg)) {}
  JsonClient client;
};

HttpEncoder::HttpEncoder(HttpClientConfig cfg, std::size_t dimension)
    : impl_(std::make_unique<Impl>(std::move(cfg))), dimension_(dimension) {}

HttpEncoder::~HttpEncoder() = default;

std::string HttpEncoder::identifier() const {
  return "http:" + impl_->client.config().url + ":d=" + std::to_string(dimension_);
}

Embedding HttpEncoder::encode_passage(std::string_view text) const {
  const std::string t(text);
  return encode_passages(std::span<const std::string>(&t, 1)).front();
}

std::vector<Embedding> HttpEncoder::encode_passages(std::span<const std::string> texts) const {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  const std::size_t batch = impl_->client.config().batch_size;
  for (std::size_t i = 0; i < texts.size(); i += batch) {
    const std::size_t n = std::min(batch, texts.size() - i);
    json body = {{"kind", "passage"},
                 {"texts", std::vector<std::string>(texts.begin() + static_cast<std::ptrdiff_t>(i),
                                                    texts.begin() + static_cast<std::ptrdiff_t>(i + n))}};
    for (auto& v : parse_embeddings(impl_->client.post("/encode", body), n, dimension_)) {
      out.push_back(std::move(v));
    }
  }
  return out;
}

Embedding HttpEncoder::encode_query(std::string_view question,
                                    std::span<const std::string> prior_passages) const {
  json body = {{"kind", "query"},
               {"question", std::string(question)},
               {"prior_passages", std::vector<std::string>(prior_passages.begin(),
                                                           prior_passages.end())}};
  return parse_embeddings(impl_->client.post("/encode", body), 1, dimension_).front();
}

struct HttpReranker::Impl {
  explicit Impl(HttpClientConfig cfg) : client(std::move(cfg)) {}
  JsonClient client;
};

HttpReranker::HttpReranker(HttpClientConfig cfg)
    : impl_(std::make_unique<Impl>(std::move(cfg))) {}

HttpReranker::~HttpReranker() = default;

std::string HttpReranker::identifier() const { return "http:" + impl_->client.config().url; }

double HttpReranker::score(std::string_view query, std::string_view passage) const {
  const std::string p(passage);
  return score_batch(query, std::span<const std::string>(&p, 1)).front();
}

std::vector<double> HttpReranker::score_batch(std::string_view query,
                                              std::span<const std::string> passages) const {
  std::vector<double> out;
  out.reserve(passages.size());
  const std::size_t batch = impl_->client.config().batch_size;
  for (std::size_t i = 0; i < passages.size(); i += batch) {
    const std::size_t n = std::min(batch, passages.size() - i);
    json body = {{"query", std::string(query)},
                 {"passages",
                  std::vector<std::string>(passages.begin() + static_cast<std::ptrdiff_t>(i),
                                           passages.begin() + static_cast<std::ptrdiff_t>(i + n))}};
    const json reply = impl_->client.post("/rerank", body);
    auto it = reply.find("scores");
    if (it == reply.end() || !it->is_array() || it->size() != n) {
      throw PluginError("reranker reply must hold " + std::to_string(n) + " scores");
    }
    for (const auto& s : *it) {
      if (!s.is_number()) throw PluginError("reranker returned a non-numeric score");
      const double v = s.get<double>();
      if (!std::isfinite(v)) throw PluginError("reranker returned a non-finite score");
      out.push_back(std::clamp(v, 0.0, 1.0));
    }
  }
  return out;
}

struct HttpReader::Impl {
  explicit Impl(HttpClientConfig cfg) : client(std::move(cfg)) {}
  JsonClient client;
};

HttpReader::HttpReader(HttpClientConfig cfg)
    : impl_(std::make_unique<Impl>(std::move(cfg))) {}

HttpReader::~HttpReader() = default;

std::string HttpReader::identifier() const { return "http:" + impl_->client.config().url; }

ReaderOutput HttpReader::read(std::string_view question,
                              std::span<const std::string> contexts) const {
  json body = {{"question", std::string(question)},
               {"contexts", std::vector<std::string>(contexts.begin(), contexts.end())}};
  const json reply = impl_->client.post("/read", body);
  ReaderOutput out;
  try {
    out.answer = reply.at("answer").get<std::string>();
    out.confidence = std::clamp(reply.value("confidence", 0.0), 0.0, 1.0);
    const json& ctx = reply.contains("context") ? reply["context"] : json(nullptr);
    if (!ctx.is_null()) {
      ReaderSpan span{ctx.get<std::size_t>(), reply.at("start").get<std::size_t>(),
                      reply.at("end").get<std::size_t>()};
      if (span.context >= contexts.size() || span.end < span.begin ||
          span.end > contexts[span.context].size()) {
        throw PluginError("reader returned a span outside its contexts");
      }
      out.span = span;
    }
  } catch (const json::exception& e) {
    throw PluginError(std::string("malformed reader reply: ") + e.what());
  }
  return out;
}

}  // namespace biosearch
