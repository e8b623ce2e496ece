#include "biosearch/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

#include "biosearch/errors.hpp"

namespace biosearch {

using nlohmann::json;

void EngineConfig::validate() const {
  analyzer.validate();
  chunking.validate();
  retrieval.validate();
  spell.validate();
  triplet_weights.validate();
  check_plugins(plugins);
  if (index_dir.empty()) throw ConfigError("index_dir must not be empty");
  if (listen.find(':') == std::string::npos) throw ConfigError("listen must be host:port");
}

namespace {

/// Reads one JSON object, tracking the key path for error messages and
/// rejecting keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + "must be an object");
  }

  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items()) {
      if (seen_.count(key) == 0) throw ConfigError("unknown config key '" + path_ + key + "'");
    }
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw ConfigError("");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->is_number_integer()) throw ConfigError("");
        if constexpr (std::is_unsigned_v<T>) {
          if (it->get<long long>() < 0) throw ConfigError("");
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw ConfigError("");
      } else {
        if (!it->is_string()) throw ConfigError("");
      }
      out = it->get<T>();
    } catch (const std::exception&) {
      throw ConfigError("config key '" + path_ + key + "' has the wrong type");
    }
  }

  /// Nested object, or nullptr when absent.
  const json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string path(const char* key) const { return path_ + key + "."; }

 private:
  std::string where() const { return path_.empty() ? "config " : "config key '" + path_ + "' "; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_http(const json* j, const std::string& path, HttpClientConfig& h) {
  if (j == nullptr) return;
  Section s(*j, path);
  s.get("url", h.url);
  s.get("timeout_ms", h.timeout_ms);
  s.get("retries", h.retries);
  s.get("batch_size", h.batch_size);
  s.get("max_concurrency", h.max_concurrency);
}

json http_json(const HttpClientConfig& h) {
  return {{"url", h.url},
          {"timeout_ms", h.timeout_ms},
          {"retries", h.retries},
          {"batch_size", h.batch_size},
          {"max_concurrency", h.max_concurrency}};
}

}  // namespace

EngineConfig config_from_json(const json& j) {
  EngineConfig cfg;
  Section root(j, "");
  if (const json* a = root.child("analyzer")) {
    Section s(*a, "analyzer.");
    s.get("min_gram", cfg.analyzer.min_gram);
    s.get("max_gram", cfg.analyzer.max_gram);
    s.get("lowercase", cfg.analyzer.lowercase);
    s.get("ascii_fold", cfg.analyzer.ascii_fold);
  }
  if (const json* c = root.child("chunking")) {
    Section s(*c, "chunking.");
    s.get("chunk_size", cfg.chunking.chunk_size);
    s.get("stride", cfg.chunking.stride);
    s.get("passage_limit", cfg.chunking.passage_limit);
  }
  if (const json* b = root.child("bm25")) {
    Section s(*b, "bm25.");
    s.get("k1", cfg.retrieval.bm25.k1);
    s.get("b", cfg.retrieval.bm25.b);
  }
  if (const json* r = root.child("retrieval")) {
    Section s(*r, "retrieval.");
    s.get("r", cfg.retrieval.r);
    s.get("per_mechanism_k", cfg.retrieval.per_mechanism_k);
    s.get("qa_enabled", cfg.retrieval.qa_enabled);
    s.get("semantic_enabled", cfg.retrieval.semantic_enabled);
    s.get("reader_contexts", cfg.retrieval.reader_contexts);
  }
  if (const json* m = root.child("mdr")) {
    Section s(*m, "mdr.");
    s.get("iterations", cfg.retrieval.mdr.iterations);
    s.get("beam_k", cfg.retrieval.mdr.beam_k);
    s.get("chain_k", cfg.retrieval.mdr.chain_k);
    std::string combine = "sum";
    s.get("combine", combine);
    if (combine == "sum") {
      cfg.retrieval.mdr.combine = MdrConfig::Combine::Sum;
    } else if (combine == "product") {
      cfg.retrieval.mdr.combine = MdrConfig::Combine::Product;
    } else {
      throw ConfigError("config key 'mdr.combine' must be 'sum' or 'product'");
    }
  }
  if (const json* sp = root.child("spell")) {
    Section s(*sp, "spell.");
    s.get("max_edit_distance", cfg.spell.max_edit_distance);
  }
  if (const json* w = root.child("triplet_weights")) {
    Section s(*w, "triplet_weights.");
    s.get("core", cfg.triplet_weights.core);
    s.get("meta", cfg.triplet_weights.meta);
  }
  if (const json* p = root.child("plugins")) {
    Section s(*p, "plugins.");
    s.get("encoder", cfg.plugins.encoder);
    s.get("reranker", cfg.plugins.reranker);
    s.get("reader", cfg.plugins.reader);
    s.get("encoder_dimension", cfg.plugins.encoder_dimension);
    s.get("encoder_seed", cfg.plugins.encoder_seed);
    read_http(s.child("encoder_http"), "plugins.encoder_http.", cfg.plugins.encoder_http);
    read_http(s.child("reranker_http"), "plugins.reranker_http.", cfg.plugins.reranker_http);
    read_http(s.child("reader_http"), "plugins.reader_http.", cfg.plugins.reader_http);
  }
  if (const json* e = root.child("evaluation")) {
    Section s(*e, "evaluation.");
    std::string gain = "linear";
    s.get("ndcg_gain", gain);
    cfg.ndcg_gain = gain_from_string(gain);
  }
  root.get("ontology", cfg.ontology_path);
  root.get("relation_synonyms", cfg.relation_synonyms_path);
  root.get("link_substring_fallback", cfg.link_substring_fallback);
  root.get("index_dir", cfg.index_dir);
  root.get("listen", cfg.listen);
  return cfg;
}

json to_json(const EngineConfig& cfg) {
  const auto& r = cfg.retrieval;
  return {
      {"analyzer",
       {{"min_gram", cfg.analyzer.min_gram},
        {"max_gram", cfg.analyzer.max_gram},
        {"lowercase", cfg.analyzer.lowercase},
        {"ascii_fold", cfg.analyzer.ascii_fold}}},
      {"chunking",
       {{"chunk_size", cfg.chunking.chunk_size},
        {"stride", cfg.chunking.stride},
        {"passage_limit", cfg.chunking.passage_limit}}},
      {"bm25", {{"k1", r.bm25.k1}, {"b", r.bm25.b}}},
      {"retrieval",
       {{"r", r.r},
        {"per_mechanism_k", r.per_mechanism_k},
        {"qa_enabled", r.qa_enabled},
        {"semantic_enabled", r.semantic_enabled},
        {"reader_contexts", r.reader_contexts}}},
      {"mdr",
       {{"iterations", r.mdr.iterations},
        {"beam_k", r.mdr.beam_k},
        {"chain_k", r.mdr.chain_k},
        {"combine", r.mdr.combine == MdrConfig::Combine::Sum ? "sum" : "product"}}},
      {"spell", {{"max_edit_distance", cfg.spell.max_edit_distance}}},
      {"triplet_weights", {{"core", cfg.triplet_weights.core}, {"meta", cfg.triplet_weights.meta}}},
      {"plugins",
       {{"encoder", cfg.plugins.encoder},
        {"reranker", cfg.plugins.reranker},
        {"reader", cfg.plugins.reader},
        {"encoder_dimension", cfg.plugins.encoder_dimension},
        {"encoder_seed", cfg.plugins.encoder_seed},
        {"encoder_http", http_json(cfg.plugins.encoder_http)},
        {"reranker_http", http_json(cfg.plugins.reranker_http)},
        {"reader_http", http_json(cfg.plugins.reader_http)}}},
      {"evaluation", {{"ndcg_gain", cfg.ndcg_gain == Gain::Linear ? "linear" : "exponential"}}},
      {"ontology", cfg.ontology_path},
      {"relation_synonyms", cfg.relation_synonyms_path},
      {"link_substring_fallback", cfg.link_substring_fallback},
      {"index_dir", cfg.index_dir},
      {"listen", cfg.listen},
  };
}

EngineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return config_from_json(j);
}

void apply_env_overrides(EngineConfig& cfg) {
  if (const char* v = std::getenv("BIOSEARCH_LISTEN"); v != nullptr && *v != '\0') cfg.listen = v;
  if (const char* v = std::getenv("BIOSEARCH_INDEX"); v != nullptr && *v != '\0') cfg.index_dir = v;
}

}  // namespace biosearch
