#pragma once

#include <string>

#include <json.hpp>

#include "biosearch/analysis.hpp"
#include "biosearch/corpus.hpp"
#include "biosearch/evaluation.hpp"
#include "biosearch/lexical_index.hpp"
#include "biosearch/orchestrator.hpp"
#include "biosearch/plugins.hpp"
#include "biosearch/spell.hpp"
#include "biosearch/triplet_index.hpp"

namespace biosearch {

struct EngineConfig {
  AnalyzerConfig analyzer;
  ChunkingConfig chunking;
  RetrievalConfig retrieval;  // holds the BM25 and multi-hop settings
  SpellConfig spell;
  TripletWeights triplet_weights;
  PluginSettings plugins;
  Gain ndcg_gain = Gain::Linear;
  std::string ontology_path;           // optional entity dictionary (JSONL)
  std::string relation_synonyms_path;  // optional surface -> canonical table
  bool link_substring_fallback = false;
  std::string index_dir = "index";
  std::string listen = "127.0.0.1:8080";

  /// Validates every component and the plugin identifiers. Throws ConfigError.
  void validate() const;
};

/// Missing keys keep their defaults; unknown keys and wrongly typed values
/// raise ConfigError naming the key path.
EngineConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EngineConfig& cfg);

/// Throws IoError when the file cannot be read.
EngineConfig load_config(const std::string& path);

/// BIOSEARCH_LISTEN and BIOSEARCH_INDEX replace `listen` and `index_dir`.
void apply_env_overrides(EngineConfig& cfg);

}  // namespace biosearch
