#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "biosearch/config.hpp"
#include "biosearch/dense.hpp"
#include "biosearch/knowledge.hpp"
#include "biosearch/lexical_index.hpp"
#include "biosearch/orchestrator.hpp"
#include "biosearch/spell.hpp"
#include "biosearch/triplet_index.hpp"

namespace biosearch {

inline constexpr std::uint32_t kIndexFormatVersion = 1;

/// Index files in fingerprint order. MANIFEST.json is written last and is not
/// part of the fingerprint.
inline constexpr std::string_view kIndexFiles[] = {
    "paragraphs.jsonl", "passages.jsonl", "lexical.bin",
    "vocab.tsv",        "dense.bin",      "triplets.jsonl",
};

struct IndexManifest {
  std::string engine_version;
  std::uint32_t format_version = kIndexFormatVersion;
  AnalyzerConfig analyzer;
  ChunkingConfig chunking;
  std::string encoder_id;
  std::size_t dimension = 0;
  std::size_t documents = 0;
  std::size_t paragraphs = 0;
  std::size_t passages = 0;
  std::size_t triplets = 0;
  std::size_t vocabulary = 0;
  std::vector<std::pair<std::string, std::string>> files;  // name, SHA-256 hex
  std::string fingerprint;

  nlohmann::json to_json() const;
  /// Throws FormatError.
  static IndexManifest from_json(const nlohmann::json& j);
};

/// Everything a query needs, loaded once and never mutated.
struct IndexSnapshot {
  IndexManifest manifest;
  LexicalIndex lexical;
  UnitCatalog catalog;
  DenseIndex dense;
  LanguageModel language_model;
  TripletIndex triplets;
};

struct BuildOptions {
  const Ontology* ontology = nullptr;
  const RelationSynonyms* synonyms = nullptr;
  std::vector<Triplet> extra_triplets;  // bulk-ingested, provenance-checked
  unsigned threads = 0;                 // 0 means hardware concurrency
};

std::string sha256_hex(std::string_view bytes);
/// Throws IoError.
std::string sha256_file(const std::string& path);

/// Builds the lexical, dense and triplet indexes plus the vocabulary into
/// `out_dir` (created if needed). Output is byte-identical for identical
/// inputs regardless of thread count.
IndexManifest build_index(const std::vector<SourceDocument>& documents, const EngineConfig& cfg,
                          const Encoder& encoder, const BuildOptions& options,
                          const std::string& out_dir);

/// Throws IoError when the manifest is missing, FormatError on a version
/// mismatch.
IndexManifest read_manifest(const std::string& dir);

/// Loads and verifies an index directory. Throws FormatError when a file
/// does not match its recorded hash, ConfigError when `encoder_id` differs
/// from the one the index was built with.
std::shared_ptr<const IndexSnapshot> load_index(const std::string& dir, const EngineConfig& cfg,
                                                const std::string& encoder_id);

nlohmann::json to_json(const Paragraph& p);
Paragraph paragraph_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Passage& p);
Passage passage_from_json(const nlohmann::json& j);

}  // namespace biosearch
