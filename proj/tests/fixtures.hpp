#pragma once

// Shared setup for tests: fixture paths, scratch directories and in-memory
// indexes over a document set.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "biosearch/corpus.hpp"
#include "biosearch/dense.hpp"
#include "biosearch/lexical_index.hpp"
#include "biosearch/orchestrator.hpp"

namespace fixtures {

inline std::string data(const std::string& name) {
  return std::string(BIOSEARCH_TEST_DATA) + "/" + name;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// A fresh directory removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("biosearch-" + tag + "-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  std::string str() const { return path_.string(); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

/// Lexical, catalog and dense structures built straight from documents.
struct MemoryIndex {
  explicit MemoryIndex(const std::vector<biosearch::SourceDocument>& docs,
                       const biosearch::ChunkingConfig& chunking = {})
      : encoder(256, 13) {
    std::vector<biosearch::Paragraph> paragraphs;
    std::vector<biosearch::Passage> passages;
    for (const auto& d : docs) {
      for (auto& p : biosearch::segment_paragraphs(d)) paragraphs.push_back(std::move(p));
      for (auto& p : biosearch::chunk_passages(d, chunking)) passages.push_back(std::move(p));
    }
    lexical = biosearch::LexicalIndex::build(paragraphs, biosearch::AnalyzerConfig{});
    dense = biosearch::DenseIndex::build(passages, encoder);
    catalog = biosearch::UnitCatalog(std::move(paragraphs), std::move(passages));
  }

  biosearch::RetrievalSources sources() const { return {&lexical, &catalog, &dense, &encoder}; }

  biosearch::ReferenceEncoder encoder;
  biosearch::LexicalIndex lexical;
  biosearch::DenseIndex dense;
  biosearch::UnitCatalog catalog;
};

inline biosearch::SourceDocument doc(const std::string& id, const std::string& abstract_text,
                                     std::vector<std::string> body = {}) {
  biosearch::SourceDocument d;
  d.doc_id = id;
  d.title = id;
  d.abstract_text = abstract_text;
  d.body = std::move(body);
  return d;
}

}  // namespace fixtures
