#include "biosearch/index_store.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>
#include <unordered_set>

#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include "biosearch/errors.hpp"
#include "biosearch/version.hpp"

namespace biosearch {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to '" + path + "'");
}

std::string fingerprint_of(const std::vector<std::pair<std::string, std::string>>& files) {
  std::string joined;
  for (const auto& [name, hash] : files) joined += name + " " + hash + "\n";
  return sha256_hex(joined);
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Results must be
/// written to per-index slots so output order never depends on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(threads);
  for (unsigned w = 0; w < threads; ++w) {
    workers.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += threads) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

json analyzer_json(const AnalyzerConfig& a) {
  return {{"min_gram", a.min_gram},
          {"max_gram", a.max_gram},
          {"lowercase", a.lowercase},
          {"ascii_fold", a.ascii_fold}};
}

}  // namespace

std::string sha256_file(const std::string& path) { return sha256_hex(read_file(path)); }

json IndexManifest::to_json() const {
  json files_json = json::array();
  for (const auto& [name, hash] : files) files_json.push_back({{"name", name}, {"sha256", hash}});
  return {{"engine_version", engine_version},
          {"format_version", format_version},
          {"analyzer", analyzer_json(analyzer)},
          {"chunking",
           {{"chunk_size", chunking.chunk_size},
            {"stride", chunking.stride},
            {"passage_limit", chunking.passage_limit}}},
          {"encoder", {{"id", encoder_id}, {"dimension", dimension}}},
          {"counts",
           {{"documents", documents},
            {"paragraphs", paragraphs},
            {"passages", passages},
            {"triplets", triplets},
            {"vocabulary", vocabulary}}},
          {"files", std::move(files_json)},
          {"fingerprint", fingerprint}};
}

IndexManifest IndexManifest::from_json(const json& j) {
  IndexManifest m;
  try {
    m.format_version = j.at("format_version").get<std::uint32_t>();
    if (m.format_version != kIndexFormatVersion) {
      throw FormatError("index format version " + std::to_string(m.format_version) +
                        " is not supported (expected " + std::to_string(kIndexFormatVersion) + ")");
    }
    m.engine_version = j.at("engine_version").get<std::string>();
    const json& a = j.at("analyzer");
    m.analyzer.min_gram = a.at("min_gram").get<int>();
    m.analyzer.max_gram = a.at("max_gram").get<int>();
    m.analyzer.lowercase = a.at("lowercase").get<bool>();
    m.analyzer.ascii_fold = a.at("ascii_fold").get<bool>();
    const json& c = j.at("chunking");
    m.chunking.chunk_size = c.at("chunk_size").get<int>();
    m.chunking.stride = c.at("stride").get<int>();
    m.chunking.passage_limit = c.at("passage_limit").get<int>();
    m.encoder_id = j.at("encoder").at("id").get<std::string>();
    m.dimension = j.at("encoder").at("dimension").get<std::size_t>();
    const json& n = j.at("counts");
    m.documents = n.at("documents").get<std::size_t>();
    m.paragraphs = n.at("paragraphs").get<std::size_t>();
    m.passages = n.at("passages").get<std::size_t>();
    m.triplets = n.at("triplets").get<std::size_t>();
    m.vocabulary = n.at("vocabulary").get<std::size_t>();
    for (const auto& f : j.at("files")) {
      m.files.emplace_back(f.at("name").get<std::string>(), f.at("sha256").get<std::string>());
    }
    m.fingerprint = j.at("fingerprint").get<std::string>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed index manifest: ") + e.what());
  }
  return m;
}

json to_json(const Paragraph& p) {
  return {{"doc_id", p.doc_id},       {"para_id", p.para_id},
          {"text", p.text},           {"char_offset", p.char_offset},
          {"token_offset", p.token_offset}, {"field", std::string(to_string(p.field))}};
}

Paragraph paragraph_from_json(const json& j) {
  Paragraph p;
  p.doc_id = j.at("doc_id").get<std::string>();
  p.para_id = j.at("para_id").get<std::string>();
  p.text = j.at("text").get<std::string>();
  p.char_offset = j.at("char_offset").get<decltype(p.char_offset)>();
  p.token_offset = j.at("token_offset").get<decltype(p.token_offset)>();
  p.field = unit_field_from_string(j.at("field").get<std::string>());
  return p;
}

json to_json(const Passage& p) {
  return {{"doc_id", p.doc_id},
          {"passage_id", p.passage_id},
          {"token_start", p.token_start},
          {"token_end", p.token_end},
          {"text", p.text}};
}

Passage passage_from_json(const json& j) {
  Passage p;
  p.doc_id = j.at("doc_id").get<std::string>();
  p.passage_id = j.at("passage_id").get<std::string>();
  p.token_start = j.at("token_start").get<decltype(p.token_start)>();
  p.token_end = j.at("token_end").get<decltype(p.token_end)>();
  p.text = j.at("text").get<std::string>();
  return p;
}

IndexManifest build_index(const std::vector<SourceDocument>& documents, const EngineConfig& cfg,
                          const Encoder& encoder, const BuildOptions& options,
                          const std::string& out_dir) {
  cfg.analyzer.validate();
  cfg.chunking.validate();
  const std::size_t n = documents.size();
  {
    std::unordered_set<std::string> ids;
    for (const auto& d : documents) {
      if (!ids.insert(d.doc_id).second) {
        throw DuplicateError("duplicate document id '" + d.doc_id + "'");
      }
    }
  }

  static const Ontology kNoOntology;
  static const RelationSynonyms kNoSynonyms;
  const IdentityResolver resolver;
  const PatternExtractor extractor;
  const SynthesisPipeline pipeline{resolver, extractor,
                                   options.synonyms ? *options.synonyms : kNoSynonyms,
                                   options.ontology ? *options.ontology : kNoOntology,
                                   cfg.link_substring_fallback};

  std::vector<std::vector<Paragraph>> doc_paragraphs(n);
  std::vector<std::vector<Passage>> doc_passages(n);
  std::vector<std::vector<Triplet>> doc_triplets(n);
  parallel_for(n, options.threads, [&](std::size_t i) {
    doc_paragraphs[i] = segment_paragraphs(documents[i]);
    doc_passages[i] = chunk_passages(documents[i], cfg.chunking);
    doc_triplets[i] = synthesize(std::span<const SourceDocument>(&documents[i], 1),
                                 doc_paragraphs[i], pipeline);
  });

  std::vector<Paragraph> paragraphs;
  std::vector<Passage> passages;
  std::vector<Triplet> triplets;
  for (std::size_t i = 0; i < n; ++i) {
    std::move(doc_paragraphs[i].begin(), doc_paragraphs[i].end(), std::back_inserter(paragraphs));
    std::move(doc_passages[i].begin(), doc_passages[i].end(), std::back_inserter(passages));
    std::move(doc_triplets[i].begin(), doc_triplets[i].end(), std::back_inserter(triplets));
  }
  if (!options.extra_triplets.empty()) {
    check_provenance(options.extra_triplets, paragraphs, documents);
    triplets.insert(triplets.end(), options.extra_triplets.begin(), options.extra_triplets.end());
  }

  const LexicalIndex lexical = LexicalIndex::build(paragraphs, cfg.analyzer);
  const LanguageModel lm(lexical.term_counts());

  // Encode in fixed-size blocks so results land in passage order.
  constexpr std::size_t kBlock = 64;
  std::vector<std::string> texts;
  std::vector<std::string> ids;
  for (const auto& p : passages) {
    texts.push_back(p.text);
    ids.push_back(p.passage_id);
  }
  const std::size_t blocks = (texts.size() + kBlock - 1) / kBlock;
  std::vector<std::vector<Embedding>> encoded(blocks);
  parallel_for(blocks, options.threads, [&](std::size_t b) {
    const std::size_t begin = b * kBlock;
    const std::size_t len = std::min(kBlock, texts.size() - begin);
    encoded[b] = encoder.encode_passages(std::span<const std::string>(texts.data() + begin, len));
    if (encoded[b].size() != len) throw BuildError("encoder returned the wrong number of vectors");
  });
  std::vector<Embedding> vectors;
  vectors.reserve(texts.size());
  for (auto& block : encoded) std::move(block.begin(), block.end(), std::back_inserter(vectors));
  const DenseIndex dense =
      DenseIndex::from_vectors(std::move(ids), std::move(vectors), encoder.dimension(),
                               encoder.identifier());

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create index directory '" + out_dir + "': " + ec.message());

  std::vector<std::pair<std::string, std::string>> contents;
  {
    std::ostringstream ss;
    for (const auto& p : paragraphs) ss << to_json(p).dump() << '\n';
    contents.emplace_back("paragraphs.jsonl", ss.str());
  }
  {
    std::ostringstream ss;
    for (const auto& p : passages) ss << to_json(p).dump() << '\n';
    contents.emplace_back("passages.jsonl", ss.str());
  }
  {
    std::ostringstream ss(std::ios::binary | std::ios::out);
    lexical.save(ss);
    contents.emplace_back("lexical.bin", ss.str());
  }
  {
    std::ostringstream ss;
    lm.save(ss);
    contents.emplace_back("vocab.tsv", ss.str());
  }
  {
    std::ostringstream ss(std::ios::binary | std::ios::out);
    dense.save(ss);
    contents.emplace_back("dense.bin", ss.str());
  }
  {
    std::ostringstream ss;
    write_triplets(triplets, ss);
    contents.emplace_back("triplets.jsonl", ss.str());
  }

  IndexManifest m;
  m.engine_version = kEngineVersion;
  m.analyzer = cfg.analyzer;
  m.chunking = cfg.chunking;
  m.encoder_id = encoder.identifier();
  m.dimension = encoder.dimension();
  m.documents = n;
  m.paragraphs = paragraphs.size();
  m.passages = passages.size();
  m.triplets = triplets.size();
  m.vocabulary = lm.size();
  for (const auto& [name, bytes] : contents) {
    write_file((fs::path(out_dir) / name).string(), bytes);
    m.files.emplace_back(name, sha256_hex(bytes));
  }
  m.fingerprint = fingerprint_of(m.files);
  write_file((fs::path(out_dir) / "MANIFEST.json").string(), m.to_json().dump(2) + "\n");
  spdlog::info("indexed {} documents: {} paragraphs, {} passages, {} triplets", m.documents,
               m.paragraphs, m.passages, m.triplets);
  return m;
}

IndexManifest read_manifest(const std::string& dir) {
  const std::string path = (fs::path(dir) / "MANIFEST.json").string();
  if (!fs::exists(path)) throw IoError("no index at '" + dir + "' (MANIFEST.json missing)");
  try {
    return IndexManifest::from_json(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

std::shared_ptr<const IndexSnapshot> load_index(const std::string& dir, const EngineConfig& cfg,
                                                const std::string& encoder_id) {
  auto snap = std::make_shared<IndexSnapshot>();
  snap->manifest = read_manifest(dir);
  const IndexManifest& m = snap->manifest;
  if (m.encoder_id != encoder_id) {
    throw ConfigError("index was built with encoder '" + m.encoder_id +
                      "' but the configured encoder is '" + encoder_id + "'");
  }

  std::vector<std::string> files;
  for (const auto& [name, hash] : m.files) {
    std::string bytes = read_file((fs::path(dir) / name).string());
    if (sha256_hex(bytes) != hash) {
      throw FormatError("index file '" + name + "' does not match its recorded hash");
    }
    files.push_back(std::move(bytes));
  }
  if (fingerprint_of(m.files) != m.fingerprint) {
    throw FormatError("index fingerprint does not match its file hashes");
  }
  auto content = [&](std::string_view name) -> const std::string& {
    for (std::size_t i = 0; i < m.files.size(); ++i) {
      if (m.files[i].first == name) return files[i];
    }
    throw FormatError("index manifest does not list '" + std::string(name) + "'");
  };

  auto parse_lines = [&](std::string_view name, auto&& fn) {
    std::istringstream in(content(name));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      try {
        fn(json::parse(line));
      } catch (const json::exception& e) {
        throw FormatError(std::string(name) + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
  };

  std::vector<Paragraph> paragraphs;
  parse_lines("paragraphs.jsonl", [&](const json& j) { paragraphs.push_back(paragraph_from_json(j)); });
  std::vector<Passage> passages;
  parse_lines("passages.jsonl", [&](const json& j) { passages.push_back(passage_from_json(j)); });
  {
    std::istringstream in(content("lexical.bin"), std::ios::binary);
    snap->lexical = LexicalIndex::load(in);
  }
  {
    std::istringstream in(content("vocab.tsv"));
    snap->language_model = LanguageModel::load(in);
  }
  {
    std::istringstream in(content("dense.bin"), std::ios::binary);
    snap->dense = DenseIndex::load(in);
  }
  std::vector<Triplet> triplets;
  {
    std::istringstream in(content("triplets.jsonl"));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      try {
        triplets.push_back(triplet_from_json(json::parse(line)));
      } catch (const std::exception& e) {
        throw FormatError("triplets.jsonl:" + std::to_string(lineno) + ": " + e.what());
      }
    }
  }
  snap->catalog = UnitCatalog(std::move(paragraphs), std::move(passages));
  snap->triplets = TripletIndex::build(std::move(triplets), m.analyzer, cfg.triplet_weights);
  return snap;
}

}  // namespace biosearch
