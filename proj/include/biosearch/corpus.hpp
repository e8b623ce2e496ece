#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace biosearch {

struct SourceDocument {
  std::string doc_id;
  std::string title;
  std::string abstract_text;
  std::vector<std::string> body;
  std::vector<std::string> authors;
  std::vector<std::string> institutions;
  std::optional<int> publication_year;
  std::vector<std::string> references;

  bool operator==(const SourceDocument&) const = default;
};

enum class UnitField : std::uint8_t { Abstract, Body };

std::string_view to_string(UnitField field) noexcept;
UnitField unit_field_from_string(std::string_view s);

struct Paragraph {
  std::string doc_id;
  std::string para_id;  // doc_id + "#" + ordinal
  std::string text;
  std::size_t char_offset = 0;   // byte offset in the document text
  std::size_t token_offset = 0;  // first token in the document token stream
  UnitField field = UnitField::Body;

  bool operator==(const Paragraph&) const = default;
};

struct Passage {
  std::string doc_id;
  std::string passage_id;  // doc_id + "@" + ordinal
  std::size_t token_start = 0;
  std::size_t token_end = 0;
  std::string text;

  bool operator==(const Passage&) const = default;
};

struct ChunkingConfig {
  int chunk_size = 300;
  int stride = 128;
  int passage_limit = 300;

  /// Throws ConfigError unless 0 < stride < chunk_size < 512 and
  /// passage_limit >= 1.
  void validate() const;
};

enum class RecordFormat : std::uint8_t {
  Native,  // one JSON object per line, see docs/FORMATS.md
  Cord19,  // CORD-19 full-text JSON (pdf_json / pmc_json)
};

RecordFormat record_format_from_string(std::string_view s);

/// Strips control characters, normalizes to NFC and collapses whitespace.
std::string clean_text(std::string_view text);

/// Parses one record. Throws ParseError naming the offending field.
SourceDocument parse_record(std::string_view record, RecordFormat format);

/// Serializes a document as one native-format JSON line (no newline).
std::string to_native_record(const SourceDocument& doc);

/// Accumulates documents and enforces doc_id uniqueness.
class CorpusBuilder {
 public:
  /// Throws ParseError or DuplicateError.
  const SourceDocument& ingest_document(std::string_view record, RecordFormat format);
  const SourceDocument& add(SourceDocument doc);

  const std::vector<SourceDocument>& documents() const noexcept { return docs_; }
  std::vector<SourceDocument> release() && { return std::move(docs_); }

 private:
  std::vector<SourceDocument> docs_;
  std::unordered_set<std::string> ids_;
};

/// Reads a native NDJSON corpus file. Blank lines are ignored. Errors carry
/// the 1-based line number.
std::vector<SourceDocument> read_corpus(const std::string& path,
                                        RecordFormat format = RecordFormat::Native);

/// Abstract (if non-empty) then each non-blank body block.
std::vector<Paragraph> segment_paragraphs(const SourceDocument& doc);

/// Whitespace tokens of the paragraphs, concatenated in paragraph order.
std::vector<std::string> document_tokens(const SourceDocument& doc);

/// Sliding window of chunk_size tokens advancing by chunk_size - stride; the
/// final partial window is kept.
std::vector<Passage> chunk_passages(const SourceDocument& doc, const ChunkingConfig& cfg);

}  // namespace biosearch
