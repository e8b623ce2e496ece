#include "biosearch/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

#include <json.hpp>

#include "biosearch/errors.hpp"
#include "biosearch/unicode.hpp"

namespace biosearch {

using nlohmann::json;

std::string_view to_string(UnitField field) noexcept {
  return field == UnitField::Abstract ? "abstract" : "body";
}

UnitField unit_field_from_string(std::string_view s) {
  if (s == "abstract") return UnitField::Abstract;
  if (s == "body") return UnitField::Body;
  throw ParseError("field", "unknown unit field '" + std::string(s) + "'");
}

void ChunkingConfig::validate() const {
  if (!(stride > 0 && stride < chunk_size)) {
    throw ConfigError("chunking: require 0 < stride < chunk_size");
  }
  if (chunk_size >= 512) {
    throw ConfigError("chunking: chunk_size must be less than 512 (got " +
                      std::to_string(chunk_size) + ")");
  }
  if (passage_limit < 1) throw ConfigError("chunking: passage_limit must be >= 1");
}

RecordFormat record_format_from_string(std::string_view s) {
  if (s == "native") return RecordFormat::Native;
  if (s == "cord19") return RecordFormat::Cord19;
  throw ConfigError("unknown record format '" + std::string(s) + "'");
}

std::string clean_text(std::string_view text) {
  const std::string nfc = unicode::to_nfc(text);
  std::string out;
  out.reserve(nfc.size());
  bool pending_space = false;
  std::size_t pos = 0;
  while (pos < nfc.size()) {
    const std::size_t at = pos;
    const char32_t c = unicode::next_codepoint(nfc, pos);
    if (unicode::is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (unicode::is_control(c)) continue;
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.append(nfc, at, pos - at);
  }
  return out;
}

namespace {

std::string get_string(const json& obj, const char* field, bool required) {
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) {
    if (required) throw ParseError(field, "missing");
    return {};
  }
  if (!it->is_string()) throw ParseError(field, "expected string");
  return clean_text(it->get<std::string>());
}

std::vector<std::string> get_string_list(const json& obj, const char* field) {
  std::vector<std::string> out;
  auto it = obj.find(field);
  if (it == obj.end() || it->is_null()) return out;
  if (!it->is_array()) throw ParseError(field, "expected array of strings");
  for (const auto& v : *it) {
    if (!v.is_string()) throw ParseError(field, "expected array of strings");
    out.push_back(clean_text(v.get<std::string>()));
  }
  return out;
}

std::optional<int> parse_year(const json& v, const char* field) {
  if (v.is_null()) return std::nullopt;
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    int year = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + std::min<std::size_t>(s.size(), 4), year);
    if (ec == std::errc() && ptr == s.data() + 4) return year;
  }
  throw ParseError(field, "expected integer year");
}

json parse_json(std::string_view record) {
  json j;
  try {
    j = json::parse(record);
  } catch (const json::parse_error& e) {
    throw ParseError("", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("", "record is not a JSON object");
  return j;
}

SourceDocument parse_native(const json& j) {
  SourceDocument doc;
  doc.doc_id = get_string(j, "doc_id", true);
  if (doc.doc_id.empty()) throw ParseError("doc_id", "must be non-empty");
  doc.title = get_string(j, "title", false);
  doc.abstract_text = get_string(j, "abstract", false);
  doc.body = get_string_list(j, "body");
  doc.authors = get_string_list(j, "authors");
  doc.institutions = get_string_list(j, "institutions");
  if (auto it = j.find("year"); it != j.end()) doc.publication_year = parse_year(*it, "year");
  doc.references = get_string_list(j, "references");
  return doc;
}

std::vector<std::string> text_blocks(const json& j, const char* field) {
  std::vector<std::string> out;
  auto it = j.find(field);
  if (it == j.end() || it->is_null()) return out;
  if (!it->is_array()) throw ParseError(field, "expected array of text blocks");
  for (const auto& block : *it) {
    if (!block.is_object() || !block.contains("text") || !block["text"].is_string()) {
      throw ParseError(std::string(field) + ".text", "expected string");
    }
    out.push_back(clean_text(block["text"].get<std::string>()));
  }
  return out;
}

SourceDocument parse_cord19(const json& j) {
  SourceDocument doc;
  doc.doc_id = get_string(j, "paper_id", true);
  if (doc.doc_id.empty()) throw ParseError("paper_id", "must be non-empty");

  const json empty = json::object();
  const json& meta = j.contains("metadata") ? j["metadata"] : empty;
  if (!meta.is_object()) throw ParseError("metadata", "expected object");
  doc.title = get_string(meta, "title", false);

  std::string abstract;
  for (const auto& block : text_blocks(j, "abstract")) {
    if (block.empty()) continue;
    if (!abstract.empty()) abstract.push_back(' ');
    abstract += block;
  }
  doc.abstract_text = std::move(abstract);
  doc.body = text_blocks(j, "body_text");

  if (auto it = meta.find("authors"); it != meta.end() && !it->is_null()) {
    if (!it->is_array()) throw ParseError("metadata.authors", "expected array");
    for (const auto& a : *it) {
      if (!a.is_object()) throw ParseError("metadata.authors", "expected object");
      std::string name = get_string(a, "first", false);
      if (auto m = a.find("middle"); m != a.end() && m->is_array()) {
        for (const auto& part : *m) {
          if (part.is_string()) name += " " + part.get<std::string>();
        }
      }
      name += " " + get_string(a, "last", false);
      name = clean_text(name);
      if (!name.empty()) doc.authors.push_back(std::move(name));

      if (auto aff = a.find("affiliation"); aff != a.end() && aff->is_object()) {
        std::string inst = get_string(*aff, "institution", false);
        if (!inst.empty() &&
            std::find(doc.institutions.begin(), doc.institutions.end(), inst) ==
                doc.institutions.end()) {
          doc.institutions.push_back(std::move(inst));
        }
      }
    }
  }

  if (auto it = j.find("year"); it != j.end()) {
    doc.publication_year = parse_year(*it, "year");
  } else if (auto m = meta.find("year"); m != meta.end()) {
    doc.publication_year = parse_year(*m, "metadata.year");
  }

  if (auto it = j.find("bib_entries"); it != j.end() && it->is_object()) {
    for (const auto& [key, entry] : it->items()) {
      if (!entry.is_object()) continue;
      auto ids = entry.find("other_ids");
      if (ids == entry.end() || !ids->is_object()) continue;
      auto doi = ids->find("DOI");
      if (doi != ids->end() && doi->is_array() && !doi->empty() && (*doi)[0].is_string()) {
        doc.references.push_back("doi:" + clean_text((*doi)[0].get<std::string>()));
      }
    }
  }
  return doc;
}

}  // namespace

SourceDocument parse_record(std::string_view record, RecordFormat format) {
  const json j = parse_json(record);
  try {
    return format == RecordFormat::Native ? parse_native(j) : parse_cord19(j);
  } catch (const json::exception& e) {
    throw ParseError("", e.what());
  }
}

std::string to_native_record(const SourceDocument& doc) {
  json j;
  j["doc_id"] = doc.doc_id;
  j["title"] = doc.title;
  j["abstract"] = doc.abstract_text;
  j["body"] = doc.body;
  j["authors"] = doc.authors;
  j["institutions"] = doc.institutions;
  j["year"] = doc.publication_year ? json(*doc.publication_year) : json(nullptr);
  j["references"] = doc.references;
  return j.dump();
}

const SourceDocument& CorpusBuilder::ingest_document(std::string_view record,
                                                     RecordFormat format) {
  return add(parse_record(record, format));
}

const SourceDocument& CorpusBuilder::add(SourceDocument doc) {
  if (doc.doc_id.empty()) throw ParseError("doc_id", "must be non-empty");
  if (!ids_.insert(doc.doc_id).second) {
    throw DuplicateError("duplicate doc_id '" + doc.doc_id + "'");
  }
  docs_.push_back(std::move(doc));
  return docs_.back();
}

std::vector<SourceDocument> read_corpus(const std::string& path, RecordFormat format) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file '" + path + "'");
  CorpusBuilder builder;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      builder.ingest_document(line, format);
    } catch (const ParseError& e) {
      throw ParseError(e.field(), path + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const DuplicateError& e) {
      throw DuplicateError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return std::move(builder).release();
}

namespace {

std::size_t count_tokens(std::string_view cleaned) {
  std::size_t n = 0;
  bool in_token = false;
  for (char c : cleaned) {
    if (c == ' ') {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++n;
    }
  }
  return n;
}

void split_tokens(std::string_view cleaned, std::vector<std::string>& out) {
  std::size_t pos = 0;
  while (pos < cleaned.size()) {
    while (pos < cleaned.size() && cleaned[pos] == ' ') ++pos;
    std::size_t end = cleaned.find(' ', pos);
    if (end == std::string_view::npos) end = cleaned.size();
    if (end > pos) out.emplace_back(cleaned.substr(pos, end - pos));
    pos = end;
  }
}

// Abstract first, then body blocks; blank units skipped.
template <typename Fn>
void for_each_unit(const SourceDocument& doc, Fn&& fn) {
  auto visit = [&](const std::string& raw, UnitField field) {
    // Documents built in code may bypass parse_record, so clean again.
    std::string text = clean_text(raw);
    if (!text.empty()) fn(std::move(text), field);
  };
  visit(doc.abstract_text, UnitField::Abstract);
  for (const auto& block : doc.body) visit(block, UnitField::Body);
}

}  // namespace

std::vector<Paragraph> segment_paragraphs(const SourceDocument& doc) {
  std::vector<Paragraph> out;
  std::size_t char_offset = 0;
  std::size_t token_offset = 0;
  for_each_unit(doc, [&](std::string text, UnitField field) {
    Paragraph p;
    p.doc_id = doc.doc_id;
    p.para_id = doc.doc_id + "#" + std::to_string(out.size());
    p.char_offset = char_offset;
    p.token_offset = token_offset;
    p.field = field;
    char_offset += text.size() + 1;  // units are joined by '\n'
    token_offset += count_tokens(text);
    p.text = std::move(text);
    out.push_back(std::move(p));
  });
  return out;
}

std::vector<std::string> document_tokens(const SourceDocument& doc) {
  std::vector<std::string> tokens;
  for_each_unit(doc, [&](std::string text, UnitField) { split_tokens(text, tokens); });
  return tokens;
}

std::vector<Passage> chunk_passages(const SourceDocument& doc, const ChunkingConfig& cfg) {
  cfg.validate();
  const std::vector<std::string> tokens = document_tokens(doc);
  const std::size_t n = tokens.size();
  const auto window = static_cast<std::size_t>(cfg.chunk_size);
  const auto step = static_cast<std::size_t>(cfg.chunk_size - cfg.stride);
  const auto limit = static_cast<std::size_t>(cfg.passage_limit);

  std::vector<Passage> out;
  for (std::size_t start = 0; start < n; start += step) {
    const std::size_t window_end = std::min(start + window, n);
    Passage p;
    p.doc_id = doc.doc_id;
    p.passage_id = doc.doc_id + "@" + std::to_string(out.size());
    p.token_start = start;
    p.token_end = std::min(window_end, start + limit);
    for (std::size_t i = p.token_start; i < p.token_end; ++i) {
      if (i > p.token_start) p.text.push_back(' ');
      p.text += tokens[i];
    }
    out.push_back(std::move(p));
    if (window_end == n) break;
  }
  return out;
}

}  // namespace biosearch
