#include "biosearch/spell.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <set>

#include "biosearch/errors.hpp"
#include "biosearch/unicode.hpp"

namespace biosearch {

void SpellConfig::validate() const {
  if (max_edit_distance != 1 && max_edit_distance != 2) {
    throw ConfigError("spell: max_edit_distance must be 1 or 2");
  }
}

LanguageModel::LanguageModel(std::vector<std::pair<std::string, std::uint64_t>> counts) {
  std::map<std::string, std::uint64_t> merged;
  for (auto& [term, n] : counts) {
    if (n > 0 && !term.empty()) merged[term] += n;
  }
  std::set<char32_t> letters;
  table_.reserve(merged.size());
  for (auto& [term, n] : merged) {
    std::u32string wide = unicode::to_u32(term);
    letters.insert(wide.begin(), wide.end());
    lookup_.emplace(wide, n);
    wide_.push_back(std::move(wide));
    table_.emplace_back(term, n);
    total_ += n;
  }
  alphabet_.assign(letters.begin(), letters.end());
}

LanguageModel LanguageModel::from_terms(const std::vector<std::string>& terms) {
  std::map<std::string, std::uint64_t> counts;
  for (const auto& t : terms) ++counts[t];
  return LanguageModel({counts.begin(), counts.end()});
}

std::uint64_t LanguageModel::count(std::string_view term) const {
  return count(unicode::to_u32(term));
}

std::uint64_t LanguageModel::count(const std::u32string& term) const {
  auto it = lookup_.find(term);
  return it == lookup_.end() ? 0 : it->second;
}

double LanguageModel::probability(std::string_view term) const {
  return total_ == 0 ? 0.0 : static_cast<double>(count(term)) / static_cast<double>(total_);
}

void LanguageModel::save(std::ostream& out) const {
  for (const auto& [term, n] : table_) out << term << '\t' << n << '\n';
}

LanguageModel LanguageModel::load(std::istream& in) {
  std::vector<std::pair<std::string, std::uint64_t>> counts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw FormatError("vocabulary line " + std::to_string(line_no) + ": expected term<TAB>count");
    }
    try {
      counts.emplace_back(line.substr(0, tab), std::stoull(line.substr(tab + 1)));
    } catch (const std::exception&) {
      throw FormatError("vocabulary line " + std::to_string(line_no) + ": bad count");
    }
  }
  return LanguageModel(std::move(counts));
}

std::vector<std::u32string> edits1(const std::u32string& w, const std::u32string& alphabet) {
  std::vector<std::u32string> out;
  const std::size_t n = w.size();
  out.reserve(n + n + alphabet.size() * (2 * n + 1));
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(w.substr(0, i) + w.substr(i + 1));
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    std::u32string t = w;
    std::swap(t[i], t[i + 1]);
    out.push_back(std::move(t));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (char32_t c : alphabet) {
      std::u32string t = w;
      t[i] = c;
      out.push_back(std::move(t));
    }
  }
  for (std::size_t i = 0; i <= n; ++i) {
    for (char32_t c : alphabet) {
      std::u32string t = w;
      t.insert(t.begin() + static_cast<std::ptrdiff_t>(i), c);
      out.push_back(std::move(t));
    }
  }
  return out;
}

namespace {

// Unrestricted Damerau-Levenshtein distance (Lowrance-Wagner), i.e. the
// fewest insertions, deletions, substitutions and adjacent transpositions.
std::size_t damerau_levenshtein(const std::u32string& a, const std::u32string& b) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  const std::size_t inf = n + m;
  std::vector<std::size_t> d((n + 2) * (m + 2), 0);
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return d[i * (m + 2) + j]; };
  at(0, 0) = inf;
  for (std::size_t i = 0; i <= n; ++i) {
    at(i + 1, 0) = inf;
    at(i + 1, 1) = i;
  }
  for (std::size_t j = 0; j <= m; ++j) {
    at(0, j + 1) = inf;
    at(1, j + 1) = j;
  }
  std::map<char32_t, std::size_t> last_row;
  for (std::size_t i = 1; i <= n; ++i) {
    std::size_t last_col = 0;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t i1 = last_row.count(b[j - 1]) ? last_row[b[j - 1]] : 0;
      const std::size_t j1 = last_col;
      std::size_t cost = 1;
      if (a[i - 1] == b[j - 1]) {
        cost = 0;
        last_col = j;
      }
      at(i + 1, j + 1) = std::min({at(i, j) + cost, at(i + 1, j) + 1, at(i, j + 1) + 1,
                                   at(i1, j1) + (i - i1 - 1) + 1 + (j - j1 - 1)});
    }
    last_row[a[i - 1]] = i;
  }
  return at(n + 1, m + 1);
}

// Vocabulary words at edit distance 1..max from w (distance 0 excluded).
std::map<std::string, std::size_t> scan_neighbours(const std::u32string& w,
                                                   const LanguageModel& lm,
                                                   std::size_t max_distance) {
  std::map<std::string, std::size_t> found;
  const auto& wide = lm.wide_terms();
  for (std::size_t i = 0; i < wide.size(); ++i) {
    const std::size_t len = wide[i].size();
    const std::size_t diff = len > w.size() ? len - w.size() : w.size() - len;
    if (diff > max_distance) continue;
    const std::size_t dist = damerau_levenshtein(w, wide[i]);
    if (dist >= 1 && dist <= max_distance) found.emplace(lm.table()[i].first, dist);
  }
  return found;
}

std::string best_by_count(const std::set<std::string>& tier, const LanguageModel& lm) {
  std::string best;
  std::uint64_t best_count = 0;
  for (const auto& c : tier) {  // std::set iterates lexicographically
    const std::uint64_t n = lm.count(c);
    if (n > best_count) {
      best = c;
      best_count = n;
    }
  }
  return best;
}

}  // namespace

std::set<std::string> candidates(std::string_view w, const LanguageModel& lm,
                                 const SpellConfig& cfg) {
  cfg.validate();
  std::set<std::string> out;
  if (lm.contains(w)) out.emplace(w);
  const auto wide = unicode::to_u32(w);
  for (auto& [term, dist] :
       scan_neighbours(wide, lm, static_cast<std::size_t>(cfg.max_edit_distance))) {
    out.insert(term);
  }
  return out;
}

std::string correct(std::string_view w, const LanguageModel& lm, const SpellConfig& cfg) {
  cfg.validate();
  if (w.empty() || lm.contains(w)) return std::string(w);
  const auto wide = unicode::to_u32(w);

  std::set<std::string> tier1;
  for (const auto& e : edits1(wide, lm.alphabet())) {
    if (lm.count(e) > 0) tier1.insert(unicode::to_utf8(e));
  }
  if (!tier1.empty()) return best_by_count(tier1, lm);
  if (cfg.max_edit_distance < 2) return std::string(w);

  std::set<std::string> tier2;
  for (auto& [term, dist] : scan_neighbours(wide, lm, 2)) tier2.insert(term);
  if (!tier2.empty()) return best_by_count(tier2, lm);
  return std::string(w);
}

CorrectedQuery correct_query(const QueryAst& ast, const LanguageModel& lm,
                             const SpellConfig& cfg, const AnalyzerConfig& analyzer) {
  CorrectedQuery result{ast, false};
  for (auto& token : result.ast.free_terms) {
    const std::string normalized = normalize(token.term, analyzer);
    std::string fixed = correct(normalized, lm, cfg);
    if (fixed == normalized) continue;
    token.term = fixed;
    if (token.position < result.ast.sequence.size()) {
      result.ast.sequence[token.position].term = std::move(fixed);
    }
    result.changed = true;
  }
  if (result.changed) result.ast.raw = render_query(result.ast);
  return result;
}

std::string render_query(const QueryAst& ast) {
  std::map<std::uint32_t, std::uint32_t> phrase_span;  // first position -> last
  for (const auto& phrase : ast.phrases) {
    if (!phrase.empty()) phrase_span[phrase.front().position] = phrase.back().position;
  }
  std::string out;
  for (std::size_t i = 0; i < ast.sequence.size(); ++i) {
    if (!out.empty()) out.push_back(' ');
    auto it = phrase_span.find(static_cast<std::uint32_t>(i));
    if (it == phrase_span.end()) {
      out += ast.sequence[i].term;
      continue;
    }
    out.push_back('"');
    for (std::size_t j = i; j <= it->second && j < ast.sequence.size(); ++j) {
      if (j > i) out.push_back(' ');
      out += ast.sequence[j].term;
    }
    out.push_back('"');
    i = it->second;
  }
  return out;
}

}  // namespace biosearch
