#pragma once

// Brute-force reference implementations used to check the engine. None of
// these call into the library; they work on plain token vectors.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

namespace oracle {

using Doc = std::vector<std::string>;

/// Okapi BM25 of `query` (duplicates counted) against every document.
/// `lengths` overrides the document lengths (n-gram fields measure length in words).
inline std::vector<double> bm25(const std::vector<Doc>& docs, const std::vector<std::string>& query,
                                double k1, double b, std::vector<double> lengths = {}) {
  const double n = static_cast<double>(docs.size());
  if (lengths.empty()) {
    for (const auto& d : docs) lengths.push_back(static_cast<double>(d.size()));
  }
  double total = 0;
  for (double l : lengths) total += l;
  const double avgdl = docs.empty() ? 0.0 : total / n;
  std::vector<double> out(docs.size(), 0.0);
  for (const auto& term : query) {
    double df = 0;
    for (const auto& d : docs) {
      if (std::find(d.begin(), d.end(), term) != d.end()) df += 1;
    }
    if (df == 0) continue;
    const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
    for (std::size_t i = 0; i < docs.size(); ++i) {
      const double tf = static_cast<double>(std::count(docs[i].begin(), docs[i].end(), term));
      if (tf == 0) continue;
      const double ratio = avgdl > 0 ? lengths[i] / avgdl : 1.0;
      out[i] += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * ratio));
    }
  }
  return out;
}

/// Indices of documents holding `phrase` as consecutive tokens.
inline std::set<std::size_t> phrase_hits(const std::vector<Doc>& docs, const Doc& phrase) {
  std::set<std::size_t> hits;
  if (phrase.empty()) return hits;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const Doc& d = docs[i];
    for (std::size_t s = 0; s + phrase.size() <= d.size(); ++s) {
      bool ok = true;
      for (std::size_t j = 0; j < phrase.size() && ok; ++j) ok = d[s + j] == phrase[j];
      if (ok) {
        hits.insert(i);
        break;
      }
    }
  }
  return hits;
}

/// Prefix-set definition over code points; the full term is added when its
/// length falls outside [min_gram, max_gram].
inline std::vector<std::u32string> edge_ngrams(const std::u32string& term, std::size_t min_gram,
                                               std::size_t max_gram) {
  std::set<std::u32string> grams;
  for (std::size_t n = 1; n <= term.size(); ++n) {
    if (n >= min_gram && n <= max_gram) grams.insert(term.substr(0, n));
  }
  if (term.size() < min_gram || term.size() > max_gram) grams.insert(term);
  std::vector<std::u32string> out(grams.begin(), grams.end());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  });
  return out;
}

/// All strings one delete, adjacent swap, replace or insert away from `w`.
inline std::set<std::u32string> edit_neighbours(const std::u32string& w,
                                                const std::u32string& alphabet) {
  std::set<std::u32string> out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    std::u32string del = w;
    del.erase(i, 1);
    out.insert(del);
    if (i + 1 < w.size()) {
      std::u32string sw = w;
      std::swap(sw[i], sw[i + 1]);
      out.insert(sw);
    }
    for (char32_t c : alphabet) {
      std::u32string rep = w;
      rep[i] = c;
      out.insert(rep);
    }
  }
  for (std::size_t i = 0; i <= w.size(); ++i) {
    for (char32_t c : alphabet) {
      std::u32string ins = w;
      ins.insert(ins.begin() + static_cast<std::ptrdiff_t>(i), c);
      out.insert(ins);
    }
  }
  return out;
}

/// Tiered noisy-channel correction by exhaustive enumeration.
inline std::u32string correct(const std::u32string& w, const std::map<std::u32string, long>& vocab,
                              const std::u32string& alphabet, int max_distance) {
  if (vocab.count(w) != 0) return w;
  auto best = [&](const std::set<std::u32string>& pool) -> std::u32string {
    std::u32string pick;
    long best_count = -1;
    for (const auto& c : pool) {  // ascending, so the first maximum wins ties
      auto it = vocab.find(c);
      if (it != vocab.end() && it->second > best_count) {
        best_count = it->second;
        pick = c;
      }
    }
    return pick;
  };
  const auto one = edit_neighbours(w, alphabet);
  std::u32string pick = best(one);
  if (!pick.empty() || max_distance < 2) return pick.empty() ? w : pick;
  std::set<std::u32string> two;
  for (const auto& e : one) {
    for (auto& e2 : edit_neighbours(e, alphabet)) {
      if (vocab.count(e2) != 0) two.insert(std::move(e2));
    }
  }
  pick = best(two);
  return pick.empty() ? w : pick;
}

inline double precision_at_k(const std::vector<std::string>& ranking,
                             const std::map<std::string, int>& grades, std::size_t k) {
  std::size_t rel = 0;
  for (std::size_t i = 0; i < k && i < ranking.size(); ++i) {
    auto it = grades.find(ranking[i]);
    if (it != grades.end() && it->second >= 1) ++rel;
  }
  return static_cast<double>(rel) / static_cast<double>(k);
}

inline double dcg(const std::vector<int>& gains) {
  double s = 0;
  for (std::size_t i = 0; i < gains.size(); ++i) s += gains[i] / std::log2(i + 2.0);
  return s;
}

inline double ndcg_at_k(const std::vector<std::string>& ranking,
                        const std::map<std::string, int>& grades, std::size_t k) {
  std::vector<int> got;
  for (std::size_t i = 0; i < k && i < ranking.size(); ++i) {
    auto it = grades.find(ranking[i]);
    got.push_back(it == grades.end() ? 0 : it->second);
  }
  std::vector<int> ideal;
  for (const auto& [id, g] : grades) ideal.push_back(g);
  std::sort(ideal.rbegin(), ideal.rend());
  if (ideal.size() > k) ideal.resize(k);
  const double idcg = dcg(ideal);
  return idcg == 0 ? 0.0 : dcg(got) / idcg;
}

/// Lowercase ASCII, punctuation removed, articles dropped, split on spaces.
inline std::vector<std::string> answer_tokens(const std::string& s) {
  std::string clean;
  for (unsigned char c : s) {
    if (std::ispunct(c)) continue;
    clean.push_back(static_cast<char>(std::tolower(c)));
  }
  std::vector<std::string> out;
  std::string cur;
  for (char c : clean + " ") {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty() && cur != "a" && cur != "an" && cur != "the") out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  return out;
}

inline int exact_match(const std::string& pred, const std::vector<std::string>& golds) {
  for (const auto& g : golds) {
    if (answer_tokens(pred) == answer_tokens(g)) return 1;
  }
  return 0;
}

inline double token_f1(const std::string& pred, const std::vector<std::string>& golds) {
  double best = 0;
  const auto p = answer_tokens(pred);
  for (const auto& g : golds) {
    const auto t = answer_tokens(g);
    if (p.empty() && t.empty()) return 1.0;
    std::map<std::string, int> pc;
    for (const auto& x : p) ++pc[x];
    int common = 0;
    for (const auto& x : t) {
      if (pc[x] > 0) {
        --pc[x];
        ++common;
      }
    }
    if (common == 0) continue;
    const double prec = static_cast<double>(common) / p.size();
    const double rec = static_cast<double>(common) / t.size();
    best = std::max(best, 2 * prec * rec / (prec + rec));
  }
  return best;
}

}  // namespace oracle

namespace oracle {

inline std::string utf8(const std::u32string& s) {
  std::string out;
  for (char32_t c : s) {
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
    } else if (c < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (c >> 6)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else if (c < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (c >> 12)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (c >> 18)));
      out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    }
  }
  return out;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace oracle
