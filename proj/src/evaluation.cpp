#include "biosearch/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "biosearch/errors.hpp"
#include "biosearch/unicode.hpp"

namespace biosearch {

const QueryJudgments& Qrels::for_query(const std::string& query_id) const {
  static const QueryJudgments empty;
  auto it = judgments.find(query_id);
  return it == judgments.end() ? empty : it->second;
}

Gain gain_from_string(std::string_view s) {
  if (s == "linear") return Gain::Linear;
  if (s == "exponential") return Gain::Exponential;
  throw ConfigError("unknown gain '" + std::string(s) + "' (expected linear or exponential)");
}

namespace {

int grade_of(const QueryJudgments& judgments, const std::string& unit) {
  auto it = judgments.find(unit);
  return it == judgments.end() ? 0 : it->second;
}

double gain_value(int grade, Gain gain) {
  if (grade <= 0) return 0.0;
  return gain == Gain::Linear ? static_cast<double>(grade) : std::exp2(grade) - 1.0;
}

}  // namespace

double precision_at_k(std::span<const std::string> ranking, const QueryJudgments& judgments,
                      std::size_t k) {
  if (k == 0) throw ConfigError("precision@k: k must be >= 1");
  std::size_t relevant = 0;
  for (std::size_t i = 0; i < std::min(k, ranking.size()); ++i) {
    if (grade_of(judgments, ranking[i]) >= 1) ++relevant;
  }
  return static_cast<double>(relevant) / static_cast<double>(k);
}

double ndcg_at_k(std::span<const std::string> ranking, const QueryJudgments& judgments,
                 std::size_t k, Gain gain) {
  if (k == 0) throw ConfigError("ndcg@k: k must be >= 1");
  double dcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, ranking.size()); ++i) {
    dcg += gain_value(grade_of(judgments, ranking[i]), gain) / std::log2(static_cast<double>(i) + 2.0);
  }
  std::vector<int> ideal;
  for (const auto& [unit, grade] : judgments) ideal.push_back(grade);
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  double idcg = 0.0;
  for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i) {
    idcg += gain_value(ideal[i], gain) / std::log2(static_cast<double>(i) + 2.0);
  }
  return idcg > 0.0 ? dcg / idcg : 0.0;
}

namespace {

std::vector<std::string> answer_tokens(std::string_view text) {
  std::istringstream ss(normalize_answer(text));
  std::vector<std::string> out;
  for (std::string w; ss >> w;) out.push_back(w);
  return out;
}

}  // namespace

std::string normalize_answer(std::string_view text) {
  const std::u32string lowered = unicode::to_u32(unicode::to_lower(text));
  std::u32string kept;
  for (char32_t c : lowered) {
    if (unicode::is_punct(c)) continue;
    kept.push_back(unicode::is_space(c) ? U' ' : c);
  }
  std::istringstream ss(unicode::to_utf8(kept));
  std::string out;
  for (std::string w; ss >> w;) {
    if (w == "a" || w == "an" || w == "the") continue;
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

int exact_match(std::string_view prediction, std::span<const std::string> golds) {
  const std::string p = normalize_answer(prediction);
  for (const auto& g : golds) {
    if (normalize_answer(g) == p) return 1;
  }
  return 0;
}

double token_f1(std::string_view prediction, std::span<const std::string> golds) {
  const std::vector<std::string> p = answer_tokens(prediction);
  double best = 0.0;
  for (const auto& gold : golds) {
    const std::vector<std::string> g = answer_tokens(gold);
    double f1 = 0.0;
    if (p.empty() || g.empty()) {
      f1 = p.empty() && g.empty() ? 1.0 : 0.0;
    } else {
      std::multiset<std::string> remaining(g.begin(), g.end());
      std::size_t common = 0;
      for (const auto& t : p) {
        auto it = remaining.find(t);
        if (it == remaining.end()) continue;
        remaining.erase(it);
        ++common;
      }
      if (common > 0) {
        const double precision = static_cast<double>(common) / static_cast<double>(p.size());
        const double recall = static_cast<double>(common) / static_cast<double>(g.size());
        f1 = 2.0 * precision * recall / (precision + recall);
      }
    }
    best = std::max(best, f1);
  }
  return best;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  for (std::string f; ss >> f;) out.push_back(f);
  return out;
}

template <typename Int>
Int parse_int(const std::string& s, const std::string& where, const char* field) {
  Int v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(field, where + ": '" + s + "' is not an integer");
  }
  return v;
}

std::ifstream open_input(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw IoError(std::string("cannot open ") + what + " '" + path + "'");
  return in;
}

}  // namespace

Qrels parse_qrels(std::istream& in, const std::string& source) {
  Qrels qrels;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto f = split_fields(line);
    if (f.empty() || f[0][0] == '#') continue;
    const std::string where = source + ":" + std::to_string(lineno);
    if (f.size() != 3 && f.size() != 4) {
      throw ParseError("", where + ": expected 3 or 4 columns, got " + std::to_string(f.size()));
    }
    const std::string& unit = f.size() == 3 ? f[1] : f[2];
    const int grade = parse_int<int>(f.back(), where, "grade");
    if (grade < 0) throw ParseError("grade", where + ": grade must be >= 0");
    if (!qrels.judgments[f[0]].emplace(unit, grade).second) {
      throw ParseError("unit_id", where + ": repeated judgment for '" + unit + "'");
    }
  }
  return qrels;
}

Qrels read_qrels(const std::string& path) {
  auto in = open_input(path, "qrels");
  return parse_qrels(in, path);
}

RunFile parse_run(std::istream& in, const std::string& source) {
  struct Entry {
    long long rank;
    std::size_t line;
    std::string unit;
  };
  std::map<std::string, std::vector<Entry>> entries;
  std::map<std::string, std::set<std::string>> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto f = split_fields(line);
    if (f.empty() || f[0][0] == '#') continue;
    const std::string where = source + ":" + std::to_string(lineno);
    Entry e{0, lineno, {}};
    switch (f.size()) {
      case 2: e.unit = f[1]; break;
      case 3:
        e.unit = f[1];
        e.rank = parse_int<long long>(f[2], where, "rank");
        break;
      case 6:
        e.unit = f[2];
        e.rank = parse_int<long long>(f[3], where, "rank");
        break;
      default:
        throw ParseError("", where + ": expected 2, 3 or 6 columns, got " +
                                 std::to_string(f.size()));
    }
    if (!seen[f[0]].insert(e.unit).second) {
      throw ParseError("unit_id", where + ": unit '" + e.unit + "' ranked twice for query '" +
                                      f[0] + "'");
    }
    entries[f[0]].push_back(std::move(e));
  }
  RunFile run;
  for (auto& [qid, list] : entries) {
    std::stable_sort(list.begin(), list.end(),
                     [](const Entry& a, const Entry& b) { return a.rank < b.rank; });
    auto& ranking = run.rankings[qid];
    for (auto& e : list) ranking.push_back(std::move(e.unit));
  }
  return run;
}

RunFile read_run(const std::string& path) {
  auto in = open_input(path, "run file");
  return parse_run(in, path);
}

AnswerSet parse_answers(std::istream& in, const std::string& source) {
  AnswerSet out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError("", source + ":" + std::to_string(lineno) +
                               ": expected query_id<TAB>answer");
    }
    out[line.substr(0, tab)].push_back(line.substr(tab + 1));
  }
  return out;
}

AnswerSet read_answers(const std::string& path) {
  auto in = open_input(path, "answer file");
  return parse_answers(in, path);
}

RetrievalReport evaluate_run(const RunFile& run, const Qrels& qrels,
                             std::span<const std::size_t> ks, Gain gain) {
  RetrievalReport report;
  report.ks.assign(ks.begin(), ks.end());
  report.precision.assign(ks.size(), 0.0);
  report.ndcg.assign(ks.size(), 0.0);
  report.queries = qrels.judgments.size();
  if (report.queries == 0) return report;
  static const std::vector<std::string> none;
  for (const auto& [qid, judgments] : qrels.judgments) {
    auto it = run.rankings.find(qid);
    const std::vector<std::string>& ranking = it == run.rankings.end() ? none : it->second;
    for (std::size_t i = 0; i < ks.size(); ++i) {
      report.precision[i] += precision_at_k(ranking, judgments, ks[i]);
      report.ndcg[i] += ndcg_at_k(ranking, judgments, ks[i], gain);
    }
  }
  for (std::size_t i = 0; i < ks.size(); ++i) {
    report.precision[i] /= static_cast<double>(report.queries);
    report.ndcg[i] /= static_cast<double>(report.queries);
  }
  return report;
}

QaReport evaluate_answers(const AnswerSet& predictions, const AnswerSet& golds) {
  QaReport report;
  report.questions = golds.size();
  if (golds.empty()) return report;
  for (const auto& [qid, answers] : golds) {
    auto it = predictions.find(qid);
    const std::string prediction =
        it == predictions.end() || it->second.empty() ? std::string() : it->second.front();
    report.exact_match += exact_match(prediction, answers);
    report.f1 += token_f1(prediction, answers);
  }
  report.exact_match /= static_cast<double>(report.questions);
  report.f1 /= static_cast<double>(report.questions);
  return report;
}

namespace {

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

void write_retrieval_table(const RetrievalReport& report, std::ostream& out) {
  out << "metric\tk\tvalue\n";
  for (std::size_t i = 0; i < report.ks.size(); ++i) {
    out << "P\t" << report.ks[i] << '\t' << fixed4(report.precision[i]) << '\n';
  }
  for (std::size_t i = 0; i < report.ks.size(); ++i) {
    out << "NDCG\t" << report.ks[i] << '\t' << fixed4(report.ndcg[i]) << '\n';
  }
  out << "queries\t-\t" << report.queries << '\n';
}

void write_qa_table(const QaReport& report, std::ostream& out) {
  out << "metric\tvalue\n";
  out << "EM\t" << fixed4(report.exact_match) << '\n';
  out << "F1\t" << fixed4(report.f1) << '\n';
  out << "questions\t" << report.questions << '\n';
}

}  // namespace biosearch
