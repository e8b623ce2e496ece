// Command-line front end: corpus conversion, indexing, querying, evaluation,
// graph export and the HTTP service.

#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "biosearch/config.hpp"
#include "biosearch/engine.hpp"
#include "biosearch/errors.hpp"
#include "biosearch/evaluation.hpp"
#include "biosearch/index_store.hpp"
#include "biosearch/service.hpp"
#include "biosearch/version.hpp"

namespace {

using namespace biosearch;
using nlohmann::json;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitIo = 3;

struct Options {
  std::string config_path;
  std::string index_dir;
  std::string corpus;
  std::string format = "native";
  std::string in;
  std::string out;
  std::string query;
  std::size_t r = 0;
  std::size_t k = 0;
  bool spell = false;
  std::vector<std::string> facets;
  std::string bulk_triplets;
  std::string ontology;
  std::string synonyms;
  unsigned threads = 0;
  std::string run;
  std::string qrels;
  std::vector<std::size_t> cutoffs;
  std::string gain;
  std::string answers;
  std::string golds;
  std::string listen;
  bool verbose = false;
};

EngineConfig load_engine_config(const Options& o) {
  EngineConfig cfg = o.config_path.empty() ? EngineConfig{} : load_config(o.config_path);
  if (!o.index_dir.empty()) cfg.index_dir = o.index_dir;
  if (!o.ontology.empty()) cfg.ontology_path = o.ontology;
  if (!o.synonyms.empty()) cfg.relation_synonyms_path = o.synonyms;
  return cfg;
}

std::ostream& output(const Options& o, std::ofstream& file) {
  if (o.out.empty() || o.out == "-") return std::cout;
  file.open(o.out, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot write '" + o.out + "'");
  return file;
}

int cmd_convert(const Options& o) {
  const auto docs = read_corpus(o.in, record_format_from_string(o.format));
  std::ofstream file;
  std::ostream& out = output(o, file);
  for (const auto& d : docs) out << to_native_record(d) << '\n';
  spdlog::info("converted {} documents", docs.size());
  return 0;
}

int cmd_ingest(const Options& o) {
  const EngineConfig cfg = load_engine_config(o);
  cfg.chunking.validate();
  const auto docs = read_corpus(o.corpus, record_format_from_string(o.format));
  std::size_t paragraphs = 0, passages = 0;
  for (const auto& d : docs) {
    paragraphs += segment_paragraphs(d).size();
    passages += chunk_passages(d, cfg.chunking).size();
  }
  if (!o.out.empty()) {
    std::ofstream file;
    std::ostream& out = output(o, file);
    for (const auto& d : docs) out << to_native_record(d) << '\n';
  }
  std::cout << json{{"documents", docs.size()}, {"paragraphs", paragraphs}, {"passages", passages}}
                   .dump()
            << '\n';
  return 0;
}

int cmd_index(const Options& o) {
  EngineConfig cfg = load_engine_config(o);
  if (!o.out.empty()) cfg.index_dir = o.out;
  cfg.validate();
  const auto docs = read_corpus(o.corpus, record_format_from_string(o.format));
  Ontology ontology;
  if (!cfg.ontology_path.empty()) ontology = Ontology::load(cfg.ontology_path);
  RelationSynonyms synonyms;
  if (!cfg.relation_synonyms_path.empty()) synonyms = RelationSynonyms::load(cfg.relation_synonyms_path);
  BuildOptions options;
  options.ontology = &ontology;
  options.synonyms = &synonyms;
  options.threads = o.threads;
  if (!o.bulk_triplets.empty()) {
    options.extra_triplets = read_triplets(o.bulk_triplets);
    for (auto& t : options.extra_triplets) t.relation = canonicalize_relation(t.relation, synonyms);
  }
  const auto encoder = make_encoder(cfg.plugins);
  const IndexManifest m = build_index(docs, cfg, *encoder, options, cfg.index_dir);
  std::cout << m.to_json().dump() << '\n';
  return 0;
}

std::unique_ptr<Engine> open_engine(const Options& o) {
  return Engine::open(load_engine_config(o));
}

int cmd_search(const Options& o) {
  const auto engine = open_engine(o);
  const SearchResponse resp =
      engine->search(o.query, o.r > 0 ? std::optional<std::size_t>(o.r) : std::nullopt, o.spell);
  if (resp.corrected_query) spdlog::info("searching for corrected query: {}", *resp.corrected_query);
  for (std::size_t i = 0; i < resp.results.size(); ++i) {
    json line = to_json(resp.results[i]);
    line["rank"] = i + 1;
    std::cout << line.dump() << '\n';
  }
  return 0;
}

FacetFilter parse_facets(const std::vector<std::string>& specs) {
  FacetFilter filter;
  for (const auto& spec : specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) throw ParseError("facet", "expected field=value, got '" + spec + "'");
    const auto field = facet_field_from_string(spec.substr(0, eq));
    if (!field) throw ParseError("facet", "unknown facet field '" + spec.substr(0, eq) + "'");
    if (!filter.clauses.emplace(*field, spec.substr(eq + 1)).second) {
      throw ParseError("facet", "facet field given twice: '" + spec.substr(0, eq) + "'");
    }
  }
  return filter;
}

int cmd_triplets(const Options& o) {
  const auto engine = open_engine(o);
  const std::size_t k = o.k > 0 ? o.k : engine->config().retrieval.r;
  const TripletResponse resp = engine->triplets(o.query, parse_facets(o.facets), k);
  for (const auto& r : resp.results) std::cout << to_json(r).dump() << '\n';
  std::cout << json{{"facet_counts", to_json(resp.facet_counts)}, {"total", resp.total}}.dump()
            << '\n';
  return 0;
}

int cmd_qa(const Options& o) {
  const auto engine = open_engine(o);
  std::cout << to_json(engine->qa(o.query)).dump() << '\n';
  return 0;
}

int cmd_spell(const Options& o) {
  const auto engine = open_engine(o);
  std::cout << to_json(engine->spell(o.query)).dump() << '\n';
  return 0;
}

int cmd_eval(const Options& o) {
  EngineConfig cfg = o.config_path.empty() ? EngineConfig{} : load_config(o.config_path);
  const Gain gain = o.gain.empty() ? cfg.ndcg_gain : gain_from_string(o.gain);
  bool any = false;
  if (!o.run.empty() || !o.qrels.empty()) {
    if (o.run.empty() || o.qrels.empty()) throw ParseError("run", "--run and --qrels go together");
    std::vector<std::size_t> ks = o.cutoffs;
    if (ks.empty()) ks.assign(std::begin(kDefaultCutoffs), std::end(kDefaultCutoffs));
    const RetrievalReport report = evaluate_run(read_run(o.run), read_qrels(o.qrels), ks, gain);
    write_retrieval_table(report, std::cout);
    any = true;
  }
  if (!o.answers.empty() || !o.golds.empty()) {
    if (o.answers.empty() || o.golds.empty()) {
      throw ParseError("answers", "--answers and --golds go together");
    }
    const QaReport report = evaluate_answers(read_answers(o.answers), read_answers(o.golds));
    write_qa_table(report, std::cout);
    any = true;
  }
  if (!any) throw ParseError("run", "nothing to evaluate: give --run/--qrels or --answers/--golds");
  return 0;
}

int cmd_export_graph(const Options& o) {
  const auto engine = open_engine(o);
  std::ofstream file;
  std::ostream& out = output(o, file);
  engine->export_graph(out);
  return 0;
}

HttpServer* g_server = nullptr;

extern "C" void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

int cmd_serve(const Options& o) {
  EngineConfig cfg = load_engine_config(o);
  apply_env_overrides(cfg);
  if (!o.listen.empty()) cfg.listen = o.listen;
  const auto [host, port] = parse_listen_address(cfg.listen);
  std::shared_ptr<const Engine> engine = Engine::open(cfg);
  const Service service(engine);
  HttpServer server(service);
  const int bound = server.bind(host, port);
  if (bound < 0) throw IoError("cannot listen on " + cfg.listen);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  spdlog::info("serving index {} on {}:{}", engine->manifest().fingerprint, host, bound);
  std::cout << json{{"listening", host + ":" + std::to_string(bound)}}.dump() << std::endl;
  const bool ok = server.run();
  g_server = nullptr;
  return ok ? 0 : kExitIo;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_st("biosearch"));
  spdlog::set_level(spdlog::level::warn);

  CLI::App app{"Biomedical literature search: indexing, retrieval, triplets and QA"};
  app.set_version_flag("--version", std::string(kEngineVersion));
  app.require_subcommand(1, 1);
  Options o;
  app.add_flag("-v,--verbose", o.verbose, "Log progress to stderr");

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "Engine configuration (JSON)")
        ->check(CLI::ExistingFile);
  };
  auto add_index = [&](CLI::App* sub) {
    add_config(sub);
    sub->add_option("--index", o.index_dir, "Index directory");
  };

  auto* convert = app.add_subcommand("convert", "Convert a corpus to the native NDJSON format");
  convert->add_option("--in", o.in, "Input corpus")->required();
  convert->add_option("--out", o.out, "Output file (default stdout)");
  convert->add_option("--format", o.format, "Input format: native or cord19")
      ->check(CLI::IsMember({"native", "cord19"}));

  auto* ingest = app.add_subcommand("ingest", "Validate a corpus and report unit counts");
  add_config(ingest);
  ingest->add_option("--corpus", o.corpus, "Corpus file")->required();
  ingest->add_option("--format", o.format, "native or cord19")
      ->check(CLI::IsMember({"native", "cord19"}));
  ingest->add_option("--out", o.out, "Also write the cleaned native corpus here");

  auto* index = app.add_subcommand("index", "Build the lexical, dense and triplet indexes");
  add_config(index);
  index->add_option("--corpus", o.corpus, "Corpus file")->required();
  index->add_option("--out", o.out, "Index directory (overrides the config)");
  index->add_option("--format", o.format, "native or cord19")
      ->check(CLI::IsMember({"native", "cord19"}));
  index->add_option("--triplets", o.bulk_triplets, "Extra triplets to ingest (JSONL)");
  index->add_option("--ontology", o.ontology, "Entity dictionary (JSONL)");
  index->add_option("--synonyms", o.synonyms, "Relation synonym table (TSV)");
  index->add_option("--threads", o.threads, "Worker threads (0 = all cores)");

  auto* search = app.add_subcommand("search", "Ranked paragraph retrieval");
  add_index(search);
  search->add_option("-q,--q", o.query, "Query text")->required();
  search->add_option("-r,--r", o.r, "Result list size");
  search->add_flag("--spell", o.spell, "Spell-correct the query first");

  auto* triplets = app.add_subcommand("triplets", "Triplet search with facets");
  add_index(triplets);
  triplets->add_option("-q,--q", o.query, "Query text")->required();
  triplets->add_option("-k,--k", o.k, "Number of triplets");
  triplets->add_option("--facet", o.facets, "field=value (subject_type, subject_subtype, ...)");

  auto* qa = app.add_subcommand("qa", "Answer a question over multi-hop retrieved passages");
  add_index(qa);
  qa->add_option("-q,--q", o.query, "Question")->required();

  auto* spell = app.add_subcommand("spell", "Suggest a spelling correction");
  add_index(spell);
  spell->add_option("-q,--q", o.query, "Query text")->required();

  auto* eval = app.add_subcommand("eval", "Retrieval and QA metrics");
  add_config(eval);
  eval->add_option("--run", o.run, "Run file");
  eval->add_option("--qrels", o.qrels, "Relevance judgments");
  eval->add_option("--k", o.cutoffs, "Cutoff(s); default 5 10 20")->check(CLI::PositiveNumber);
  eval->add_option("--gain", o.gain, "NDCG gain: linear or exponential")
      ->check(CLI::IsMember({"linear", "exponential"}));
  eval->add_option("--answers", o.answers, "Predicted answers (query_id<TAB>answer)");
  eval->add_option("--golds", o.golds, "Gold answers (query_id<TAB>answer)");

  auto* export_graph = app.add_subcommand("export-graph", "Write the knowledge graph as JSONL");
  add_index(export_graph);
  export_graph->add_option("--out", o.out, "Output file (default stdout)");

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  add_index(serve);
  serve->add_option("--listen", o.listen, "host:port");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  if (o.verbose) spdlog::set_level(spdlog::level::info);

  try {
    if (*convert) return cmd_convert(o);
    if (*ingest) return cmd_ingest(o);
    if (*index) return cmd_index(o);
    if (*search) return cmd_search(o);
    if (*triplets) return cmd_triplets(o);
    if (*qa) return cmd_qa(o);
    if (*spell) return cmd_spell(o);
    if (*eval) return cmd_eval(o);
    if (*export_graph) return cmd_export_graph(o);
    if (*serve) return cmd_serve(o);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const PluginError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
