#include <gtest/gtest.h>
#include <httplib.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <json.hpp>

#include "fixtures.hpp"

using nlohmann::json;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

/// Runs the CLI through the shell; stderr is discarded.
Result run(const std::string& args) {
  const std::string cmd = std::string(BIOSEARCH_CLI) + " " + args + " 2>/dev/null";
  Result r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[4096];
  for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, pipe)) > 0;) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::vector<json> json_lines(const std::string& text) {
  std::vector<json> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

/// One index of the fixture corpus shared by the tests below.
const std::string& index_dir() {
  static fixtures::ScratchDir dir("cli-index");
  static const bool built = [] {
    const Result r = run("index --corpus " + fixtures::data("corpus.ndjson") + " --ontology " +
                         fixtures::data("ontology.jsonl") + " --synonyms " +
                         fixtures::data("relation_synonyms.tsv") + " --out " + dir.str());
    return r.code == 0;
  }();
  static const std::string path = dir.str();
  EXPECT_TRUE(built);
  return path;
}

}  // namespace

TEST(Cli, IndexReportsManifest) {
  fixtures::ScratchDir dir("cli-manifest");
  const Result r = run("index --corpus " + fixtures::data("corpus.ndjson") + " --out " + dir.str());
  ASSERT_EQ(r.code, 0);
  const json m = json::parse(r.out);
  EXPECT_EQ(m["counts"]["documents"], 12);
  EXPECT_EQ(m["fingerprint"].get<std::string>().size(), 64u);
}

TEST(Cli, ReindexIsByteIdenticalAcrossThreadCounts) {
  fixtures::ScratchDir a("cli-a");
  fixtures::ScratchDir b("cli-b");
  const std::string corpus = " --corpus " + fixtures::data("corpus.ndjson");
  ASSERT_EQ(run("index" + corpus + " --threads 1 --out " + a.str()).code, 0);
  ASSERT_EQ(run("index" + corpus + " --threads 4 --out " + b.str()).code, 0);
  for (const char* f : {"paragraphs.jsonl", "passages.jsonl", "lexical.bin", "vocab.tsv", "dense.bin",
                        "triplets.jsonl", "MANIFEST.json"}) {
    EXPECT_EQ(fixtures::slurp(a.file(f)), fixtures::slurp(b.file(f))) << f;
  }
}

TEST(Cli, Search) {
  const Result r = run("search --index " + index_dir() + " -q 'bats reservoir' -r 4");
  ASSERT_EQ(r.code, 0);
  const auto lines = json_lines(r.out);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0]["rank"], 1);
  EXPECT_TRUE(lines[0].contains("mechanism"));
}

TEST(Cli, SpellAndTriplets) {
  const Result s = run("spell --index " + index_dir() + " -q 'bats reservior'");
  ASSERT_EQ(s.code, 0);
  EXPECT_EQ(json::parse(s.out)["corrected"], "bats reservoir");

  const Result t = run("triplets --index " + index_dir() + " -q reservoir --facet subject_type=Organism");
  ASSERT_EQ(t.code, 0);
  const auto lines = json_lines(t.out);
  ASSERT_FALSE(lines.empty());
  EXPECT_TRUE(lines.back().contains("facet_counts"));
  for (std::size_t i = 0; i + 1 < lines.size(); ++i) {
    EXPECT_EQ(lines[i]["facets"]["subject_type"], "Organism");
  }
  EXPECT_EQ(run("triplets --index " + index_dir() + " -q x --facet colour=red").code, 2);
}

TEST(Cli, Qa) {
  const Result r = run("qa --index " + index_dir() + " -q 'How many species of bats are there?'");
  ASSERT_EQ(r.code, 0);
  const json j = json::parse(r.out);
  EXPECT_EQ(j["kind"], "question");
  EXPECT_EQ(j["attempted"], true);
}

TEST(Cli, EvalTables) {
  const Result r = run("eval --run " + fixtures::data("run.txt") + " --qrels " + fixtures::data("qrels.txt") +
                       " --answers " + fixtures::data("answers.tsv") + " --golds " +
                       fixtures::data("golds.tsv"));
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("P\t5\t0.3333"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("NDCG\t5\t0.5436"), std::string::npos);
  EXPECT_NE(r.out.find("EM\t0.6667"), std::string::npos);
  EXPECT_NE(r.out.find("F1\t0.8889"), std::string::npos);
  EXPECT_EQ(run("eval --run " + fixtures::data("run.txt")).code, 2);
}

TEST(Cli, ExportGraph) {
  fixtures::ScratchDir dir("cli-graph");
  ASSERT_EQ(run("export-graph --index " + index_dir() + " --out " + dir.file("g.jsonl")).code, 0);
  const auto lines = json_lines(fixtures::slurp(dir.file("g.jsonl")));
  ASSERT_FALSE(lines.empty());
  EXPECT_EQ(lines[0]["format"], "biosearch-graph");
  EXPECT_EQ(lines.size(), 1u + lines[0]["nodes"].get<std::size_t>() + lines[0]["edges"].get<std::size_t>());
}

TEST(Cli, ConvertAndIngest) {
  fixtures::ScratchDir dir("cli-convert");
  ASSERT_EQ(run("convert --in " + fixtures::data("corpus.ndjson") + " --out " + dir.file("c.ndjson")).code, 0);
  const Result r = run("ingest --corpus " + dir.file("c.ndjson"));
  ASSERT_EQ(r.code, 0);
  const json j = json::parse(r.out);
  EXPECT_EQ(j["documents"], 12);
  EXPECT_EQ(j["paragraphs"], 31);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("search").code, 1);            // missing -q
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("search --index /nonexistent/index -q bats").code, 3);
  EXPECT_EQ(run("ingest --corpus /nonexistent/corpus.ndjson").code, 3);
  EXPECT_EQ(run("search --index " + index_dir() + " -q '   '").code, 2);
  EXPECT_EQ(run("--version").code, 0);
}

TEST(Cli, ServeAnswersHttp) {
  int fds[2];
  ASSERT_EQ(::pipe(fds), 0);
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, fds[1], STDOUT_FILENO);
  posix_spawn_file_actions_addclose(&actions, fds[0]);
  posix_spawn_file_actions_addopen(&actions, STDERR_FILENO, "/dev/null", O_WRONLY, 0);
  const std::string dir = index_dir();
  std::vector<std::string> args = {BIOSEARCH_CLI, "serve", "--index", dir, "--listen", "127.0.0.1:0"};
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  pid_t pid = -1;
  ASSERT_EQ(posix_spawn(&pid, BIOSEARCH_CLI, &actions, nullptr, argv.data(), environ), 0);
  posix_spawn_file_actions_destroy(&actions);
  ::close(fds[1]);

  std::string line;
  for (char c; ::read(fds[0], &c, 1) == 1 && c != '\n';) line.push_back(c);
  ::close(fds[0]);
  ASSERT_FALSE(line.empty());
  const std::string listening = json::parse(line)["listening"];
  const int port = std::stoi(listening.substr(listening.rfind(':') + 1));

  httplib::Client client("127.0.0.1", port);
  auto health = client.Get("/health");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  auto search = client.Get("/search?q=bats");
  ASSERT_TRUE(search);
  EXPECT_EQ(search->status, 200);

  ::kill(pid, SIGTERM);
  int status = 0;
  ASSERT_EQ(::waitpid(pid, &status, 0), pid);
  EXPECT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 0);
}
