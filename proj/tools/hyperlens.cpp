// hyperlens: staged command-line pipeline from access logs to evaluated
// recommendation clusters.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "hyperlens/pipeline.hpp"

namespace {

int exit_code(hyperlens::ErrorKind kind) {
  using hyperlens::ErrorKind;
  switch (kind) {
    case ErrorKind::ConfigError:
    case ErrorKind::InvalidConfig: return 2;
    case ErrorKind::MissingArtifact: return 3;
    case ErrorKind::MalformedLine:
    case ErrorKind::BadTimestamp:
    case ErrorKind::BadStatus:
    case ErrorKind::BadInput: return 4;
    case ErrorKind::Io: return 5;
    default: return 6;
  }
}

struct Options {
  std::string config;
  std::string workdir;
  std::string out;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<int> k;
  unsigned threads = 1;
  bool strict = false;
  std::string algorithm;
  std::string user;
};

hyperlens::Pipeline make_pipeline(const Options& o) {
  hyperlens::Config cfg = o.config.empty() ? hyperlens::Config::defaults()
                                           : hyperlens::Config::parse(hyperlens::io::read_text(o.config), o.config);
  for (const auto& s : o.overrides) cfg.apply_override(s);
  if (o.seed) cfg.set("run.seed", std::to_string(*o.seed));
  if (o.k)
    for (const char* key : {"partition.k", "clustering.k", "eval.k_clusters"}) cfg.set(key, std::to_string(*o.k));
  if (o.strict) cfg.set("run.strict", "true");

  std::string workdir = o.workdir;
  if (workdir.empty())
    if (const char* env = std::getenv("HYPERLENS_WORKDIR"); env && *env) workdir = env;
  if (workdir.empty()) workdir = cfg.get("paths.workdir");
  return hyperlens::Pipeline(std::move(cfg), workdir, o.threads, &std::cerr);
}

void emit_report(const Options& o, const std::string& report, const hyperlens::Pipeline& p) {
  if (o.out == "-") {
    std::cout << report;
  } else if (!o.out.empty()) {
    hyperlens::io::write_atomic(o.out, report);
    std::cerr << "report written to " << o.out << '\n';
  } else {
    std::cerr << "report written to " << p.path_of(hyperlens::artifact::kReport).string() << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hyperlens: access-log recommendation clusters and their evaluation"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("-c,--config", o.config, "settings file (section/key = value)");
  app.add_option("-w,--workdir", o.workdir, "artifact directory (falls back to $HYPERLENS_WORKDIR, then paths.workdir)");
  app.add_option("--set", o.overrides, "override a setting: section.key=value")->take_all();
  app.add_option("--seed", o.seed, "root seed for every randomized stage");
  app.add_option("-k,--k", o.k, "number of clusters for partitioning, clustering and evaluation");
  app.add_option("-j,--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--strict", o.strict, "abort on the first malformed log line");

  struct Stage {
    const char* name;
    const char* help;
  };
  const std::vector<Stage> simple = {
      {"parse", "parse the raw log into parsed.log"},
      {"clean", "drop unsuccessful and asset requests"},
      {"sessions", "identify users and sessions, extract resources"},
      {"tfidf", "select documents and build the title term matrix"},
      {"mine", "mine frequent itemsets and association rules"},
      {"hypergraph", "build the rule hypergraph"},
      {"partition", "partition the hypergraph into k clusters"},
      {"synth", "generate a synthetic log, catalog and ground truth"},
  };
  std::map<std::string, CLI::App*> subs;
  for (const auto& s : simple) subs[s.name] = app.add_subcommand(s.name, s.help);

  auto* cluster = app.add_subcommand("cluster", "run a content clustering baseline");
  cluster->add_option("algorithm", o.algorithm, "em | filtered | kmeans | farthest_first | dbscan | hierarchical | all")
      ->required();
  auto* evaluate = app.add_subcommand("evaluate", "score every clustering against user profiles");
  evaluate->add_option("-o,--out", o.out, "also write the report here ('-' for stdout)");
  auto* recommend = app.add_subcommand("recommend", "recommend documents to profiled users");
  recommend->add_option("-u,--user", o.user, "only this user (host/username)");
  auto* run_all = app.add_subcommand("run-all", "run every stage from parse to evaluate");
  run_all->add_option("-o,--out", o.out, "also write the report here ('-' for stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    auto p = make_pipeline(o);
    for (const auto& [name, sub] : subs) {
      if (!sub->parsed()) continue;
      std::string msg;
      if (name == "parse") msg = p.parse();
      else if (name == "clean") msg = p.clean();
      else if (name == "sessions") msg = p.sessions();
      else if (name == "tfidf") msg = p.tfidf();
      else if (name == "mine") msg = p.mine();
      else if (name == "hypergraph") msg = p.hypergraph();
      else if (name == "partition") msg = p.partition();
      else if (name == "synth") msg = p.synth();
      std::cerr << msg << '\n';
    }
    if (cluster->parsed()) {
      if (o.algorithm == "all") {
        for (const auto& algo : hyperlens::content_algorithms()) std::cerr << p.cluster(algo) << '\n';
      } else {
        std::cerr << p.cluster(o.algorithm) << '\n';
      }
    }
    if (evaluate->parsed()) emit_report(o, p.evaluate(), p);
    if (recommend->parsed()) std::cout << p.recommend(o.user);
    if (run_all->parsed()) emit_report(o, p.run_all(), p);
  } catch (const hyperlens::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
