#pragma once

#include <nlohmann/json.hpp>

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hyperlens/clustering.hpp"
#include "hyperlens/error.hpp"
#include "hyperlens/evaluation.hpp"
#include "hyperlens/hypergraph.hpp"
#include "hyperlens/io.hpp"
#include "hyperlens/log_ingest.hpp"
#include "hyperlens/partition.hpp"
#include "hyperlens/random.hpp"
#include "hyperlens/rule_mining.hpp"
#include "hyperlens/session_builder.hpp"
#include "hyperlens/synth.hpp"
#include "hyperlens/text_index.hpp"

namespace hyperlens {

/// Sectioned `key = value` settings. Only keys present in the defaults table
/// are accepted; values are kept as text and typed on access.
class Config {
 public:
  static Config defaults() {
    Config c;
    c.entries_ = {
        {"paths.log", "input/access.log"},
        {"paths.catalog", "input/catalog.tsv"},
        {"paths.truth", "input/truth.json"},
        {"paths.registry", ""},
        {"paths.stopwords", ""},
        {"paths.workdir", "work"},
        {"run.seed", "42"},
        {"run.strict", "false"},
        {"cleaning.asset_suffixes", "jpeg,jpg,gif,css,js,png,ico,svg,woff,woff2"},
        {"cleaning.status_low", "200"},
        {"cleaning.status_high", "299"},
        {"sessions.gap_seconds", "1800"},
        {"tfidf.weighting", "tfidf"},
        {"tfidf.normalize", "true"},
        {"mining.min_support", "0.01"},
        {"mining.min_confidence", "0.8"},
        {"mining.max_itemset_size", "6"},
        {"mining.single_consequent", "false"},
        {"mining.per_user", "false"},
        {"hypergraph.edge_weight", "mean"},
        {"partition.k", "17"},
        {"partition.epsilon", "0.1"},
        {"partition.restarts", "10"},
        {"partition.max_passes", "10"},
        {"clustering.k", "17"},
        {"clustering.kmeans_max_iter", "100"},
        {"clustering.kmeans_n_init", "10"},
        {"clustering.em_max_iter", "100"},
        {"clustering.em_variance_floor", "1e-6"},
        {"clustering.em_projection_dims", "32"},
        {"clustering.dbscan_eps", "0.9"},
        {"clustering.dbscan_min_pts", "3"},
        {"clustering.dbscan_drop_noise", "false"},
        {"clustering.hierarchical_linkage", "average"},
        {"eval.min_doc_views", "10"},
        {"eval.min_profile_items", "15"},
        {"eval.k_clusters", "17"},
        {"eval.best_of", "f1"},
        {"eval.independent_maxima", "false"},
        {"eval.restrict_before_threshold", "true"},
        {"eval.recommend_n", "10"},
        {"eval.recommend_algorithm", "hypergraph"},
        {"synth.n_users", "400"},
        {"synth.n_docs", "300"},
        {"synth.n_communities", "17"},
        {"synth.sessions_per_user", "8"},
        {"synth.session_len", "7"},
        {"synth.in_community_prob", "0.9"},
        {"synth.title_vocab_mode", "shuffled"},
        {"synth.words_per_community", "6"},
        {"synth.asset_prob", "0.15"},
        {"synth.error_status_prob", "0.03"},
        {"synth.missing_session_prob", "0"},
        {"synth.seed", ""},
    };
    return c;
  }

  /// Defaults overlaid with the settings in `text`.
  static Config parse(std::string_view text, std::string_view origin = "config") {
    Config c = defaults();
    std::string section;
    std::size_t n = 0;
    for (auto raw : io::lines(text)) {
      ++n;
      auto line = io::trim(raw);
      if (line.empty() || line.front() == '#' || line.front() == ';') continue;
      const std::string where = std::string(origin) + ":" + std::to_string(n);
      if (line.front() == '[') {
        if (line.back() != ']' || line.size() < 3) throw Error(ErrorKind::ConfigError, where + ": bad section header");
        section = std::string(io::trim(line.substr(1, line.size() - 2)));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw Error(ErrorKind::ConfigError, where + ": expected key = value");
      const auto key = io::trim(line.substr(0, eq));
      c.set(section.empty() ? std::string(key) : section + "." + std::string(key), unquote(strip_comment(line.substr(eq + 1))),
            where);
    }
    return c;
  }

  /// `section.key=value`
  void apply_override(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorKind::ConfigError, "override must look like section.key=value");
    set(io::trim(assignment.substr(0, eq)), unquote(io::trim(assignment.substr(eq + 1))), "override");
  }

  void set(std::string_view key, std::string value, std::string_view where = "set") {
    for (auto& [k, v] : entries_)
      if (k == key) {
        v = std::move(value);
        return;
      }
    throw Error(ErrorKind::ConfigError, std::string(where) + ": unknown setting '" + std::string(key) + "'");
  }

  const std::string& get(std::string_view key) const {
    for (const auto& [k, v] : entries_)
      if (k == key) return v;
    throw Error(ErrorKind::ConfigError, "unknown setting '" + std::string(key) + "'");
  }

  std::int64_t get_int(std::string_view key) const {
    std::int64_t v = 0;
    if (!io::parse_int(get(key), v)) throw Error(ErrorKind::ConfigError, std::string(key) + " must be an integer");
    return v;
  }

  double get_double(std::string_view key) const {
    double v = 0;
    if (!io::parse_double(get(key), v)) throw Error(ErrorKind::ConfigError, std::string(key) + " must be a number");
    return v;
  }

  bool get_bool(std::string_view key) const {
    const auto& v = get(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw Error(ErrorKind::ConfigError, std::string(key) + " must be true or false");
  }

  std::uint64_t get_u64(std::string_view key) const {
    const auto& s = get(key);
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw Error(ErrorKind::ConfigError, std::string(key) + " must be an unsigned integer");
    return v;
  }

  /// Canonical text form, one section per block in table order.
  std::string to_text() const {
    std::string out;
    std::string section;
    for (const auto& [k, v] : entries_) {
      const auto dot = k.find('.');
      const std::string s = k.substr(0, dot);
      if (s != section) {
        out += (out.empty() ? "[" : "\n[") + s + "]\n";
        section = s;
      }
      out += k.substr(dot + 1) + " = " + v + '\n';
    }
    return out;
  }

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  static std::string_view strip_comment(std::string_view v) {
    v = io::trim(v);
    if (!v.empty() && v.front() == '"') return v;
    const auto hash = v.find(" #");
    return io::trim(hash == std::string_view::npos ? v : v.substr(0, hash));
  }

  static std::string unquote(std::string_view v) {
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return std::string(v.substr(1, v.size() - 2));
    return std::string(v);
  }

  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Clustering algorithms in report order, with their report labels.
inline const std::vector<std::string>& content_algorithms() {
  static const std::vector<std::string> algos = {"em", "filtered", "kmeans", "farthest_first", "dbscan", "hierarchical"};
  return algos;
}

inline std::string normalize_algorithm(std::string_view name) {
  std::string s(name);
  for (char& c : s)
    if (c == '-') c = '_';
  if (s == "k_means" || s == "k_mean") s = "kmeans";
  if (s == "density") s = "dbscan";
  for (const auto& [key, label] : report_rows())
    if (s == key) return s;
  throw Error(ErrorKind::ConfigError, "unknown clustering algorithm '" + std::string(name) + "'");
}

/// Artifact file names inside the work directory.
namespace artifact {
inline constexpr std::string_view kParsed = "parsed.log";
inline constexpr std::string_view kParseReport = "parse_report.json";
inline constexpr std::string_view kCleaned = "cleaned.log";
inline constexpr std::string_view kCleanReport = "clean_report.json";
inline constexpr std::string_view kSessions = "sessions.jsonl";
inline constexpr std::string_view kSessionReport = "sessions_report.json";
inline constexpr std::string_view kDocs = "docs.tsv";
inline constexpr std::string_view kDictionary = "dictionary.tsv";
inline constexpr std::string_view kMatrix = "matrix.tsv";
inline constexpr std::string_view kItemsets = "itemsets.tsv";
inline constexpr std::string_view kRules = "rules.tsv";
inline constexpr std::string_view kMiningReport = "mining_report.json";
inline constexpr std::string_view kHypergraph = "hypergraph.hgr";
inline constexpr std::string_view kVertices = "vertices.txt";
inline constexpr std::string_view kPartition = "partition.txt";
inline constexpr std::string_view kCutReport = "cut_report.json";
inline constexpr std::string_view kReport = "report.tsv";
inline constexpr std::string_view kReportDetail = "report_detail.json";
inline constexpr std::string_view kResolvedConfig = "config.resolved.conf";
inline constexpr std::string_view kRecommendations = "recommendations.jsonl";
}  // namespace artifact

/// Stage runner over one work directory. Each stage reads the artifacts of
/// earlier stages and writes its own atomically.
class Pipeline {
 public:
  Pipeline(Config cfg, std::filesystem::path workdir, unsigned threads = 1, std::ostream* log = nullptr)
      : cfg_(std::move(cfg)), workdir_(std::move(workdir)), threads_(std::max(1u, threads)), log_(log) {
    check_k_consistency();
  }

  const Config& config() const { return cfg_; }
  const std::filesystem::path& workdir() const { return workdir_; }

  std::filesystem::path input_path(std::string_view key) const {
    std::filesystem::path p = cfg_.get(key);
    return p.is_absolute() ? p : workdir_ / p;
  }

  std::filesystem::path path_of(std::string_view name) const { return workdir_ / std::filesystem::path(name); }

  std::filesystem::path cluster_path(std::string_view algo) const {
    return workdir_ / "clusters" / (std::string(algo) + ".tsv");
  }

  // -- synth --------------------------------------------------------------
  SynthConfig synth_config() const {
    SynthConfig s;
    s.n_users = static_cast<int>(cfg_.get_int("synth.n_users"));
    s.n_docs = static_cast<int>(cfg_.get_int("synth.n_docs"));
    s.n_communities = static_cast<int>(cfg_.get_int("synth.n_communities"));
    s.sessions_per_user = cfg_.get_double("synth.sessions_per_user");
    s.session_len = cfg_.get_double("synth.session_len");
    s.in_community_prob = cfg_.get_double("synth.in_community_prob");
    s.title_vocab_mode = parse_vocab_mode(cfg_.get("synth.title_vocab_mode"));
    s.words_per_community = static_cast<int>(cfg_.get_int("synth.words_per_community"));
    s.asset_prob = cfg_.get_double("synth.asset_prob");
    s.error_status_prob = cfg_.get_double("synth.error_status_prob");
    s.missing_session_prob = cfg_.get_double("synth.missing_session_prob");
    s.seed = cfg_.get("synth.seed").empty() ? root_seed() : cfg_.get_u64("synth.seed");
    return s;
  }

  std::string synth() {
    const auto out = generate(synth_config());
    io::write_atomic(input_path("paths.log"), out.log);
    io::write_atomic(input_path("paths.catalog"), out.catalog);
    io::write_atomic(input_path("paths.truth"), out.truth.to_json().dump(2) + "\n");
    return "synth: " + std::to_string(out.truth.lines) + " log lines, " + std::to_string(out.truth.sessions) +
           " sessions, " + std::to_string(out.truth.doc_community.size()) + " documents";
  }

  // -- parse / clean --------------------------------------------------------
  std::string parse() {
    const auto text = read_input("paths.log", "log file");
    const auto r = parse_log_text(text, cfg_.get_bool("run.strict"), threads_);
    nlohmann::ordered_json rep{{"lines", r.lines}, {"parsed", r.entries.size()}, {"malformed", r.malformed}};
    auto issues = nlohmann::ordered_json::array();
    for (const auto& i : r.issues) issues.push_back({{"line", i.line_number}, {"error", i.message}});
    rep["issues"] = std::move(issues);
    io::write_atomic(path_of(artifact::kParsed), serialize_log(r.entries));
    write_json(artifact::kParseReport, rep);
    return "parse: " + std::to_string(r.entries.size()) + " of " + std::to_string(r.lines) + " lines parsed";
  }

  CleaningConfig cleaning_config() const {
    CleaningConfig c;
    c.asset_suffixes.clear();
    for (auto s : io::split(cfg_.get("cleaning.asset_suffixes"), ',')) {
      auto t = io::trim(s);
      if (!t.empty()) c.asset_suffixes.insert(to_lower(t));
    }
    c.status_low = static_cast<int>(cfg_.get_int("cleaning.status_low"));
    c.status_high = static_cast<int>(cfg_.get_int("cleaning.status_high"));
    c.validate();
    return c;
  }

  std::string clean() {
    const auto entries = load_entries(artifact::kParsed, "parse");
    const auto r = clean_log(entries, cleaning_config());
    io::write_atomic(path_of(artifact::kCleaned), serialize_log(r.entries));
    write_json(artifact::kCleanReport, r.report.to_json());
    return "clean: kept " + std::to_string(r.report.retained) + " of " + std::to_string(r.report.input) + " entries";
  }

  // -- sessions -------------------------------------------------------------
  PatternRegistry registry() const {
    if (cfg_.get("paths.registry").empty()) return PatternRegistry::defaults();
    const auto text = io::read_text(input_path("paths.registry"));
    try {
      return PatternRegistry::from_json(nlohmann::json::parse(text));
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorKind::ConfigError, std::string("pattern registry is not valid JSON: ") + ex.what());
    }
  }

  Catalog catalog() const {
    if (cfg_.get("paths.catalog").empty()) return {};
    return parse_catalog(read_input("paths.catalog", "catalog"));
  }

  std::string sessions() {
    const auto entries = load_entries(artifact::kCleaned, "clean");
    const auto cat = catalog();
    SessionOptions opts;
    opts.gap_seconds = cfg_.get_int("sessions.gap_seconds");
    const auto r = build_sessions(entries, registry(), cat.empty() ? nullptr : &cat, opts);
    io::write_atomic(path_of(artifact::kSessions), sessions_to_jsonl(r.sessions));
    write_json(artifact::kSessionReport, r.report.to_json());
    return "sessions: " + std::to_string(r.sessions.size()) + " sessions";
  }

  EvalConfig eval_config() const {
    EvalConfig e;
    e.min_doc_views = static_cast<int>(cfg_.get_int("eval.min_doc_views"));
    e.min_profile_items = static_cast<int>(cfg_.get_int("eval.min_profile_items"));
    e.k_clusters = static_cast<int>(cfg_.get_int("eval.k_clusters"));
    e.best_of = parse_best_of(cfg_.get("eval.best_of"));
    e.independent_maxima = cfg_.get_bool("eval.independent_maxima");
    e.restrict_before_threshold = cfg_.get_bool("eval.restrict_before_threshold");
    e.validate();
    return e;
  }

  // -- tfidf ----------------------------------------------------------------
  std::string tfidf() {
    const auto sess = load_sessions();
    const auto universe = select_top_documents(sess, eval_config());
    const auto cat = catalog();
    StopWords stop = cfg_.get("paths.stopwords").empty() ? default_stopwords()
                                                          : parse_stopwords(io::read_text(input_path("paths.stopwords")));
    std::vector<TitleDoc> docs;
    std::string docs_tsv;
    for (const auto& key : universe) {
      std::string title;
      if (auto it = cat.find(key); it != cat.end()) title = it->second;
      for (char& c : title)
        if (c == '\t') c = ' ';
      docs_tsv += key + '\t' + title + '\n';
      docs.push_back(make_title_doc(key, title, stop));
    }
    const auto dict = build_dictionary(docs);
    const auto m = build_matrix(docs, dict, cfg_.get_bool("tfidf.normalize"), parse_weighting(cfg_.get("tfidf.weighting")));
    io::write_atomic(path_of(artifact::kDocs), docs_tsv);
    io::write_atomic(path_of(artifact::kDictionary), dictionary_to_tsv(dict));
    io::write_atomic(path_of(artifact::kMatrix), matrix_to_tsv(m, dict));
    return "tfidf: " + std::to_string(docs.size()) + " documents, " + std::to_string(dict.size()) + " terms";
  }

  // -- mine -----------------------------------------------------------------
  std::string mine() {
    const auto sess = load_sessions();
    const auto universe = select_top_documents(sess, eval_config());
    TransactionOptions topts;
    topts.per_user = cfg_.get_bool("mining.per_user");
    topts.universe = &universe;
    const auto tx = build_transactions(sess, topts);
    MiningOptions mopts;
    mopts.min_support = cfg_.get_double("mining.min_support");
    mopts.max_itemset_size = static_cast<std::size_t>(cfg_.get_int("mining.max_itemset_size"));
    mopts.threads = threads_;
    const auto sets = mine_frequent_itemsets(tx.transactions, mopts);
    RuleOptions ropts;
    ropts.min_confidence = cfg_.get_double("mining.min_confidence");
    ropts.single_consequent = cfg_.get_bool("mining.single_consequent");
    const auto rules = generate_rules(sets, ropts);
    io::write_atomic(path_of(artifact::kItemsets), itemsets_to_tsv(sets));
    io::write_atomic(path_of(artifact::kRules), rules_to_tsv(rules));
    write_json(artifact::kMiningReport, nlohmann::ordered_json{{"transactions", tx.transactions.size()},
                                                               {"dropped_empty", tx.dropped_empty},
                                                               {"universe", universe.size()},
                                                               {"frequent_itemsets", sets.size()},
                                                               {"rules", rules.size()}});
    return "mine: " + std::to_string(tx.transactions.size()) + " transactions, " + std::to_string(sets.size()) +
           " frequent itemsets, " + std::to_string(rules.size()) + " rules";
  }

  // -- hypergraph / partition -----------------------------------------------
  std::string hypergraph() {
    const auto rules = rules_from_tsv(read_artifact(artifact::kRules, "mine"));
    const auto hg = build_hypergraph(rules, parse_edge_weight_mode(cfg_.get("hypergraph.edge_weight")));
    std::string names;
    for (const auto& n : hg.names()) names += n + '\n';
    io::write_atomic(path_of(artifact::kHypergraph), hypergraph_to_text(hg));
    io::write_atomic(path_of(artifact::kVertices), names);
    return "hypergraph: " + std::to_string(hg.num_vertices()) + " vertices, " + std::to_string(hg.num_edges()) + " hyperedges";
  }

  std::string partition() {
    const auto hg = load_hypergraph();
    PartitionOptions opts;
    opts.restarts = static_cast<int>(cfg_.get_int("partition.restarts"));
    opts.max_passes = static_cast<int>(cfg_.get_int("partition.max_passes"));
    const int k = static_cast<int>(cfg_.get_int("partition.k"));
    const auto r = partition_k(hg, k, cfg_.get_double("partition.epsilon"), derive_seed(root_seed(), "partition"), opts);
    const auto placed = isolated_vertex_placement(load_doc_ids(), hg, r.partition);
    std::string tsv;
    for (const auto& [doc, part] : placed) tsv += doc + '\t' + std::to_string(part) + '\n';
    io::write_atomic(path_of(artifact::kPartition), partition_to_text(r.partition.assignment));
    write_json(artifact::kCutReport, r.report.to_json());
    io::write_atomic(cluster_path("hypergraph"), tsv);
    return "partition: k=" + std::to_string(k) + " cut=" + io::format_double(r.report.cut) + " over " +
           std::to_string(hg.num_vertices()) + " vertices, " + std::to_string(placed.size() - static_cast<std::size_t>(hg.num_vertices())) +
           " isolated documents placed";
  }

  // -- content clustering ---------------------------------------------------
  std::string cluster(std::string_view algorithm) {
    const std::string algo = normalize_algorithm(algorithm);
    if (algo == "hypergraph") throw Error(ErrorKind::ConfigError, "hypergraph clusters come from the partition stage");
    const auto fm = load_features();
    const int k = static_cast<int>(cfg_.get_int("clustering.k"));
    const std::uint64_t seed = derive_seed(root_seed(), "cluster/" + algo);
    ClusterAssignment a;
    nlohmann::ordered_json trace = nlohmann::ordered_json::object();
    if (algo == "kmeans") {
      auto r = kmeans_detailed(fm, k, seed, static_cast<int>(cfg_.get_int("clustering.kmeans_max_iter")),
                               static_cast<int>(cfg_.get_int("clustering.kmeans_n_init")));
      a = std::move(r.assignment);
      trace["objective"] = r.objective;
    } else if (algo == "filtered") {
      a = filtered_kmeans(fm, k, seed, static_cast<int>(cfg_.get_int("clustering.kmeans_max_iter")),
                          static_cast<int>(cfg_.get_int("clustering.kmeans_n_init")));
    } else if (algo == "farthest_first") {
      a = farthest_first(fm, k, seed);
    } else if (algo == "hierarchical") {
      a = hierarchical(fm, k, parse_linkage(cfg_.get("clustering.hierarchical_linkage")));
    } else if (algo == "em") {
      EmOptions o;
      o.max_iter = static_cast<int>(cfg_.get_int("clustering.em_max_iter"));
      o.variance_floor = cfg_.get_double("clustering.em_variance_floor");
      o.projection_dims = static_cast<int>(cfg_.get_int("clustering.em_projection_dims"));
      auto r = em_mixture(fm, k, seed, o);
      a = std::move(r.assignment);
      trace["log_likelihood"] = r.log_likelihood;
    } else {
      a = dbscan(fm, cfg_.get_double("clustering.dbscan_eps"), static_cast<int>(cfg_.get_int("clustering.dbscan_min_pts")),
                 cfg_.get_bool("clustering.dbscan_drop_noise"));
    }
    io::write_atomic(cluster_path(algo), assignment_to_tsv(a));
    nlohmann::ordered_json meta{{"algorithm", algo}, {"seed", seed}, {"k_effective", a.k_effective}, {"params", a.params}};
    if (!trace.empty()) meta["trace"] = std::move(trace);
    io::write_atomic(workdir_ / "clusters" / (algo + ".json"), meta.dump(2) + "\n");
    return "cluster " + algo + ": " + std::to_string(a.k_effective) + " clusters over " + std::to_string(a.doc_ids.size()) +
           " documents";
  }

  // -- evaluate / recommend -------------------------------------------------
  struct Evaluation {
    std::vector<AlgorithmEval> rows;
    std::vector<UserProfile> profiles;
  };

  Evaluation evaluation() const {
    const auto sess = load_sessions();
    const auto cfg = eval_config();
    const auto universe = select_top_documents(sess, cfg);
    Evaluation ev;
    ev.profiles = build_profiles(sess, cfg, universe);
    for (const auto& [algo, label] : report_rows())
      ev.rows.push_back(evaluate_algorithm(label, load_assignment(algo), ev.profiles, cfg, threads_));
    return ev;
  }

  std::string evaluate() {
    const auto ev = evaluation();
    const std::string report = report_tsv(ev.rows);
    io::write_atomic(path_of(artifact::kReport), report);
    io::write_atomic(path_of(artifact::kReportDetail), report_detail_json(ev.rows, ev.profiles).dump(2) + "\n");
    io::write_atomic(path_of(artifact::kResolvedConfig), cfg_.to_text());
    return report;
  }

  /// Recommendations for every profiled user, or only `user` (host/username).
  std::string recommend(const std::string& user = {}) {
    const auto sess = load_sessions();
    const auto cfg = eval_config();
    const auto universe = select_top_documents(sess, cfg);
    const auto profiles = build_profiles(sess, cfg, universe);
    const std::string algo = normalize_algorithm(cfg_.get("eval.recommend_algorithm"));
    const auto clusters = clusters_of(load_assignment(algo));
    const auto popularity = view_counts(sess);
    const auto n = static_cast<std::size_t>(cfg_.get_int("eval.recommend_n"));
    std::string out;
    bool found = user.empty();
    for (const auto& p : profiles) {
      if (!user.empty() && p.user.str() != user) continue;
      found = true;
      nlohmann::ordered_json j{{"user", p.user.str()}, {"items", hyperlens::recommend(p, clusters, n, popularity, cfg)}};
      out += j.dump() + '\n';
    }
    if (!found) throw Error(ErrorKind::BadInput, "no profile for user " + user);
    if (user.empty()) io::write_atomic(path_of(artifact::kRecommendations), out);
    return out;
  }

  /// Every stage in order; returns the report table.
  std::string run_all() {
    note(parse());
    note(clean());
    note(sessions());
    note(tfidf());
    note(mine());
    note(hypergraph());
    note(partition());
    for (const auto& algo : content_algorithms()) note(cluster(algo));
    const std::string report = evaluate();
    const std::string recs = recommend();
    note("recommend: " + std::to_string(std::count(recs.begin(), recs.end(), '\n')) + " users");
    return report;
  }

  std::uint64_t root_seed() const { return cfg_.get_u64("run.seed"); }

 private:
  void check_k_consistency() const {
    const auto a = cfg_.get_int("partition.k");
    const auto b = cfg_.get_int("clustering.k");
    const auto c = cfg_.get_int("eval.k_clusters");
    if (a != b || b != c)
      throw Error(ErrorKind::ConfigError, "partition.k, clustering.k and eval.k_clusters disagree (" + std::to_string(a) + ", " +
                                              std::to_string(b) + ", " + std::to_string(c) + ")");
  }

  void note(const std::string& line) const {
    if (log_) *log_ << line << '\n';
  }

  std::string read_input(std::string_view key, std::string_view what) const {
    const auto p = input_path(key);
    if (!std::filesystem::exists(p)) throw Error(ErrorKind::MissingArtifact, std::string(what) + " not found at " + p.string());
    return io::read_text(p);
  }

  std::string read_artifact(std::string_view name, std::string_view producer) const {
    const auto p = path_of(name);
    if (!std::filesystem::exists(p))
      throw Error(ErrorKind::MissingArtifact, p.string() + " is missing; run the '" + std::string(producer) + "' stage first");
    return io::read_text(p);
  }

  void write_json(std::string_view name, const nlohmann::ordered_json& j) const {
    io::write_atomic(path_of(name), j.dump(2) + "\n");
  }

  std::vector<LogEntry> load_entries(std::string_view name, std::string_view producer) const {
    return parse_log_text(read_artifact(name, producer), true, threads_).entries;
  }

  std::vector<Session> load_sessions() const { return sessions_from_jsonl(read_artifact(artifact::kSessions, "sessions")); }

  std::vector<std::string> load_doc_ids() const {
    std::vector<std::string> ids;
    const std::string text = read_artifact(artifact::kDocs, "tfidf");
    for (auto line : io::lines(text))
      if (!line.empty()) ids.emplace_back(line.substr(0, line.find('\t')));
    return ids;
  }

  Hypergraph load_hypergraph() const {
    std::vector<std::string> names;
    const std::string text = read_artifact(artifact::kVertices, "hypergraph");
    for (auto line : io::lines(text))
      if (!line.empty()) names.emplace_back(line);
    return hypergraph_from_text(read_artifact(artifact::kHypergraph, "hypergraph"), std::move(names));
  }

  FeatureMatrix load_features() const {
    const auto ids = load_doc_ids();
    const auto dict = dictionary_from_tsv(read_artifact(artifact::kDictionary, "tfidf"), ids.size());
    return to_features(matrix_from_tsv(read_artifact(artifact::kMatrix, "tfidf"), dict, ids));
  }

  ClusterAssignment load_assignment(const std::string& algo) const {
    const auto p = cluster_path(algo);
    if (!std::filesystem::exists(p)) {
      const std::string stage = algo == "hypergraph" ? "partition" : "cluster " + algo;
      throw Error(ErrorKind::MissingArtifact, p.string() + " is missing; run the '" + stage + "' stage first");
    }
    return assignment_from_tsv(io::read_text(p), algo);
  }

  Config cfg_;
  std::filesystem::path workdir_;
  unsigned threads_;
  std::ostream* log_;
};

}  // namespace hyperlens
