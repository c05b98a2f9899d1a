#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "hyperlens/clustering.hpp"
#include "hyperlens/error.hpp"
#include "hyperlens/io.hpp"
#include "hyperlens/parallel.hpp"
#include "hyperlens/session_builder.hpp"

namespace hyperlens {

enum class BestOf { F1, Precision, Recall };

inline BestOf parse_best_of(std::string_view s) {
  if (s == "f1") return BestOf::F1;
  if (s == "precision") return BestOf::Precision;
  if (s == "recall") return BestOf::Recall;
  throw Error(ErrorKind::ConfigError, "best_of must be f1, precision or recall");
}

inline std::string_view to_string(BestOf b) {
  switch (b) {
    case BestOf::F1: return "f1";
    case BestOf::Precision: return "precision";
    case BestOf::Recall: return "recall";
  }
  return "?";
}

struct EvalConfig {
  int min_doc_views = 10;
  int min_profile_items = 15;
  int k_clusters = 17;
  BestOf best_of = BestOf::F1;
  bool independent_maxima = false;   // per-metric maxima instead of the best cluster's triple
  bool restrict_before_threshold = true;

  void validate() const {
    if (min_doc_views < 1 || min_profile_items < 1 || k_clusters < 1)
      throw Error(ErrorKind::ConfigError, "evaluation thresholds must be positive");
  }
};

using DocSet = std::set<std::string, std::less<>>;

/// Views per document over all sessions, repeats included.
inline std::map<std::string, std::size_t> view_counts(const std::vector<Session>& sessions) {
  std::map<std::string, std::size_t> out;
  for (const auto& s : sessions)
    for (const auto& r : s.resources) ++out[r.key()];
  return out;
}

inline DocSet select_top_documents(const std::vector<Session>& sessions, const EvalConfig& cfg) {
  DocSet out;
  for (const auto& [doc, n] : view_counts(sessions))
    if (n >= static_cast<std::size_t>(cfg.min_doc_views)) out.insert(doc);
  return out;
}

struct UserProfile {
  UserKey user;
  DocSet items;
};

/// Users with at least `min_profile_items` distinct documents. Items are
/// restricted to `universe` before the threshold unless configured otherwise,
/// and always restricted afterwards.
inline std::vector<UserProfile> build_profiles(const std::vector<Session>& sessions, const EvalConfig& cfg,
                                               const DocSet& universe) {
  std::map<UserKey, DocSet> all;
  for (const auto& s : sessions)
    for (const auto& r : s.resources) all[s.user].insert(r.key());
  std::vector<UserProfile> out;
  for (auto& [user, docs] : all) {
    DocSet kept;
    for (const auto& d : docs)
      if (universe.count(d)) kept.insert(d);
    const std::size_t n = cfg.restrict_before_threshold ? kept.size() : docs.size();
    if (n < static_cast<std::size_t>(cfg.min_profile_items) || kept.empty()) continue;
    out.push_back({user, std::move(kept)});
  }
  return out;
}

struct ScoreTriple {
  double precision = 0;
  double recall = 0;
  double f1 = 0;

  double get(BestOf b) const { return b == BestOf::F1 ? f1 : b == BestOf::Precision ? precision : recall; }
};

inline double f1_of(double p, double r) { return p + r > 0 ? 2 * p * r / (p + r) : 0.0; }

/// Cluster members are the predicted positives, profile items the actual
/// positives.
inline ScoreTriple score_pair(const DocSet& profile, const DocSet& cluster) {
  if (cluster.empty()) throw Error(ErrorKind::EmptyCluster, "cannot score an empty cluster");
  std::size_t hit = 0;
  for (const auto& d : cluster) hit += profile.count(d);
  ScoreTriple t;
  t.precision = static_cast<double>(hit) / static_cast<double>(cluster.size());
  t.recall = profile.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(profile.size());
  t.f1 = f1_of(t.precision, t.recall);
  return t;
}

struct UserScore {
  ScoreTriple score;
  int cluster = -1;  // winning cluster; -1 with independent maxima
};

inline UserScore score_user(const UserProfile& profile, const std::vector<DocSet>& clusters, const EvalConfig& cfg) {
  UserScore best;
  bool first = true;
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    const auto t = score_pair(profile.items, clusters[c]);
    if (cfg.independent_maxima) {
      best.score.precision = std::max(best.score.precision, t.precision);
      best.score.recall = std::max(best.score.recall, t.recall);
      best.score.f1 = std::max(best.score.f1, t.f1);
      continue;
    }
    if (first || t.get(cfg.best_of) > best.score.get(cfg.best_of)) {
      best = {t, static_cast<int>(c)};
      first = false;
    }
  }
  return best;
}

inline std::vector<DocSet> clusters_of(const ClusterAssignment& a) {
  std::vector<DocSet> out(static_cast<std::size_t>(a.k_effective));
  for (std::size_t i = 0; i < a.doc_ids.size(); ++i) out[static_cast<std::size_t>(a.labels[i])].insert(a.doc_ids[i]);
  return out;
}

struct AlgorithmEval {
  std::string algorithm;
  ScoreTriple mean;
  std::vector<UserScore> per_user;  // aligned with the profile list
};

inline AlgorithmEval evaluate_algorithm(std::string algorithm, const std::vector<DocSet>& clusters,
                                        const std::vector<UserProfile>& profiles, const EvalConfig& cfg,
                                        unsigned threads = 1) {
  if (profiles.empty()) throw Error(ErrorKind::NoProfiles, "no user profile meets the selection thresholds");
  AlgorithmEval out{std::move(algorithm), {}, std::vector<UserScore>(profiles.size())};
  parallel_for(profiles.size(), threads, [&](std::size_t i) { out.per_user[i] = score_user(profiles[i], clusters, cfg); });
  for (const auto& u : out.per_user) {
    out.mean.precision += u.score.precision;
    out.mean.recall += u.score.recall;
    out.mean.f1 += u.score.f1;
  }
  const auto n = static_cast<double>(profiles.size());
  out.mean.precision /= n;
  out.mean.recall /= n;
  out.mean.f1 /= n;
  return out;
}

inline AlgorithmEval evaluate_algorithm(std::string algorithm, const ClusterAssignment& a,
                                        const std::vector<UserProfile>& profiles, const EvalConfig& cfg,
                                        unsigned threads = 1) {
  return evaluate_algorithm(std::move(algorithm), clusters_of(a), profiles, cfg, threads);
}

/// Unseen members of the user's best cluster, most viewed first (ties by id).
inline std::vector<std::string> recommend(const UserProfile& profile, const std::vector<DocSet>& clusters, std::size_t n,
                                          const std::map<std::string, std::size_t>& popularity, const EvalConfig& cfg) {
  if (n < 1) throw Error(ErrorKind::ConfigError, "recommendation count must be at least 1");
  EvalConfig pick = cfg;
  pick.independent_maxima = false;
  const auto best = score_user(profile, clusters, pick);
  std::vector<std::string> out;
  if (best.cluster < 0) return out;
  for (const auto& d : clusters[static_cast<std::size_t>(best.cluster)])
    if (!profile.items.count(d)) out.push_back(d);
  auto views = [&](const std::string& d) {
    auto it = popularity.find(d);
    return it == popularity.end() ? std::size_t{0} : it->second;
  };
  std::stable_sort(out.begin(), out.end(), [&](const std::string& a, const std::string& b) { return views(a) > views(b); });
  if (out.size() > n) out.resize(n);
  return out;
}

/// Report row labels in the order the results table lists them.
inline const std::vector<std::pair<std::string, std::string>>& report_rows() {
  static const std::vector<std::pair<std::string, std::string>> rows = {
      {"em", "EM"},           {"filtered", "Filtered"},         {"kmeans", "K-Mean"},        {"farthest_first", "FarthestFirst"},
      {"dbscan", "Density"},  {"hierarchical", "Hierarchical"}, {"hypergraph", "Hypergraph"}};
  return rows;
}

inline std::string report_tsv(const std::vector<AlgorithmEval>& evals) {
  std::string out = "algorithm\tprecision\trecall\tf1\n";
  for (const auto& e : evals)
    out += e.algorithm + '\t' + io::format_fixed(e.mean.precision, 4) + '\t' + io::format_fixed(e.mean.recall, 4) + '\t' +
           io::format_fixed(e.mean.f1, 4) + '\n';
  return out;
}

inline nlohmann::ordered_json report_detail_json(const std::vector<AlgorithmEval>& evals,
                                                 const std::vector<UserProfile>& profiles) {
  auto out = nlohmann::ordered_json::array();
  for (const auto& e : evals) {
    nlohmann::ordered_json users = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < profiles.size(); ++i)
      users.push_back({{"user", profiles[i].user.str()},
                       {"profile_size", profiles[i].items.size()},
                       {"cluster", e.per_user[i].cluster},
                       {"precision", e.per_user[i].score.precision},
                       {"recall", e.per_user[i].score.recall},
                       {"f1", e.per_user[i].score.f1}});
    out.push_back({{"algorithm", e.algorithm},
                   {"precision", e.mean.precision},
                   {"recall", e.mean.recall},
                   {"f1", e.mean.f1},
                   {"users", std::move(users)}});
  }
  return out;
}

}  // namespace hyperlens
