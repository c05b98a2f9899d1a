#include <gtest/gtest.h>

#include "hyperlens/evaluation.hpp"
#include "hyperlens/synth.hpp"

using namespace hyperlens;

namespace {

Session session(const std::string& user, std::vector<std::string> docs) {
  Session s;
  s.session_id = "s-" + user;
  s.user = UserKey{"10.0.0.1", user};
  for (auto& d : docs) s.resources.push_back(ResourceRef{"ebrary", std::move(d), {}, {}});
  return s;
}

UserProfile profile(DocSet items) { return UserProfile{UserKey{"10.0.0.1", "u"}, std::move(items)}; }

std::vector<Session> planted_sessions(const SynthConfig& cfg) {
  const auto out = generate(cfg);
  const auto cleaned = clean_log(parse_log_text(out.log, true).entries, CleaningConfig{});
  return build_sessions(cleaned.entries, PatternRegistry::defaults()).sessions;
}

}  // namespace

TEST(ScorePair, WorkedExample) {
  const auto t = score_pair({"a", "b", "e"}, {"a", "b", "c", "d"});
  EXPECT_NEAR(t.precision, 0.5, 1e-9);
  EXPECT_NEAR(t.recall, 2.0 / 3.0, 1e-9);
  EXPECT_NEAR(t.f1, 4.0 / 7.0, 1e-9);
}

TEST(ScorePair, IdentityAndDisjoint) {
  const auto same = score_pair({"a", "b"}, {"a", "b"});
  EXPECT_EQ(same.precision, 1.0);
  EXPECT_EQ(same.recall, 1.0);
  EXPECT_EQ(same.f1, 1.0);
  const auto none = score_pair({"a", "b"}, {"c"});
  EXPECT_EQ(none.precision, 0.0);
  EXPECT_EQ(none.recall, 0.0);
  EXPECT_EQ(none.f1, 0.0);
}

TEST(ScorePair, EmptyCluster) {
  try {
    score_pair({"a"}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyCluster);
  }
}

TEST(ScorePair, HarmonicMeanBounds) {
  Rng rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    DocSet p, c;
    for (int i = 0; i < 20; ++i) {
      if (rng.bernoulli(0.3)) p.insert("d" + std::to_string(i));
      if (rng.bernoulli(0.3)) c.insert("d" + std::to_string(i));
    }
    if (c.empty()) continue;
    const auto t = score_pair(p, c);
    for (double v : {t.precision, t.recall, t.f1}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
    if (t.precision > 0 && t.recall > 0) {
      EXPECT_LE(t.f1, std::max(t.precision, t.recall) + 1e-15);
      EXPECT_GE(t.f1, std::min(t.precision, t.recall) - 1e-15);
    }
  }
}

TEST(ScoreUser, ExactMatchWins) {
  const auto u = score_user(profile({"a", "b"}), {{"c", "d"}, {"a", "b"}, {"a", "e"}}, EvalConfig{});
  EXPECT_EQ(u.cluster, 1);
  EXPECT_EQ(u.score.f1, 1.0);
  const auto z = score_user(profile({"a", "b"}), {{"c"}, {"d"}}, EvalConfig{});
  EXPECT_EQ(z.score.f1, 0.0);
  EXPECT_EQ(z.score.precision, 0.0);
  EXPECT_EQ(z.cluster, 0);
}

TEST(ScoreUser, TiesGoToLowestCluster) {
  const auto u = score_user(profile({"a", "b"}), {{"c"}, {"a", "x"}, {"b", "y"}}, EvalConfig{});
  EXPECT_EQ(u.cluster, 1);
}

TEST(ScoreUser, MatchesExplicitScan) {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    DocSet items;
    for (int i = 0; i < 40; ++i)
      if (rng.bernoulli(0.4)) items.insert("d" + std::to_string(i));
    std::vector<DocSet> clusters(6);
    for (int i = 0; i < 40; ++i) clusters[rng.below(6)].insert("d" + std::to_string(i));
    std::erase_if(clusters, [](const DocSet& c) { return c.empty(); });
    for (BestOf metric : {BestOf::F1, BestOf::Precision, BestOf::Recall}) {
      EvalConfig cfg;
      cfg.best_of = metric;
      // Direct loop over the definitions.
      int best = -1;
      double best_v = -1, bp = 0, br = 0;
      for (std::size_t c = 0; c < clusters.size(); ++c) {
        std::size_t hit = 0;
        for (const auto& d : clusters[c]) hit += items.count(d);
        const double p = static_cast<double>(hit) / clusters[c].size();
        const double r = items.empty() ? 0 : static_cast<double>(hit) / items.size();
        const double f = p + r == 0 ? 0 : 2 * p * r / (p + r);
        const double v = metric == BestOf::F1 ? f : metric == BestOf::Precision ? p : r;
        if (v > best_v) {
          best_v = v;
          best = static_cast<int>(c);
          bp = p;
          br = r;
        }
      }
      const auto u = score_user(profile(items), clusters, cfg);
      EXPECT_EQ(u.cluster, best);
      EXPECT_DOUBLE_EQ(u.score.precision, bp);
      EXPECT_DOUBLE_EQ(u.score.recall, br);
    }
  }
}

TEST(ScoreUser, IndependentMaxima) {
  EvalConfig cfg;
  cfg.independent_maxima = true;
  // Cluster 0 has the best precision, cluster 1 the best recall.
  const auto u = score_user(profile({"a", "b", "c", "d"}), {{"a"}, {"a", "b", "c", "d", "x", "y", "z", "w"}}, cfg);
  EXPECT_EQ(u.cluster, -1);
  EXPECT_EQ(u.score.precision, 1.0);
  EXPECT_EQ(u.score.recall, 1.0);
}

TEST(EvaluateAlgorithm, Averaging) {
  const std::vector<DocSet> clusters = {{"a", "b"}, {"c", "d"}};
  const std::vector<UserProfile> one = {profile({"a", "b"})};
  const auto single = evaluate_algorithm("x", clusters, one, EvalConfig{});
  EXPECT_EQ(single.mean.f1, 1.0);
  const std::vector<UserProfile> two = {profile({"a", "b"}), profile({"z"})};
  const auto avg = evaluate_algorithm("x", clusters, two, EvalConfig{});
  EXPECT_EQ(avg.mean.precision, 0.5);
  EXPECT_EQ(avg.mean.recall, 0.5);
  EXPECT_EQ(avg.mean.f1, 0.5);
  const std::vector<UserProfile> swapped = {two[1], two[0]};
  EXPECT_EQ(evaluate_algorithm("x", clusters, swapped, EvalConfig{}).mean.f1, avg.mean.f1);
  try {
    evaluate_algorithm("x", clusters, {}, EvalConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoProfiles);
  }
}

TEST(EvaluateAlgorithm, ThreadCountDoesNotMatter) {
  Rng rng(3);
  std::vector<DocSet> clusters(5);
  for (int i = 0; i < 50; ++i) clusters[rng.below(5)].insert("d" + std::to_string(i));
  std::vector<UserProfile> users;
  for (int u = 0; u < 40; ++u) {
    DocSet items;
    for (int i = 0; i < 50; ++i)
      if (rng.bernoulli(0.2)) items.insert("d" + std::to_string(i));
    users.push_back(profile(items));
  }
  const auto a = evaluate_algorithm("x", clusters, users, EvalConfig{}, 1);
  const auto b = evaluate_algorithm("x", clusters, users, EvalConfig{}, 4);
  EXPECT_EQ(a.mean.f1, b.mean.f1);
  EXPECT_EQ(a.mean.precision, b.mean.precision);
}

TEST(SelectTopDocuments, InclusiveThreshold) {
  std::vector<Session> s;
  std::vector<std::string> views(10, "ten");
  for (int i = 0; i < 9; ++i) views.push_back("nine");
  s.push_back(session("u", views));
  const auto top = select_top_documents(s, EvalConfig{});
  EXPECT_EQ(top, (DocSet{"ebrary:ten"}));
}

TEST(BuildProfiles, DistinctItemsAndRestriction) {
  std::vector<std::string> fifteen, many_views;
  for (int i = 0; i < 15; ++i) fifteen.push_back("d" + std::to_string(i));
  for (int i = 0; i < 20; ++i) many_views.push_back("d" + std::to_string(i % 5));
  const std::vector<Session> s = {session("a", fifteen), session("b", many_views)};
  DocSet universe;
  for (int i = 0; i < 15; ++i) universe.insert("ebrary:d" + std::to_string(i));
  const auto p = build_profiles(s, EvalConfig{}, universe);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0].user.username, "a");
  EXPECT_EQ(p[0].items.size(), 15u);

  DocSet small = {"ebrary:d0"};
  EXPECT_TRUE(build_profiles(s, EvalConfig{}, small).empty());
  EvalConfig after;
  after.restrict_before_threshold = false;
  const auto q = build_profiles(s, after, small);
  ASSERT_EQ(q.size(), 1u);
  EXPECT_EQ(q[0].items, small);
}

TEST(PlantedData, TopDocumentsAndProfilesMatchGroundTruth) {
  SynthConfig cfg;
  cfg.seed = 4;
  const auto truth = generate(cfg).truth;
  const auto sessions = planted_sessions(cfg);
  DocSet expect;
  for (const auto& [doc, n] : truth.doc_views)
    if (n >= 10) expect.insert(doc);
  EXPECT_EQ(select_top_documents(sessions, EvalConfig{}), expect);

  EvalConfig loose;
  loose.min_doc_views = 1;
  std::size_t users = 0;
  for (const auto& [user, n] : truth.user_distinct_items) users += n >= 15;
  EXPECT_EQ(build_profiles(sessions, loose, select_top_documents(sessions, loose)).size(), users);
}

TEST(Recommend, Properties) {
  const std::vector<DocSet> clusters = {{"a", "b", "c", "d", "e"}, {"x", "y"}};
  const std::map<std::string, std::size_t> pop = {{"c", 5}, {"d", 9}, {"e", 5}};
  const auto r = recommend(profile({"a", "b"}), clusters, 10, pop, EvalConfig{});
  EXPECT_EQ(r, (std::vector<std::string>{"d", "c", "e"}));
  EXPECT_EQ(recommend(profile({"a", "b"}), clusters, 1, pop, EvalConfig{}), std::vector<std::string>{"d"});
  EXPECT_TRUE(recommend(profile({"x", "y"}), clusters, 3, pop, EvalConfig{}).empty());
  EXPECT_THROW(recommend(profile({"a"}), clusters, 0, pop, EvalConfig{}), Error);
}

TEST(Report, TableShape) {
  std::vector<AlgorithmEval> evals;
  for (const auto& [algo, label] : report_rows()) evals.push_back(AlgorithmEval{label, {0.5, 0.25, f1_of(0.5, 0.25)}, {}});
  const auto tsv = report_tsv(evals);
  EXPECT_EQ(tsv,
            "algorithm\tprecision\trecall\tf1\n"
            "EM\t0.5000\t0.2500\t0.3333\n"
            "Filtered\t0.5000\t0.2500\t0.3333\n"
            "K-Mean\t0.5000\t0.2500\t0.3333\n"
            "FarthestFirst\t0.5000\t0.2500\t0.3333\n"
            "Density\t0.5000\t0.2500\t0.3333\n"
            "Hierarchical\t0.5000\t0.2500\t0.3333\n"
            "Hypergraph\t0.5000\t0.2500\t0.3333\n");
}

TEST(EvalConfig, Validation) {
  EvalConfig c;
  c.min_profile_items = 0;
  EXPECT_THROW(c.validate(), Error);
  EXPECT_EQ(parse_best_of("precision"), BestOf::Precision);
  EXPECT_THROW(parse_best_of("auc"), Error);
}
