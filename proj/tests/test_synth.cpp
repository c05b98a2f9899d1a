#include <gtest/gtest.h>

#include "hyperlens/session_builder.hpp"
#include "hyperlens/synth.hpp"
#include "hyperlens/text_index.hpp"

using namespace hyperlens;

namespace {

SynthConfig full_scale() {
  SynthConfig cfg;
  cfg.n_users = 400;
  cfg.n_docs = 300;
  cfg.n_communities = 17;
  cfg.in_community_prob = 0.9;
  return cfg;
}

}  // namespace

TEST(Generate, GroundTruthMatchesRecount) {
  const auto out = generate(full_scale());
  const auto parsed = parse_log_text(out.log, true);
  EXPECT_EQ(parsed.entries.size(), out.truth.lines);

  std::map<std::string, std::size_t> views;
  std::map<std::string, std::set<std::string>> distinct;
  std::set<std::pair<std::string, std::string>> sessions;
  const auto reg = PatternRegistry::defaults();
  const CleaningConfig cc;
  for (const auto& e : parsed.entries) {
    sessions.emplace(e.session_id, e.host + "/" + e.username);
    if (e.status < 200 || e.status > 299 || is_asset_request(e.url, cc)) continue;
    const auto ref = extract_resource(e.url, reg);
    ASSERT_TRUE(ref) << e.url;
    ++views[ref->key()];
    distinct[e.host + "/" + e.username].insert(ref->key());
  }
  EXPECT_EQ(views, out.truth.doc_views);
  std::map<std::string, std::size_t> counts;
  for (const auto& [u, s] : distinct) counts[u] = s.size();
  EXPECT_EQ(counts, out.truth.user_distinct_items);
  EXPECT_EQ(sessions.size(), out.truth.sessions);
  EXPECT_EQ(out.truth.user_community.size(), 400u);
}

TEST(Generate, Deterministic) {
  auto cfg = full_scale();
  cfg.seed = 9;
  const auto a = generate(cfg);
  const auto b = generate(cfg);
  EXPECT_EQ(a.log, b.log);
  EXPECT_EQ(a.catalog, b.catalog);
  EXPECT_EQ(a.truth.to_json(), b.truth.to_json());
  cfg.seed = 10;
  EXPECT_NE(generate(cfg).log, a.log);
}

TEST(Generate, UrlsMatchRegistryAndCatalog) {
  auto cfg = full_scale();
  cfg.title_vocab_mode = VocabMode::Shuffled;
  const auto out = generate(cfg);
  const Catalog catalog = parse_catalog(out.catalog);
  EXPECT_EQ(catalog.size(), 300u);
  const CleaningConfig cc;
  std::set<std::string> vendors;
  for (const auto& e : parse_log_text(out.log, true).entries) {
    if (is_asset_request(e.url, cc)) continue;
    const auto ref = extract_resource(e.url, PatternRegistry::defaults());
    ASSERT_TRUE(ref) << e.url;
    EXPECT_TRUE(catalog.count(ref->key())) << ref->key();
    vendors.insert(ref->vendor);
  }
  EXPECT_EQ(vendors, (std::set<std::string>{"ebrary", "ejournals"}));
}

TEST(Generate, CommunitySizesBalanced) {
  const auto out = generate(full_scale());
  std::map<int, int> sizes;
  for (const auto& [doc, c] : out.truth.doc_community) ++sizes[c];
  ASSERT_EQ(sizes.size(), 17u);
  const double target = 300.0 / 17;
  for (const auto& [c, n] : sizes) {
    EXPECT_GE(n, 0.8 * target);
    EXPECT_LE(n, 1.2 * target);
  }
}

TEST(Generate, PureAlignedSessionsStayInCommunity) {
  auto cfg = full_scale();
  cfg.in_community_prob = 1.0;
  cfg.title_vocab_mode = VocabMode::Aligned;
  const auto out = generate(cfg);
  const auto cleaned = clean_log(parse_log_text(out.log, true).entries, CleaningConfig{});
  for (const auto& s : build_sessions(cleaned.entries, PatternRegistry::defaults()).sessions) {
    std::set<int> communities;
    for (const auto& r : s.resources) communities.insert(out.truth.doc_community.at(r.key()));
    EXPECT_EQ(communities.size(), 1u);
    EXPECT_EQ(*communities.begin(), out.truth.user_community.at(s.user.str()));
  }
}

TEST(Generate, AlignedVocabularyIsDisjointAcrossCommunities) {
  auto cfg = full_scale();
  cfg.title_vocab_mode = VocabMode::Aligned;
  const auto out = generate(cfg);
  std::map<std::string, std::set<int>> word_communities;
  for (const auto& [key, title] : parse_catalog(out.catalog))
    for (const auto& w : tokenize(title)) word_communities[w].insert(out.truth.doc_community.at(key));
  for (const auto& [w, cs] : word_communities) EXPECT_EQ(cs.size(), 1u) << w;

  cfg.title_vocab_mode = VocabMode::Shuffled;
  const auto shuffled = generate(cfg);
  std::size_t mixed = 0;
  word_communities.clear();
  for (const auto& [key, title] : parse_catalog(shuffled.catalog))
    for (const auto& w : tokenize(title)) word_communities[w].insert(shuffled.truth.doc_community.at(key));
  for (const auto& [w, cs] : word_communities) mixed += cs.size() > 1;
  EXPECT_GT(mixed, word_communities.size() / 2);
}

TEST(Generate, MissingSessionIds) {
  auto cfg = full_scale();
  cfg.n_users = 50;
  cfg.missing_session_prob = 1.0;
  for (const auto& e : parse_log_text(generate(cfg).log, true).entries) EXPECT_FALSE(e.has_session());
}

TEST(SynthConfig, Validation) {
  auto bad = full_scale();
  bad.n_communities = 301;
  try {
    bad.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidConfig);
  }
  bad = full_scale();
  bad.in_community_prob = 1.5;
  EXPECT_THROW(generate(bad), Error);
  bad = full_scale();
  bad.sessions_per_user = 0.5;
  EXPECT_THROW(bad.validate(), Error);
  EXPECT_EQ(parse_vocab_mode("shuffled"), VocabMode::Shuffled);
  EXPECT_THROW(parse_vocab_mode("random"), Error);
}

TEST(GroundTruth, JsonRoundTrip) {
  auto cfg = full_scale();
  cfg.n_users = 30;
  const auto t = generate(cfg).truth;
  const auto back = GroundTruth::from_json(nlohmann::json::parse(t.to_json().dump()));
  EXPECT_EQ(back.to_json(), t.to_json());
  EXPECT_THROW(GroundTruth::from_json(nlohmann::json::parse("{}")), Error);
}
