#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "hyperlens/random.hpp"
#include "hyperlens/text_index.hpp"

using namespace hyperlens;

namespace {

using Strings = std::vector<std::string>;

const Strings kWords = {"network", "theory", "games", "library", "data",  "mining", "graph",  "rules",
                        "learning", "music", "history", "canada",  "ocean", "design", "health", "policy"};

std::vector<TitleDoc> random_docs(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<TitleDoc> docs;
  for (std::size_t i = 0; i < n; ++i) {
    std::string title;
    const std::size_t len = 1 + rng.below(6);
    for (std::size_t w = 0; w < len; ++w) {
      if (w) title += rng.below(3) == 0 ? " of the " : " ";
      title += kWords[rng.below(kWords.size())];
    }
    docs.push_back(make_title_doc("d" + std::to_string(i), title));
  }
  return docs;
}

}  // namespace

TEST(Tokenize, Examples) {
  EXPECT_EQ(tokenize("The Theory of Games"), (Strings{"theory", "games"}));
  EXPECT_EQ(tokenize(""), Strings{});
  EXPECT_EQ(tokenize("TCP/IP Networks!"), (Strings{"tcp", "ip", "networks"}));
}

TEST(Tokenize, DropsShortTokensAndKeepsOrder) {
  EXPECT_EQ(tokenize("A b C++ zz-top, 42"), (Strings{"zz", "top", "42"}));
  EXPECT_EQ(tokenize("Data data DATA"), (Strings{"data", "data", "data"}));
}

TEST(Tokenize, CustomStopwords) {
  const auto sw = parse_stopwords("# comment\nfoo\n  Bar \n\n");
  EXPECT_EQ(tokenize("foo bar the baz", sw), (Strings{"the", "baz"}));
}

TEST(Idf, Examples) {
  std::vector<TitleDoc> all;
  for (int i = 0; i < 100; ++i) all.push_back(make_title_doc(std::to_string(i), "common words"));
  const auto d = build_dictionary(all);
  EXPECT_EQ(idf("common", d), 0.0);

  std::vector<TitleDoc> eight;
  for (int i = 0; i < 8; ++i) eight.push_back(make_title_doc(std::to_string(i), i < 2 ? "rare filler" : "filler"));
  const auto d8 = build_dictionary(eight);
  EXPECT_NEAR(idf("rare", d8), std::log(4.0), 1e-12);
  EXPECT_EQ(idf("filler", d8), 0.0);
}

TEST(Idf, UnknownTerm) {
  const auto d = build_dictionary({make_title_doc("a", "alpha beta")});
  try {
    idf("gamma", d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnknownTerm);
  }
}

TEST(Dictionary, DfMatchesRecountOnThousandTitles) {
  const auto docs = random_docs(1000, 11);
  const auto dict = build_dictionary(docs);
  std::map<std::string, std::size_t> recount;
  for (const auto& doc : docs) {
    std::set<std::string> seen;
    for (const auto& w : tokenize(doc.title)) seen.insert(w);
    for (const auto& w : seen) ++recount[w];
  }
  ASSERT_EQ(dict.size(), recount.size());
  EXPECT_EQ(dict.n_docs, 1000u);
  for (const auto& [term, df] : recount) {
    const std::size_t* i = dict.find(term);
    ASSERT_NE(i, nullptr) << term;
    EXPECT_EQ(dict.df[*i], df) << term;
    EXPECT_GE(dict.df[*i], 1u);
    EXPECT_LE(dict.df[*i], dict.n_docs);
  }
  EXPECT_TRUE(std::is_sorted(dict.terms.begin(), dict.terms.end()));
}

TEST(BuildMatrix, EqualsDirectRecomputation) {
  const auto docs = random_docs(50, 3);
  const auto dict = build_dictionary(docs);
  const auto m = build_matrix(docs, dict, false);
  std::size_t incidences = 0;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const auto row = m.dense_row(d);
    std::set<std::string> distinct;
    for (std::size_t t = 0; t < dict.size(); ++t) {
      std::size_t count = 0;
      for (const auto& w : tokenize(docs[d].title)) count += w == dict.terms[t];
      std::size_t df = 0;
      for (const auto& other : docs) {
        const auto toks = tokenize(other.title);
        df += std::find(toks.begin(), toks.end(), dict.terms[t]) != toks.end();
      }
      const double expect = count * std::log(50.0 / df);
      EXPECT_NEAR(row[t], expect, 1e-12);
      if (count) distinct.insert(dict.terms[t]);
    }
    incidences += distinct.size();
  }
  // Zero-weight cells (df = N) are not stored.
  std::size_t full_df = 0;
  for (std::size_t d = 0; d < docs.size(); ++d)
    for (std::size_t t = 0; t < dict.size(); ++t)
      if (dict.df[t] == docs.size() && std::count(docs[d].terms.begin(), docs[d].terms.end(), dict.terms[t])) ++full_df;
  EXPECT_EQ(m.nonzeros(), incidences - full_df);
}

TEST(BuildMatrix, PureIdfIgnoresCounts) {
  const std::vector<TitleDoc> docs = {make_title_doc("a", "graph graph theory"), make_title_doc("b", "music")};
  const auto dict = build_dictionary(docs);
  const auto m = build_matrix(docs, dict, false, Weighting::Idf);
  EXPECT_NEAR(m.dense_row(0)[*dict.find("graph")], std::log(2.0), 1e-12);
  const auto tf = build_matrix(docs, dict, false);
  EXPECT_NEAR(tf.dense_row(0)[*dict.find("graph")], 2 * std::log(2.0), 1e-12);
}

TEST(BuildMatrix, NormalizationAndCosine) {
  auto docs = random_docs(40, 5);
  docs.push_back(make_title_doc("dup1", "ocean policy design"));
  docs.push_back(make_title_doc("dup2", "Ocean, Policy & Design"));
  const auto dict = build_dictionary(docs);
  const auto m = build_matrix(docs, dict, true);
  EXPECT_TRUE(m.row_normalized);
  for (std::size_t d = 0; d < m.rows.size(); ++d) {
    double norm = 0;
    for (auto [t, w] : m.rows[d]) {
      EXPECT_GT(w, 0.0);
      norm += w * w;
    }
    if (!m.rows[d].empty()) EXPECT_NEAR(std::sqrt(norm), 1.0, 1e-9);
  }
  const std::size_t n = docs.size();
  EXPECT_EQ(m.rows[n - 1], m.rows[n - 2]);
  EXPECT_NEAR(cosine_similarity(m, n - 1, n - 2), 1.0, 1e-9);
}

TEST(BuildMatrix, AllTermsEverywhereGiveZeroRow) {
  const std::vector<TitleDoc> docs = {make_title_doc("a", "shared words"), make_title_doc("b", "words shared")};
  const auto m = build_matrix(docs, build_dictionary(docs), true);
  EXPECT_TRUE(m.rows[0].empty());
  EXPECT_TRUE(m.rows[1].empty());
  EXPECT_EQ(cosine_similarity(m, 0, 1), 0.0);
}

TEST(BuildMatrix, EmptyDictionary) {
  const std::vector<TitleDoc> docs = {make_title_doc("a", "the of and")};
  try {
    build_matrix(docs, build_dictionary(docs), true);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyDictionary);
  }
}

TEST(Export, TsvRoundTrip) {
  const auto docs = random_docs(30, 9);
  const auto dict = build_dictionary(docs);
  const auto m = build_matrix(docs, dict, true);
  const auto dict2 = dictionary_from_tsv(dictionary_to_tsv(dict), dict.n_docs);
  EXPECT_EQ(dict2.terms, dict.terms);
  EXPECT_EQ(dict2.df, dict.df);
  const auto m2 = matrix_from_tsv(matrix_to_tsv(m, dict), dict2, m.doc_ids);
  ASSERT_EQ(m2.rows.size(), m.rows.size());
  for (std::size_t d = 0; d < m.rows.size(); ++d) {
    ASSERT_EQ(m2.rows[d].size(), m.rows[d].size());
    for (std::size_t i = 0; i < m.rows[d].size(); ++i) {
      EXPECT_EQ(m2.rows[d][i].first, m.rows[d][i].first);
      EXPECT_DOUBLE_EQ(m2.rows[d][i].second, m.rows[d][i].second);
    }
  }
  EXPECT_THROW(matrix_from_tsv("d0\tnope\t1\n", dict2, m.doc_ids), Error);
}

TEST(Weighting, Parse) {
  EXPECT_EQ(parse_weighting("tf-idf"), Weighting::TfIdf);
  EXPECT_EQ(parse_weighting("idf"), Weighting::Idf);
  EXPECT_THROW(parse_weighting("bm25"), Error);
}
