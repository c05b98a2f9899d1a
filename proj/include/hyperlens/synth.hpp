#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "hyperlens/error.hpp"
#include "hyperlens/io.hpp"
#include "hyperlens/log_ingest.hpp"
#include "hyperlens/random.hpp"

namespace hyperlens {

enum class VocabMode { Aligned, Shuffled };

inline VocabMode parse_vocab_mode(std::string_view s) {
  if (s == "aligned") return VocabMode::Aligned;
  if (s == "shuffled") return VocabMode::Shuffled;
  throw Error(ErrorKind::InvalidConfig, "title_vocab_mode must be aligned or shuffled");
}

inline std::string_view to_string(VocabMode m) { return m == VocabMode::Aligned ? "aligned" : "shuffled"; }

/// Parameters of the planted-community log generator.
///
/// Each community's documents sit on a ring; a session reads a run of
/// consecutive ring documents, each view replaced by a uniformly drawn
/// outside document with probability 1 - in_community_prob.
struct SynthConfig {
  int n_users = 400;
  int n_docs = 300;
  int n_communities = 17;
  double sessions_per_user = 8.0;  // mean; at least one session each
  double session_len = 7.0;        // mean views per session
  double in_community_prob = 0.9;
  VocabMode title_vocab_mode = VocabMode::Aligned;
  std::uint64_t seed = 1;
  int words_per_community = 6;
  double asset_prob = 0.15;         // extra image/stylesheet hit after a view
  double error_status_prob = 0.03;  // extra non-2xx hit after a view
  double missing_session_prob = 0.0;
  double mean_view_gap_seconds = 60.0;
  std::int64_t start_utc = 1401598800;  // 01/Jun/2014:00:00:00 -0500
  int utc_offset_minutes = -300;

  void validate() const {
    auto bad = [](const std::string& what) { throw Error(ErrorKind::InvalidConfig, what); };
    if (n_users < 1) bad("n_users must be positive");
    if (n_docs < 1) bad("n_docs must be positive");
    if (n_communities < 1 || n_communities > n_docs) bad("n_communities must be in [1, n_docs]");
    if (!(sessions_per_user >= 1)) bad("sessions_per_user must be at least 1");
    if (!(session_len >= 1)) bad("session_len must be at least 1");
    for (double p : {in_community_prob, asset_prob, error_status_prob, missing_session_prob})
      if (!(p >= 0 && p <= 1)) bad("probabilities must lie in [0, 1]");
    if (words_per_community < 1) bad("words_per_community must be positive");
    if (!(mean_view_gap_seconds > 0)) bad("mean_view_gap_seconds must be positive");
  }

  nlohmann::ordered_json to_json() const {
    return {{"n_users", n_users},
            {"n_docs", n_docs},
            {"n_communities", n_communities},
            {"sessions_per_user", sessions_per_user},
            {"session_len", session_len},
            {"in_community_prob", in_community_prob},
            {"title_vocab_mode", std::string(to_string(title_vocab_mode))},
            {"seed", seed},
            {"words_per_community", words_per_community},
            {"asset_prob", asset_prob},
            {"error_status_prob", error_status_prob},
            {"missing_session_prob", missing_session_prob}};
  }
};

struct GroundTruth {
  std::map<std::string, int> doc_community;     // canonical doc key
  std::map<std::string, int> user_community;    // host/username
  std::map<std::string, std::size_t> doc_views;  // successful document views
  std::map<std::string, std::size_t> user_distinct_items;
  std::size_t sessions = 0;
  std::size_t lines = 0;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["sessions"] = sessions;
    j["lines"] = lines;
    j["doc_community"] = doc_community;
    j["user_community"] = user_community;
    j["doc_views"] = doc_views;
    j["user_distinct_items"] = user_distinct_items;
    return j;
  }

  static GroundTruth from_json(const nlohmann::json& j) {
    GroundTruth t;
    try {
      t.sessions = j.at("sessions").get<std::size_t>();
      t.lines = j.at("lines").get<std::size_t>();
      t.doc_community = j.at("doc_community").get<std::map<std::string, int>>();
      t.user_community = j.at("user_community").get<std::map<std::string, int>>();
      t.doc_views = j.at("doc_views").get<std::map<std::string, std::size_t>>();
      t.user_distinct_items = j.at("user_distinct_items").get<std::map<std::string, std::size_t>>();
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorKind::BadInput, std::string("bad ground truth: ") + ex.what());
    }
    return t;
  }
};

struct SynthOutput {
  std::string log;
  std::string catalog;  // doc_key<TAB>title
  GroundTruth truth;
};

namespace detail {

// Pronounceable pseudo-word, at least three letters, distinct per index.
inline std::string pseudo_word(std::size_t index, Rng& rng) {
  static constexpr std::string_view kOnsets[] = {"b", "c", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"};
  static constexpr std::string_view kVowels[] = {"a", "e", "i", "o", "u"};
  std::string w;
  const int syllables = 2 + static_cast<int>(rng.below(2));
  for (int s = 0; s < syllables; ++s) {
    w += kOnsets[rng.below(std::size(kOnsets))];
    w += kVowels[rng.below(std::size(kVowels))];
  }
  return w + "x" + std::to_string(index);
}

inline std::string random_token(Rng& rng, std::size_t len, std::string_view alphabet) {
  std::string s;
  for (std::size_t i = 0; i < len; ++i) s += alphabet[rng.below(alphabet.size())];
  return s;
}

struct SynthDoc {
  std::string key;
  std::string url;
  int community = 0;
};

}  // namespace detail

/// Deterministic for a given config; the seed is the only source of
/// randomness.
inline SynthOutput generate(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(derive_seed(cfg.seed, "synth"));
  const auto nd = static_cast<std::size_t>(cfg.n_docs);
  const auto nc = static_cast<std::size_t>(cfg.n_communities);

  // Documents: every fourth one is a journal article, the rest ebrary books.
  std::vector<detail::SynthDoc> docs(nd);
  for (std::size_t i = 0; i < nd; ++i) {
    if (i % 4 == 3) {
      const std::string id = std::to_string(500000 + i);
      docs[i].key = "ejournals:" + id;
      docs[i].url = "http://journals.scholarsportal.info/pdf.xqy?doc=" + id + "&jid=" + std::to_string(100 + i % 37) +
                    "&vol=" + std::to_string(1 + i % 12) + "&pages=" + std::to_string(1 + i % 90) + "-" +
                    std::to_string(12 + i % 90);
    } else {
      const std::string id = std::to_string(10250000 + i);
      docs[i].key = "ebrary:" + id;
      docs[i].url = "http://site.ebrary.com:80/lib/oculryerson/docDetail.action?docID=" + id;
    }
  }

  // Communities: shuffled documents dealt round-robin, so sizes differ by at
  // most one. Each community's member order is its ring.
  std::vector<std::size_t> order(nd);
  for (std::size_t i = 0; i < nd; ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> rings(nc);
  for (std::size_t i = 0; i < nd; ++i) {
    rings[i % nc].push_back(order[i]);
    docs[order[i]].community = static_cast<int>(i % nc);
  }

  // Titles drawn from disjoint per-community vocabularies.
  std::vector<std::vector<std::string>> vocab(nc);
  std::size_t word_index = 0;
  for (auto& v : vocab)
    for (int w = 0; w < cfg.words_per_community; ++w) v.push_back(detail::pseudo_word(word_index++, rng));
  std::vector<std::string> titles(nd);
  for (std::size_t i = 0; i < nd; ++i) {
    auto words = vocab[static_cast<std::size_t>(docs[i].community)];
    rng.shuffle(words);
    // More than half the vocabulary, so two titles of one community always
    // share a word.
    const auto size = static_cast<std::int64_t>(words.size());
    const auto hi = std::min<std::int64_t>(6, size);
    const auto len = static_cast<std::size_t>(rng.between(std::min(hi, size / 2 + 1), hi));
    std::string t;
    for (std::size_t w = 0; w < len; ++w) t += (w ? " " : "") + words[w];
    titles[i] = std::move(t);
  }
  if (cfg.title_vocab_mode == VocabMode::Shuffled) rng.shuffle(titles);

  SynthOutput out;
  auto& truth = out.truth;
  std::string catalog;
  std::vector<std::size_t> by_key(nd);
  for (std::size_t i = 0; i < nd; ++i) by_key[i] = i;
  std::sort(by_key.begin(), by_key.end(), [&](std::size_t a, std::size_t b) { return docs[a].key < docs[b].key; });
  for (std::size_t i : by_key) {
    catalog += docs[i].key + '\t' + titles[i] + '\n';
    truth.doc_community[docs[i].key] = docs[i].community;
  }
  out.catalog = std::move(catalog);

  struct Line {
    std::int64_t t;
    std::size_t seq;
    std::string text;
  };
  std::vector<Line> lines;
  constexpr std::string_view kHex = "0123456789abcdef";
  constexpr std::string_view kAlnum = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789";
  const std::int64_t month = 30 * 86400;

  // Users dealt round-robin over a shuffled community order.
  std::vector<std::size_t> user_comm(static_cast<std::size_t>(cfg.n_users));
  for (std::size_t u = 0; u < user_comm.size(); ++u) user_comm[u] = u % nc;
  rng.shuffle(user_comm);

  for (std::size_t u = 0; u < user_comm.size(); ++u) {
    LogEntry e;
    e.host = "10." + std::to_string(1 + u / 65536) + "." + std::to_string((u / 256) % 256) + "." + std::to_string(u % 256);
    e.username = detail::random_token(rng, 15, kAlnum);
    e.method = "GET";
    e.protocol = "HTTP/1.1";
    const std::string user = e.host + "/" + e.username;
    const std::size_t c = user_comm[u];
    truth.user_community[user] = static_cast<int>(c);
    const auto& ring = rings[c];
    std::set<std::string> distinct;

    std::int64_t clock = cfg.start_utc + rng.between(0, month);
    const int n_sessions = 1 + rng.poisson(cfg.sessions_per_user - 1);
    for (int s = 0; s < n_sessions; ++s) {
      ++truth.sessions;
      e.session_id = rng.bernoulli(cfg.missing_session_prob) ? std::string(kPlaceholder) : detail::random_token(rng, 32, kHex);
      const auto mean_len = static_cast<std::int64_t>(cfg.session_len + 0.5);
      const auto lo = std::max<std::int64_t>(std::min<std::int64_t>(2, mean_len), mean_len - 2);
      const auto len = rng.between(lo, mean_len + 2);
      const std::size_t start = rng.below(ring.size());
      for (std::int64_t v = 0; v < len; ++v) {
        std::size_t doc = ring[(start + static_cast<std::size_t>(v)) % ring.size()];
        if (nc > 1 && !rng.bernoulli(cfg.in_community_prob)) {
          do {
            doc = rng.below(nd);
          } while (docs[doc].community == static_cast<int>(c));
        }
        clock += 1 + static_cast<std::int64_t>(rng.exponential(cfg.mean_view_gap_seconds));
        auto emit = [&](const std::string& url, int status, std::int64_t t) {
          e.url = url;
          e.status = status;
          e.bytes = status == 304 ? std::nullopt : std::optional<std::int64_t>(rng.between(800, 60000));
          e.timestamp = Timestamp{t, cfg.utc_offset_minutes};
          lines.push_back({t, lines.size(), serialize_log_line(e)});
        };
        emit(docs[doc].url, 200, clock);
        ++truth.doc_views[docs[doc].key];
        distinct.insert(docs[doc].key);
        if (rng.bernoulli(cfg.asset_prob))
          emit(rng.bernoulli(0.5) ? "http://site.ebrary.com:80/lib/images/logo.gif" : "http://site.ebrary.com:80/lib/css/main.css?v=3",
               200, clock);
        if (rng.bernoulli(cfg.error_status_prob)) {
          static constexpr int kCodes[] = {302, 304, 404, 500};
          emit(docs[rng.below(nd)].url, kCodes[rng.below(std::size(kCodes))], clock);
        }
      }
      // Gap between sessions: at least an hour, so session-less entries split too.
      clock += 3600 + static_cast<std::int64_t>(rng.exponential(86400.0));
    }
    truth.user_distinct_items[user] = distinct.size();
  }

  std::stable_sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) { return a.t < b.t; });
  std::string log;
  for (const auto& l : lines) {
    log += l.text;
    log += '\n';
  }
  truth.lines = lines.size();
  out.log = std::move(log);
  return out;
}

}  // namespace hyperlens
