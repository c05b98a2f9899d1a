#pragma once

#include <fnmatch.h>

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyperlens/error.hpp"
#include "hyperlens/io.hpp"
#include "hyperlens/log_ingest.hpp"
#include "hyperlens/url.hpp"

namespace hyperlens {

struct UserKey {
  std::string host;
  std::string username;

  friend bool operator==(const UserKey&, const UserKey&) = default;
  friend auto operator<=>(const UserKey&, const UserKey&) = default;

  std::string str() const { return host + "/" + username; }
};

/// Users are identified by IP address and login together.
inline UserKey identify_user(const LogEntry& e) {
  if (e.username.empty() || e.username == kPlaceholder)
    throw Error(ErrorKind::AnonymousEntry, "entry from " + e.host + " has no username");
  if (e.host.empty()) throw Error(ErrorKind::BadInput, "entry has no host");
  return UserKey{e.host, e.username};
}

struct ResourceRef {
  std::string vendor;
  std::string doc_id;
  std::map<std::string, std::string> extras;
  std::optional<std::string> title;

  // Canonical item identity used by every downstream stage.
  std::string key() const { return vendor + ":" + doc_id; }

  friend bool operator==(const ResourceRef&, const ResourceRef&) = default;
};

// Where a pattern takes the document id from.
struct IdSource {
  enum class Kind { Query, Path } kind = Kind::Query;
  std::string key;  // query key
  int index = 0;    // path segment; negative counts from the end

  static IdSource parse(std::string_view text) {
    IdSource src;
    if (text.rfind("query:", 0) == 0 && text.size() > 6) {
      src.kind = Kind::Query;
      src.key = text.substr(6);
      return src;
    }
    if (text.rfind("path:", 0) == 0) {
      std::int64_t idx = 0;
      if (io::parse_int(text.substr(5), idx)) {
        src.kind = Kind::Path;
        src.index = static_cast<int>(idx);
        return src;
      }
    }
    throw Error(ErrorKind::ConfigError, "id_source must be query:<key> or path:<index>, got '" + std::string(text) + "'");
  }

  std::string str() const { return kind == Kind::Query ? "query:" + key : "path:" + std::to_string(index); }

  std::optional<std::string> extract(const UrlParts& url) const {
    if (kind == Kind::Query) {
      for (const auto& [k, v] : query_pairs(url.query))
        if (k == key && !v.empty()) return std::string(v);
      return std::nullopt;
    }
    const auto segs = path_segments(url.path);
    const int n = static_cast<int>(segs.size());
    const int i = index < 0 ? n + index : index;
    if (i < 0 || i >= n) return std::nullopt;
    return std::string(segs[static_cast<std::size_t>(i)]);
  }
};

struct PatternRule {
  std::string name;
  std::string host_glob;
  IdSource id_source;
  std::vector<std::string> extras;  // query keys, or path:<index>
};

class PatternRegistry {
 public:
  PatternRegistry() = default;
  explicit PatternRegistry(std::vector<PatternRule> rules) : rules_(std::move(rules)) {}

  const std::vector<PatternRule>& rules() const { return rules_; }

  static PatternRegistry from_json(const nlohmann::json& j) {
    const nlohmann::json& arr = j.is_object() && j.contains("patterns") ? j.at("patterns") : j;
    if (!arr.is_array()) throw Error(ErrorKind::ConfigError, "pattern registry must be a JSON array");
    std::vector<PatternRule> rules;
    for (const auto& item : arr) {
      try {
        PatternRule r;
        r.name = item.at("name").get<std::string>();
        r.host_glob = item.at("host_glob").get<std::string>();
        r.id_source = IdSource::parse(item.at("id_source").get<std::string>());
        if (item.contains("extras")) r.extras = item.at("extras").get<std::vector<std::string>>();
        if (r.name.empty()) throw Error(ErrorKind::ConfigError, "pattern name is empty");
        rules.push_back(std::move(r));
      } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorKind::ConfigError, std::string("bad pattern rule: ") + ex.what());
      }
    }
    return PatternRegistry(std::move(rules));
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : rules_)
      arr.push_back({{"name", r.name}, {"host_glob", r.host_glob}, {"id_source", r.id_source.str()}, {"extras", r.extras}});
    return arr;
  }

  // ebrary book pages plus the journal-article layout the synthetic workbench
  // emits.
  static PatternRegistry defaults() {
    return PatternRegistry({
        PatternRule{"ebrary", "*ebrary.com", IdSource::parse("query:docID"), {}},
        PatternRule{"ejournals", "journals.*", IdSource::parse("query:doc"), {"jid", "vol", "pages"}},
    });
  }

 private:
  std::vector<PatternRule> rules_;
};

/// First matching rule wins; nullopt when no rule yields an id.
inline std::optional<ResourceRef> extract_resource(std::string_view url, const PatternRegistry& registry) {
  const auto parts = split_url(url);
  if (!parts || parts->host.empty()) return std::nullopt;
  const std::string host = to_lower(parts->host);
  for (const auto& rule : registry.rules()) {
    if (fnmatch(to_lower(rule.host_glob).c_str(), host.c_str(), 0) != 0) continue;
    auto id = rule.id_source.extract(*parts);
    if (!id) continue;
    ResourceRef ref;
    ref.vendor = rule.name;
    ref.doc_id = std::move(*id);
    for (const auto& extra : rule.extras) {
      std::optional<std::string> value;
      if (extra.rfind("path:", 0) == 0)
        value = IdSource::parse(extra).extract(*parts);
      else
        value = IdSource::parse("query:" + extra).extract(*parts);
      if (value) ref.extras[extra] = *value;
    }
    return ref;
  }
  return std::nullopt;
}

/// doc_id -> title; keyed by either the canonical `vendor:id` or the bare id.
using Catalog = std::map<std::string, std::string>;

inline Catalog parse_catalog(std::string_view text) {
  Catalog out;
  std::size_t n = 0;
  for (auto line : io::lines(text)) {
    ++n;
    if (io::trim(line).empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0)
      throw Error(ErrorKind::BadInput, "catalog line " + std::to_string(n) + " is not doc_id<TAB>title");
    out[std::string(line.substr(0, tab))] = std::string(line.substr(tab + 1));
  }
  return out;
}

inline std::optional<std::string> catalog_title(const Catalog& catalog, const ResourceRef& ref) {
  if (auto it = catalog.find(ref.key()); it != catalog.end()) return it->second;
  if (auto it = catalog.find(ref.doc_id); it != catalog.end()) return it->second;
  return std::nullopt;
}

struct Session {
  std::string session_id;
  UserKey user;
  Timestamp start;
  Timestamp end;
  std::vector<ResourceRef> resources;
  std::size_t entry_count = 0;

  friend bool operator==(const Session&, const Session&) = default;
};

inline std::int64_t session_length(const Session& s) { return std::max<std::int64_t>(0, s.end.utc_seconds - s.start.utc_seconds); }

struct SessionOptions {
  std::int64_t gap_seconds = 30 * 60;  // fallback for entries without a session id
};

struct SessionReport {
  std::size_t entries = 0;
  std::size_t attributed = 0;
  std::size_t anonymous_skipped = 0;
  std::size_t unmatched_urls = 0;
  std::size_t fallback_sessions = 0;
  std::vector<std::string> conflicting_ids;

  nlohmann::ordered_json to_json() const {
    return {{"entries", entries},
            {"attributed", attributed},
            {"anonymous_skipped", anonymous_skipped},
            {"unmatched_urls", unmatched_urls},
            {"fallback_sessions", fallback_sessions},
            {"conflicting_session_ids", conflicting_ids}};
  }
};

struct SessionResult {
  std::vector<Session> sessions;  // sorted by (session_id, user)
  SessionReport report;
};

/// Groups cleaned entries into sessions. A session id seen under two users is
/// reported as a conflict and split per user.
inline SessionResult build_sessions(const std::vector<LogEntry>& entries, const PatternRegistry& registry,
                                    const Catalog* catalog = nullptr, const SessionOptions& opts = {}) {
  SessionResult out;
  out.report.entries = entries.size();
  std::map<std::pair<std::string, UserKey>, std::size_t> index;
  std::map<std::string, UserKey> first_user;
  std::set<std::string> conflicts;
  std::map<UserKey, std::pair<std::size_t, std::int64_t>> open_fallback;  // session slot, last seen
  std::map<UserKey, std::size_t> fallback_counter;
  std::vector<Session> sessions;

  auto touch = [&](Session& s, const LogEntry& e) {
    if (s.entry_count == 0) {
      s.start = s.end = e.timestamp;
    } else {
      if (e.timestamp.utc_seconds < s.start.utc_seconds) s.start = e.timestamp;
      if (e.timestamp.utc_seconds > s.end.utc_seconds) s.end = e.timestamp;
    }
    ++s.entry_count;
    if (auto ref = extract_resource(e.url, registry)) {
      if (catalog) ref->title = catalog_title(*catalog, *ref);
      s.resources.push_back(std::move(*ref));
    } else {
      ++out.report.unmatched_urls;
    }
  };

  for (const auto& e : entries) {
    UserKey user;
    try {
      user = identify_user(e);
    } catch (const Error&) {
      ++out.report.anonymous_skipped;
      continue;
    }
    ++out.report.attributed;
    std::size_t slot;
    if (e.has_session()) {
      auto [fu, inserted] = first_user.emplace(e.session_id, user);
      if (!inserted && fu->second != user) conflicts.insert(e.session_id);
      auto key = std::make_pair(e.session_id, user);
      auto it = index.find(key);
      if (it == index.end()) {
        it = index.emplace(key, sessions.size()).first;
        sessions.push_back(Session{e.session_id, user, {}, {}, {}, 0});
      }
      slot = it->second;
    } else {
      auto it = open_fallback.find(user);
      if (it == open_fallback.end() || e.timestamp.utc_seconds - it->second.second > opts.gap_seconds) {
        const std::size_t n = fallback_counter[user]++;
        sessions.push_back(Session{"auto-" + user.host + "-" + user.username + "-" + std::to_string(n), user, {}, {}, {}, 0});
        ++out.report.fallback_sessions;
        it = open_fallback.insert_or_assign(user, std::make_pair(sessions.size() - 1, e.timestamp.utc_seconds)).first;
      }
      it->second.second = std::max(it->second.second, e.timestamp.utc_seconds);
      slot = it->second.first;
    }
    touch(sessions[slot], e);
  }
  out.report.conflicting_ids.assign(conflicts.begin(), conflicts.end());
  std::stable_sort(sessions.begin(), sessions.end(), [](const Session& a, const Session& b) {
    return std::tie(a.session_id, a.user) < std::tie(b.session_id, b.user);
  });
  out.sessions = std::move(sessions);
  return out;
}

// JSON-lines encoding, one session per line.
inline nlohmann::ordered_json session_to_json(const Session& s) {
  nlohmann::ordered_json res = nlohmann::ordered_json::array();
  for (const auto& r : s.resources) {
    nlohmann::ordered_json item = {{"vendor", r.vendor}, {"doc_id", r.doc_id}};
    if (!r.extras.empty()) item["extras"] = r.extras;
    if (r.title) item["title"] = *r.title;
    res.push_back(std::move(item));
  }
  return {{"session_id", s.session_id},
          {"host", s.user.host},
          {"username", s.user.username},
          {"start", format_timestamp(s.start)},
          {"end", format_timestamp(s.end)},
          {"entries", s.entry_count},
          {"resources", std::move(res)}};
}

inline Session session_from_json(const nlohmann::json& j) {
  Session s;
  s.session_id = j.at("session_id").get<std::string>();
  s.user = UserKey{j.at("host").get<std::string>(), j.at("username").get<std::string>()};
  s.start = parse_timestamp(j.at("start").get<std::string>());
  s.end = parse_timestamp(j.at("end").get<std::string>());
  s.entry_count = j.at("entries").get<std::size_t>();
  for (const auto& item : j.at("resources")) {
    ResourceRef r;
    r.vendor = item.at("vendor").get<std::string>();
    r.doc_id = item.at("doc_id").get<std::string>();
    if (item.contains("extras")) r.extras = item.at("extras").get<std::map<std::string, std::string>>();
    if (item.contains("title")) r.title = item.at("title").get<std::string>();
    s.resources.push_back(std::move(r));
  }
  return s;
}

inline std::string sessions_to_jsonl(const std::vector<Session>& sessions) {
  std::string out;
  for (const auto& s : sessions) {
    out += session_to_json(s).dump();
    out += '\n';
  }
  return out;
}

inline std::vector<Session> sessions_from_jsonl(std::string_view text) {
  std::vector<Session> out;
  std::size_t n = 0;
  for (auto line : io::lines(text)) {
    ++n;
    if (io::trim(line).empty()) continue;
    try {
      out.push_back(session_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorKind::BadInput, "sessions line " + std::to_string(n) + ": " + ex.what());
    }
  }
  return out;
}

}  // namespace hyperlens
