#pragma once

#include <arpa/inet.h>

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyperlens/error.hpp"
#include "hyperlens/io.hpp"
#include "hyperlens/parallel.hpp"
#include "hyperlens/url.hpp"

namespace hyperlens {

// Calendar instant with the UTC offset it was logged under. Ordering and
// equality are by the fields, so two renderings of the same instant in
// different zones are distinct values (the log text differs too).
struct Timestamp {
  std::int64_t utc_seconds = 0;
  int offset_minutes = 0;

  friend bool operator==(const Timestamp&, const Timestamp&) = default;
};

namespace detail {

constexpr std::array<std::string_view, 12> kMonths = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                      "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};

// Days since 1970-01-01 for a proleptic Gregorian date.
constexpr std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct Civil {
  std::int64_t year;
  unsigned month;
  unsigned day;
};

constexpr Civil civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return {y + (m <= 2), m, d};
}

constexpr bool is_leap(std::int64_t y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

constexpr unsigned days_in_month(std::int64_t y, unsigned m) {
  constexpr unsigned table[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return m == 2 && is_leap(y) ? 29 : table[m - 1];
}

inline bool digits(std::string_view s, std::size_t n, int& out) {
  if (s.size() != n) return false;
  int v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  out = v;
  return true;
}

inline void put2(std::string& out, int v) {
  out.push_back(static_cast<char>('0' + v / 10));
  out.push_back(static_cast<char>('0' + v % 10));
}

}  // namespace detail

// Parses `dd/Mon/yyyy:HH:mm:ss ±zzzz`. `base` is only used to offset error
// positions when the text sits inside a larger line.
inline Timestamp parse_timestamp(std::string_view s, std::size_t base = 0) {
  auto fail = [&](std::size_t at, const char* what) -> Timestamp {
    throw ParseError(ErrorKind::BadTimestamp, base + at, what);
  };
  if (s.size() != 26) return fail(0, "timestamp must be dd/Mon/yyyy:HH:mm:ss +zzzz");
  int day, year, hour, minute, second, oh, om;
  if (!detail::digits(s.substr(0, 2), 2, day) || s[2] != '/') return fail(0, "bad day");
  unsigned month = 0;
  for (unsigned i = 0; i < 12; ++i)
    if (s.substr(3, 3) == detail::kMonths[i]) month = i + 1;
  if (month == 0 || s[6] != '/') return fail(3, "bad month");
  if (!detail::digits(s.substr(7, 4), 4, year) || s[11] != ':') return fail(7, "bad year");
  if (!detail::digits(s.substr(12, 2), 2, hour) || hour > 23 || s[14] != ':') return fail(12, "bad hour");
  if (!detail::digits(s.substr(15, 2), 2, minute) || minute > 59 || s[17] != ':') return fail(15, "bad minute");
  if (!detail::digits(s.substr(18, 2), 2, second) || second > 59 || s[20] != ' ') return fail(18, "bad second");
  if (day < 1 || static_cast<unsigned>(day) > detail::days_in_month(year, month)) return fail(0, "day out of range");
  const char sign = s[21];
  if (sign != '+' && sign != '-') return fail(21, "offset needs a sign");
  if (!detail::digits(s.substr(22, 2), 2, oh) || !detail::digits(s.substr(24, 2), 2, om)) return fail(22, "bad offset");
  // Unknown offsets are rejected rather than guessed.
  if (oh > 14 || om > 59 || (oh == 14 && om != 0)) return fail(22, "offset out of range");
  const int offset = (sign == '-' ? -1 : 1) * (oh * 60 + om);
  const std::int64_t local = detail::days_from_civil(year, month, static_cast<unsigned>(day)) * 86400 +
                             hour * 3600 + minute * 60 + second;
  return Timestamp{local - offset * 60, offset};
}

inline std::string format_timestamp(const Timestamp& ts) {
  const std::int64_t local = ts.utc_seconds + ts.offset_minutes * 60;
  std::int64_t days = local / 86400;
  std::int64_t secs = local % 86400;
  if (secs < 0) {
    secs += 86400;
    --days;
  }
  const auto civil = detail::civil_from_days(days);
  std::string out;
  out.reserve(26);
  detail::put2(out, static_cast<int>(civil.day));
  out.push_back('/');
  out.append(detail::kMonths[civil.month - 1]);
  out.push_back('/');
  out.append(std::to_string(civil.year));
  out.push_back(':');
  detail::put2(out, static_cast<int>(secs / 3600));
  out.push_back(':');
  detail::put2(out, static_cast<int>(secs / 60 % 60));
  out.push_back(':');
  detail::put2(out, static_cast<int>(secs % 60));
  out.push_back(' ');
  const int off = ts.offset_minutes < 0 ? -ts.offset_minutes : ts.offset_minutes;
  out.push_back(ts.offset_minutes < 0 ? '-' : '+');
  detail::put2(out, off / 60);
  detail::put2(out, off % 60);
  return out;
}

inline constexpr std::string_view kPlaceholder = "-";

/// One access-log line in the EZproxy layout
/// `%h %u %l %{ezproxy-session}i %t "%r" %s %b`.
struct LogEntry {
  std::string host;
  std::string username;
  std::string remote_user = "-";
  std::string session_id;  // "-" when the proxy recorded none
  Timestamp timestamp;
  std::string method;
  std::string url;
  std::string protocol;
  int status = 0;
  std::optional<std::int64_t> bytes;

  bool has_session() const { return session_id != kPlaceholder; }

  friend bool operator==(const LogEntry&, const LogEntry&) = default;
};

inline bool is_ip_address(const std::string& host) {
  unsigned char buf[16];
  return inet_pton(AF_INET, host.c_str(), buf) == 1 || inet_pton(AF_INET6, host.c_str(), buf) == 1;
}

/// Parses one physical log line. Throws ParseError (MalformedLine,
/// BadTimestamp or BadStatus) carrying the byte offset of the first failure.
inline LogEntry parse_log_line(std::string_view line) {
  std::size_t pos = 0;
  auto malformed = [&](std::size_t at, const std::string& what) -> ParseError {
    return ParseError(ErrorKind::MalformedLine, at, what);
  };
  auto token = [&](const char* name) -> std::string {
    const std::size_t start = pos;
    const std::size_t end = line.find(' ', pos);
    if (end == std::string_view::npos || end == start)
      throw malformed(start, std::string("missing field ") + name);
    pos = end + 1;
    return std::string(line.substr(start, end - start));
  };

  if (line.find('\n') != std::string_view::npos) throw malformed(line.find('\n'), "embedded newline");

  LogEntry e;
  const std::size_t host_at = pos;
  e.host = token("host");
  if (!is_ip_address(e.host)) throw malformed(host_at, "host is not an IP address");
  e.username = token("username");
  e.remote_user = token("remote user");
  e.session_id = token("session id");

  if (pos >= line.size() || line[pos] != '[') throw malformed(pos, "expected '['");
  const std::size_t close = line.find(']', pos);
  if (close == std::string_view::npos) throw malformed(pos, "unterminated timestamp");
  e.timestamp = parse_timestamp(line.substr(pos + 1, close - pos - 1), pos + 1);
  pos = close + 1;
  if (pos + 1 >= line.size() || line[pos] != ' ' || line[pos + 1] != '"') throw malformed(pos, "expected ' \"'");
  pos += 2;

  const std::size_t rq_end = line.find('"', pos);
  if (rq_end == std::string_view::npos) throw malformed(pos, "unterminated request");
  const std::string_view request = line.substr(pos, rq_end - pos);
  const auto parts = io::split(request, ' ');
  if (parts.size() != 3 || parts[0].empty() || parts[1].empty() || parts[2].empty())
    throw malformed(pos, "request must be 'METHOD URL PROTOCOL'");
  e.method = parts[0];
  e.url = parts[1];
  e.protocol = parts[2];
  pos = rq_end + 1;
  if (pos >= line.size() || line[pos] != ' ') throw malformed(pos, "expected ' ' after request");
  ++pos;

  const std::size_t status_at = pos;
  const std::size_t sp = line.find(' ', pos);
  if (sp == std::string_view::npos) throw malformed(pos, "missing bytes field");
  std::int64_t status = 0;
  if (!io::parse_int(line.substr(pos, sp - pos), status))
    throw ParseError(ErrorKind::BadStatus, status_at, "status is not an integer");
  if (status < 100 || status > 599) throw ParseError(ErrorKind::BadStatus, status_at, "status outside [100,599]");
  e.status = static_cast<int>(status);
  pos = sp + 1;

  const std::string_view bytes = line.substr(pos);
  if (bytes == kPlaceholder) {
    e.bytes.reset();
  } else {
    std::int64_t b = 0;
    if (!io::parse_int(bytes, b) || b < 0 || bytes.front() == '+') throw malformed(pos, "bytes must be '-' or a non-negative integer");
    e.bytes = b;
  }
  return e;
}

inline std::string serialize_log_line(const LogEntry& e) {
  std::string out;
  out.reserve(64 + e.url.size() + e.session_id.size());
  out += e.host;
  out += ' ';
  out += e.username;
  out += ' ';
  out += e.remote_user;
  out += ' ';
  out += e.session_id;
  out += " [";
  out += format_timestamp(e.timestamp);
  out += "] \"";
  out += e.method;
  out += ' ';
  out += e.url;
  out += ' ';
  out += e.protocol;
  out += "\" ";
  out += std::to_string(e.status);
  out += ' ';
  out += e.bytes ? std::to_string(*e.bytes) : std::string(kPlaceholder);
  return out;
}

struct ParseIssue {
  std::size_t line_number = 0;  // 1-based
  std::string message;
};

struct ParseResult {
  std::vector<LogEntry> entries;
  std::size_t lines = 0;
  std::size_t malformed = 0;
  std::vector<ParseIssue> issues;  // first few only
};

/// Parses a whole log. Blank lines are ignored. Malformed lines are counted
/// and skipped unless `strict`, in which case the first one is rethrown.
inline ParseResult parse_log_text(std::string_view text, bool strict = false, unsigned threads = 1,
                                  std::size_t max_issues = 20) {
  const auto raw = io::lines(text);
  std::vector<std::optional<LogEntry>> parsed(raw.size());
  std::vector<std::string> errors(raw.size());
  std::vector<char> blank(raw.size(), 0);
  parallel_for(raw.size(), threads, [&](std::size_t i) {
    if (io::trim(raw[i]).empty()) {
      blank[i] = 1;
      return;
    }
    try {
      parsed[i] = parse_log_line(raw[i]);
    } catch (const ParseError& err) {
      errors[i] = err.what();
    }
  });
  ParseResult out;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (blank[i]) continue;
    ++out.lines;
    if (parsed[i]) {
      out.entries.push_back(std::move(*parsed[i]));
      continue;
    }
    if (strict) {
      // Re-raise with the original category.
      try {
        parse_log_line(raw[i]);
      } catch (const ParseError& err) {
        throw ParseError(err.kind(), err.offset(), "line " + std::to_string(i + 1));
      }
    }
    ++out.malformed;
    if (out.issues.size() < max_issues) out.issues.push_back({i + 1, errors[i]});
  }
  return out;
}

inline std::string serialize_log(const std::vector<LogEntry>& entries) {
  std::string out;
  for (const auto& e : entries) {
    out += serialize_log_line(e);
    out += '\n';
  }
  return out;
}

struct CleaningConfig {
  std::set<std::string> asset_suffixes = {"jpeg", "jpg", "gif", "css", "js", "png", "ico", "svg", "woff", "woff2"};
  int status_low = 200;
  int status_high = 299;

  void validate() const {
    if (status_low > status_high) throw Error(ErrorKind::ConfigError, "success status range is empty");
    if (asset_suffixes.empty()) throw Error(ErrorKind::ConfigError, "asset suffix list is empty");
    for (const auto& s : asset_suffixes)
      if (s.empty() || s != to_lower(s)) throw Error(ErrorKind::ConfigError, "asset suffixes must be non-empty lowercase");
  }
};

struct AssetCheck {
  bool asset = false;
  bool unparseable = false;
};

inline AssetCheck check_asset(std::string_view url, const CleaningConfig& cfg) {
  const auto parts = split_url(url);
  if (!parts) return {false, true};
  const std::string path = to_lower(parts->path);
  const std::size_t slash = path.rfind('/');
  const std::size_t dot = path.rfind('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return {};
  return {cfg.asset_suffixes.count(path.substr(dot + 1)) > 0, false};
}

inline bool is_asset_request(std::string_view url, const CleaningConfig& cfg) { return check_asset(url, cfg).asset; }

inline bool is_success_status(int status, const CleaningConfig& cfg) {
  return cfg.status_low <= status && status <= cfg.status_high;
}

struct CleaningReport {
  std::size_t input = 0;
  std::size_t retained = 0;
  std::size_t status_removed = 0;
  std::size_t asset_removed = 0;
  std::size_t unparseable_urls = 0;

  CleaningReport& operator+=(const CleaningReport& o) {
    input += o.input;
    retained += o.retained;
    status_removed += o.status_removed;
    asset_removed += o.asset_removed;
    unparseable_urls += o.unparseable_urls;
    return *this;
  }

  nlohmann::ordered_json to_json() const {
    return {{"input", input},
            {"retained", retained},
            {"status_removed", status_removed},
            {"asset_removed", asset_removed},
            {"unparseable_urls", unparseable_urls}};
  }

  friend bool operator==(const CleaningReport&, const CleaningReport&) = default;
};

struct CleanResult {
  std::vector<LogEntry> entries;
  CleaningReport report;
};

/// Drops unsuccessful requests and page-asset fetches, preserving order. An
/// entry failing both rules is counted under status.
inline CleanResult clean_log(const std::vector<LogEntry>& entries, const CleaningConfig& cfg) {
  CleanResult out;
  out.report.input = entries.size();
  for (const auto& e : entries) {
    if (!is_success_status(e.status, cfg)) {
      ++out.report.status_removed;
      continue;
    }
    const AssetCheck check = check_asset(e.url, cfg);
    if (check.unparseable) ++out.report.unparseable_urls;
    if (check.asset) {
      ++out.report.asset_removed;
      continue;
    }
    out.entries.push_back(e);
  }
  out.report.retained = out.entries.size();
  return out;
}

}  // namespace hyperlens
