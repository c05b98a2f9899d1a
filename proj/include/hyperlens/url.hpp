#pragma once

#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hyperlens {

struct UrlParts {
  std::string_view scheme;
  std::string_view host;
  std::string_view port;
  std::string_view path;
  std::string_view query;
};

// Splits `scheme://host:port/path?query#frag`. Scheme-less forms such as
// `site.ebrary.com:80/lib/x` and origin-relative `/lib/x` are accepted.
// Returns nullopt for input that has no recognisable structure.
inline std::optional<UrlParts> split_url(std::string_view url) {
  if (url.empty()) return std::nullopt;
  for (char c : url)
    if (std::isspace(static_cast<unsigned char>(c)) || c == '"') return std::nullopt;
  UrlParts parts;
  std::string_view rest = url;
  if (auto pos = rest.find("://"); pos != std::string_view::npos) {
    parts.scheme = rest.substr(0, pos);
    if (parts.scheme.empty()) return std::nullopt;
    for (char c : parts.scheme)
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '+' && c != '-' && c != '.') return std::nullopt;
    rest.remove_prefix(pos + 3);
    if (rest.empty() || rest.front() == '/') return std::nullopt;
  }
  if (!rest.empty() && rest.front() != '/') {
    std::size_t end = rest.find_first_of("/?#");
    std::string_view authority = rest.substr(0, end);
    rest = end == std::string_view::npos ? std::string_view{} : rest.substr(end);
    if (auto at = authority.rfind('@'); at != std::string_view::npos) authority.remove_prefix(at + 1);
    std::size_t colon = authority.rfind(':');
    if (colon != std::string_view::npos && authority.find(']') == std::string_view::npos) {
      parts.port = authority.substr(colon + 1);
      authority = authority.substr(0, colon);
      if (parts.port.empty()) return std::nullopt;
      for (char c : parts.port)
        if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    }
    if (authority.empty()) return std::nullopt;
    parts.host = authority;
  }
  std::size_t frag = rest.find('#');
  if (frag != std::string_view::npos) rest = rest.substr(0, frag);
  std::size_t q = rest.find('?');
  if (q != std::string_view::npos) {
    parts.query = rest.substr(q + 1);
    rest = rest.substr(0, q);
  }
  parts.path = rest;
  return parts;
}

// Ordered key/value pairs of a query string; keys keep their case.
inline std::vector<std::pair<std::string_view, std::string_view>> query_pairs(std::string_view query) {
  std::vector<std::pair<std::string_view, std::string_view>> out;
  while (!query.empty()) {
    std::size_t amp = query.find('&');
    std::string_view item = query.substr(0, amp);
    query = amp == std::string_view::npos ? std::string_view{} : query.substr(amp + 1);
    if (item.empty()) continue;
    std::size_t eq = item.find('=');
    if (eq == std::string_view::npos)
      out.emplace_back(item, std::string_view{});
    else
      out.emplace_back(item.substr(0, eq), item.substr(eq + 1));
  }
  return out;
}

inline std::vector<std::string_view> path_segments(std::string_view path) {
  std::vector<std::string_view> out;
  while (!path.empty()) {
    std::size_t slash = path.find('/');
    std::string_view seg = path.substr(0, slash);
    if (!seg.empty()) out.push_back(seg);
    if (slash == std::string_view::npos) break;
    path.remove_prefix(slash + 1);
  }
  return out;
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace hyperlens
