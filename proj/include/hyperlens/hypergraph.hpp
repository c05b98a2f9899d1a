#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyperlens/error.hpp"
#include "hyperlens/io.hpp"
#include "hyperlens/rule_mining.hpp"

namespace hyperlens {

// Edge weights are real, but refinement works on integers: weight * 1000,
// rounded, at least 1.
inline constexpr double kWeightScale = 1000.0;

inline std::int64_t scale_weight(double w) {
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::llround(w * kWeightScale)));
}

struct Hyperedge {
  std::vector<int> pins;  // sorted, distinct, size >= 2
  double weight = 1.0;
  std::int64_t scaled = 1000;

  friend bool operator==(const Hyperedge&, const Hyperedge&) = default;
};

class Hypergraph {
 public:
  Hypergraph() = default;

  /// Sorts and dedups pins, drops edges left with fewer than two pins and
  /// merges edges with identical pin sets (weights add).
  Hypergraph(std::vector<std::int64_t> vertex_weights, std::vector<Hyperedge> edges,
             std::vector<std::string> names = {})
      : names_(std::move(names)), vertex_weights_(std::move(vertex_weights)) {
    const int n = num_vertices();
    if (!names_.empty() && static_cast<int>(names_.size()) != n)
      throw Error(ErrorKind::BadInput, "vertex name count does not match vertex count");
    for (auto w : vertex_weights_)
      if (w <= 0) throw Error(ErrorKind::BadInput, "vertex weights must be positive");
    std::map<std::vector<int>, std::size_t> seen;
    for (auto& e : edges) {
      if (!(e.weight > 0)) throw Error(ErrorKind::BadInput, "hyperedge weights must be positive");
      std::sort(e.pins.begin(), e.pins.end());
      e.pins.erase(std::unique(e.pins.begin(), e.pins.end()), e.pins.end());
      for (int p : e.pins)
        if (p < 0 || p >= n) throw Error(ErrorKind::BadInput, "hyperedge pin out of range");
      if (e.pins.size() < 2) continue;
      auto [it, inserted] = seen.emplace(e.pins, edges_.size());
      if (inserted) {
        edges_.push_back(std::move(e));
      } else {
        edges_[it->second].weight += e.weight;
        edges_[it->second].scaled += e.scaled;
      }
    }
    incident_.assign(static_cast<std::size_t>(n), {});
    for (std::size_t e = 0; e < edges_.size(); ++e)
      for (int p : edges_[e].pins) incident_[static_cast<std::size_t>(p)].push_back(static_cast<int>(e));
    total_weight_ = 0;
    for (auto w : vertex_weights_) total_weight_ += w;
  }

  // Unit-weight vertices, edges given as (pins, weight).
  static Hypergraph with_unit_vertices(int n, const std::vector<std::pair<std::vector<int>, double>>& edges,
                                       std::vector<std::string> names = {}) {
    std::vector<Hyperedge> es;
    for (const auto& [pins, w] : edges) es.push_back(Hyperedge{pins, w, scale_weight(w)});
    return Hypergraph(std::vector<std::int64_t>(static_cast<std::size_t>(n), 1), std::move(es), std::move(names));
  }

  int num_vertices() const { return static_cast<int>(vertex_weights_.size()); }
  std::size_t num_edges() const { return edges_.size(); }
  const std::vector<Hyperedge>& edges() const { return edges_; }
  const Hyperedge& edge(int e) const { return edges_[static_cast<std::size_t>(e)]; }
  const std::vector<int>& incident(int v) const { return incident_[static_cast<std::size_t>(v)]; }
  std::int64_t vertex_weight(int v) const { return vertex_weights_[static_cast<std::size_t>(v)]; }
  const std::vector<std::int64_t>& vertex_weights() const { return vertex_weights_; }
  std::int64_t total_weight() const { return total_weight_; }
  const std::vector<std::string>& names() const { return names_; }

  std::int64_t max_vertex_weight() const {
    return vertex_weights_.empty() ? 0 : *std::max_element(vertex_weights_.begin(), vertex_weights_.end());
  }

  /// Sub-hypergraph on `vertices` (new index = position in the list). Edges
  /// keep only their pins inside the subset.
  Hypergraph induced(const std::vector<int>& vertices) const {
    std::vector<int> local(static_cast<std::size_t>(num_vertices()), -1);
    std::vector<std::int64_t> weights;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < vertices.size(); ++i) {
      local[static_cast<std::size_t>(vertices[i])] = static_cast<int>(i);
      weights.push_back(vertex_weight(vertices[i]));
      if (!names_.empty()) names.push_back(names_[static_cast<std::size_t>(vertices[i])]);
    }
    std::vector<Hyperedge> es;
    for (const auto& e : edges_) {
      Hyperedge sub{{}, e.weight, e.scaled};
      for (int p : e.pins)
        if (local[static_cast<std::size_t>(p)] >= 0) sub.pins.push_back(local[static_cast<std::size_t>(p)]);
      if (sub.pins.size() >= 2) es.push_back(std::move(sub));
    }
    return Hypergraph(std::move(weights), std::move(es), std::move(names));
  }

 private:
  std::vector<std::string> names_;
  std::vector<std::int64_t> vertex_weights_;
  std::vector<Hyperedge> edges_;
  std::vector<std::vector<int>> incident_;
  std::int64_t total_weight_ = 0;
};

enum class EdgeWeightMode { Mean, Sum, Count };

inline EdgeWeightMode parse_edge_weight_mode(std::string_view s) {
  if (s == "mean") return EdgeWeightMode::Mean;
  if (s == "sum") return EdgeWeightMode::Sum;
  if (s == "count") return EdgeWeightMode::Count;
  throw Error(ErrorKind::ConfigError, "edge weight mode must be mean, sum or count");
}

/// One hyperedge per distinct antecedent-and-consequent item set. By default
/// its weight is the mean confidence of the rules that produced it. Vertices
/// are the rule items in lexicographic order.
inline Hypergraph build_hypergraph(const std::vector<RuleRecord>& rules, EdgeWeightMode mode = EdgeWeightMode::Mean) {
  if (rules.empty()) throw Error(ErrorKind::NoRules, "no association rules to build a hypergraph from");
  std::map<std::vector<std::string>, std::pair<double, std::size_t>> groups;
  std::set<std::string> vertices;
  for (const auto& r : rules) {
    std::vector<std::string> items = r.antecedent;
    items.insert(items.end(), r.consequent.begin(), r.consequent.end());
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
    vertices.insert(items.begin(), items.end());
    auto& g = groups[items];
    g.first += r.confidence;
    ++g.second;
  }
  std::vector<std::string> names(vertices.begin(), vertices.end());
  std::map<std::string_view, int> id;
  for (std::size_t i = 0; i < names.size(); ++i) id.emplace(names[i], static_cast<int>(i));
  std::vector<Hyperedge> edges;
  for (const auto& [items, g] : groups) {
    if (items.size() < 2) continue;
    double w = 0;
    switch (mode) {
      case EdgeWeightMode::Mean: w = g.first / static_cast<double>(g.second); break;
      case EdgeWeightMode::Sum: w = g.first; break;
      case EdgeWeightMode::Count: w = static_cast<double>(g.second); break;
    }
    Hyperedge e{{}, w, scale_weight(w)};
    for (const auto& item : items) e.pins.push_back(id.at(item));
    edges.push_back(std::move(e));
  }
  const int n = static_cast<int>(names.size());
  return Hypergraph(std::vector<std::int64_t>(static_cast<std::size_t>(n), 1), std::move(edges), std::move(names));
}

/// k-way assignment. Balance: every part weighs at most
/// floor((1 + epsilon) * W / k).
struct Partition {
  int k = 2;
  std::vector<int> assignment;
  double epsilon = 0.1;

  friend bool operator==(const Partition&, const Partition&) = default;
};

inline std::int64_t max_part_weight(std::int64_t total, int k, double epsilon) {
  return static_cast<std::int64_t>(std::floor((1.0 + epsilon) * static_cast<double>(total) / k + 1e-9));
}

inline std::vector<std::int64_t> part_weights(const Hypergraph& hg, const std::vector<int>& assignment, int k) {
  std::vector<std::int64_t> w(static_cast<std::size_t>(k), 0);
  for (int v = 0; v < hg.num_vertices(); ++v) w[static_cast<std::size_t>(assignment[static_cast<std::size_t>(v)])] += hg.vertex_weight(v);
  return w;
}

inline bool is_balanced(const Hypergraph& hg, const Partition& p) {
  const auto w = part_weights(hg, p.assignment, p.k);
  const std::int64_t bound = max_part_weight(hg.total_weight(), p.k, p.epsilon);
  for (auto x : w)
    if (x > bound || x == 0) return false;
  return true;
}

/// Integer (scaled) cut: sum of scaled weights of edges spanning >= 2 parts.
inline std::int64_t scaled_cut(const Hypergraph& hg, const std::vector<int>& assignment) {
  std::int64_t cut = 0;
  for (const auto& e : hg.edges()) {
    const int first = assignment[static_cast<std::size_t>(e.pins.front())];
    for (int p : e.pins)
      if (assignment[static_cast<std::size_t>(p)] != first) {
        cut += e.scaled;
        break;
      }
  }
  return cut;
}

struct CutReport {
  double cut = 0;
  double connectivity = 0;  // sum of weight * (parts spanned - 1)
  std::int64_t scaled_cut = 0;
  std::vector<std::int64_t> part_weights;

  nlohmann::ordered_json to_json() const {
    return {{"cut", cut}, {"connectivity", connectivity}, {"scaled_cut", scaled_cut}, {"part_weights", part_weights}};
  }
};

inline CutReport cut_report(const Hypergraph& hg, const std::vector<int>& assignment, int k) {
  CutReport r;
  for (const auto& e : hg.edges()) {
    std::set<int> parts;
    for (int p : e.pins) parts.insert(assignment[static_cast<std::size_t>(p)]);
    if (parts.size() > 1) {
      r.cut += e.weight;
      r.scaled_cut += e.scaled;
    }
    r.connectivity += e.weight * static_cast<double>(parts.size() - 1);
  }
  r.part_weights = part_weights(hg, assignment, k);
  return r;
}

/// Text format: `E V W` then one `weight v1 v2 ...` line per edge (1-indexed
/// pins). W is 1 (edge weights) or 11 (edge and vertex weights, the latter
/// one per line after the edges). Edge weights are written as reals.
inline std::string hypergraph_to_text(const Hypergraph& hg) {
  bool unit = true;
  for (auto w : hg.vertex_weights()) unit = unit && w == 1;
  std::string out = std::to_string(hg.num_edges()) + ' ' + std::to_string(hg.num_vertices()) + (unit ? " 1" : " 11") + '\n';
  for (const auto& e : hg.edges()) {
    out += io::format_double(e.weight);
    for (int p : e.pins) out += ' ' + std::to_string(p + 1);
    out += '\n';
  }
  if (!unit)
    for (auto w : hg.vertex_weights()) out += std::to_string(w) + '\n';
  return out;
}

inline Hypergraph hypergraph_from_text(std::string_view text, std::vector<std::string> names = {}) {
  std::vector<std::string_view> rows;
  for (auto line : io::lines(text)) {
    auto t = io::trim(line);
    if (!t.empty() && t.front() != '%') rows.push_back(t);
  }
  auto fields = [](std::string_view s) {
    std::vector<std::string_view> out;
    for (auto f : io::split(s, ' '))
      if (!f.empty()) out.push_back(f);
    return out;
  };
  if (rows.empty()) throw Error(ErrorKind::BadInput, "empty hypergraph file");
  const auto head = fields(rows[0]);
  std::int64_t ne = 0, nv = 0, fmt = 0;
  if (head.size() < 2 || !io::parse_int(head[0], ne) || !io::parse_int(head[1], nv) ||
      (head.size() > 2 && !io::parse_int(head[2], fmt)))
    throw Error(ErrorKind::BadInput, "hypergraph header must be 'E V [W]'");
  const bool edge_w = fmt == 1 || fmt == 11;
  const bool vertex_w = fmt == 10 || fmt == 11;
  if (static_cast<std::int64_t>(rows.size()) != 1 + ne + (vertex_w ? nv : 0))
    throw Error(ErrorKind::BadInput, "hypergraph line count does not match header");
  std::vector<Hyperedge> edges;
  for (std::int64_t i = 0; i < ne; ++i) {
    const auto f = fields(rows[static_cast<std::size_t>(1 + i)]);
    Hyperedge e;
    std::size_t at = 0;
    if (edge_w) {
      if (f.empty() || !io::parse_double(f[0], e.weight)) throw Error(ErrorKind::BadInput, "bad edge weight");
      at = 1;
    }
    e.scaled = scale_weight(e.weight);
    for (; at < f.size(); ++at) {
      std::int64_t p = 0;
      if (!io::parse_int(f[at], p) || p < 1 || p > nv) throw Error(ErrorKind::BadInput, "bad pin");
      e.pins.push_back(static_cast<int>(p - 1));
    }
    edges.push_back(std::move(e));
  }
  std::vector<std::int64_t> weights(static_cast<std::size_t>(nv), 1);
  if (vertex_w)
    for (std::int64_t v = 0; v < nv; ++v)
      if (!io::parse_int(rows[static_cast<std::size_t>(1 + ne + v)], weights[static_cast<std::size_t>(v)]))
        throw Error(ErrorKind::BadInput, "bad vertex weight");
  return Hypergraph(std::move(weights), std::move(edges), std::move(names));
}

inline std::string partition_to_text(const std::vector<int>& assignment) {
  std::string out;
  for (int p : assignment) out += std::to_string(p) + '\n';
  return out;
}

inline std::vector<int> partition_from_text(std::string_view text) {
  std::vector<int> out;
  for (auto line : io::lines(text)) {
    if (io::trim(line).empty()) continue;
    std::int64_t p = 0;
    if (!io::parse_int(io::trim(line), p) || p < 0) throw Error(ErrorKind::BadInput, "bad part id");
    out.push_back(static_cast<int>(p));
  }
  return out;
}

}  // namespace hyperlens
