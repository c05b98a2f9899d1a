#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "hyperlens/error.hpp"
#include "hyperlens/hypergraph.hpp"
#include "hyperlens/random.hpp"

namespace hyperlens {

struct PartitionOptions {
  int restarts = 10;              // region-growing starts at the coarsest level
  int max_passes = 10;            // FM passes per level
  int min_coarse_vertices = 60;   // coarsen down to max(2k, this)
  bool verify_cuts = false;       // recompute the cut after every FM pass
};

namespace detail {

// Two-way pin counts, cut and per-vertex move gains, with gain buckets over
// the free vertices of each side. Ties resolve to the lowest vertex index.
class BisectionState {
 public:
  BisectionState(const Hypergraph& hg, std::vector<int> side) : hg_(hg), side_(std::move(side)) {
    const std::size_t ne = hg.num_edges();
    count_[0].assign(ne, 0);
    count_[1].assign(ne, 0);
    weight_ = {0, 0};
    for (int v = 0; v < hg.num_vertices(); ++v) weight_[static_cast<std::size_t>(side_of(v))] += hg.vertex_weight(v);
    for (std::size_t e = 0; e < ne; ++e)
      for (int p : hg.edges()[e].pins) ++count_[static_cast<std::size_t>(side_of(p))][e];
    cut_ = 0;
    for (std::size_t e = 0; e < ne; ++e)
      if (count_[0][e] > 0 && count_[1][e] > 0) cut_ += hg.edges()[e].scaled;
    gain_.assign(static_cast<std::size_t>(hg.num_vertices()), 0);
    for (int v = 0; v < hg.num_vertices(); ++v) gain_[static_cast<std::size_t>(v)] = compute_gain(v);
    free_.assign(static_cast<std::size_t>(hg.num_vertices()), 0);
  }

  int side_of(int v) const { return side_[static_cast<std::size_t>(v)]; }
  const std::vector<int>& sides() const { return side_; }
  std::int64_t weight(int s) const { return weight_[static_cast<std::size_t>(s)]; }
  std::int64_t cut() const { return cut_; }
  std::int64_t gain(int v) const { return gain_[static_cast<std::size_t>(v)]; }

  std::int64_t compute_gain(int v) const {
    const auto from = static_cast<std::size_t>(side_of(v));
    std::int64_t g = 0;
    for (int e : hg_.incident(v)) {
      const auto ei = static_cast<std::size_t>(e);
      if (count_[from][ei] == 1) g += hg_.edge(e).scaled;
      if (count_[1 - from][ei] == 0) g -= hg_.edge(e).scaled;
    }
    return g;
  }

  void free_all() {
    for (auto& b : buckets_) b.clear();
    for (int v = 0; v < hg_.num_vertices(); ++v) {
      free_[static_cast<std::size_t>(v)] = 1;
      buckets_[static_cast<std::size_t>(side_of(v))][gain(v)].insert(v);
    }
  }

  void lock(int v) {
    auto& f = free_[static_cast<std::size_t>(v)];
    if (!f) return;
    f = 0;
    auto& bucket = buckets_[static_cast<std::size_t>(side_of(v))];
    auto it = bucket.find(gain(v));
    it->second.erase(v);
    if (it->second.empty()) bucket.erase(it);
  }

  // Best free vertex on `from` whose weight fits in `capacity`; -1 if none.
  int best_move(int from, std::int64_t capacity) const {
    if (capacity <= 0) return -1;
    for (const auto& [g, vs] : buckets_[static_cast<std::size_t>(from)])
      for (int v : vs)
        if (hg_.vertex_weight(v) <= capacity) return v;
    return -1;
  }

  void move(int v) {
    const int from = side_of(v);
    const int to = 1 - from;
    const auto f = static_cast<std::size_t>(from);
    const auto t = static_cast<std::size_t>(to);
    cut_ -= gain(v);
    for (int e : hg_.incident(v)) {
      const auto ei = static_cast<std::size_t>(e);
      const std::int64_t w = hg_.edge(e).scaled;
      const auto& pins = hg_.edge(e).pins;
      if (count_[t][ei] == 0) {
        for (int u : pins)
          if (u != v) adjust(u, w);
      } else if (count_[t][ei] == 1) {
        for (int u : pins)
          if (u != v && side_of(u) == to) adjust(u, -w);
      }
      --count_[f][ei];
      ++count_[t][ei];
      if (count_[f][ei] == 0) {
        for (int u : pins)
          if (u != v) adjust(u, -w);
      } else if (count_[f][ei] == 1) {
        for (int u : pins)
          if (u != v && side_of(u) == from) adjust(u, w);
      }
    }
    const bool was_free = free_[static_cast<std::size_t>(v)];
    if (was_free) lock(v);
    side_[static_cast<std::size_t>(v)] = to;
    gain_[static_cast<std::size_t>(v)] = -gain_[static_cast<std::size_t>(v)];
    weight_[f] -= hg_.vertex_weight(v);
    weight_[t] += hg_.vertex_weight(v);
    if (was_free) {
      free_[static_cast<std::size_t>(v)] = 1;
      buckets_[t][gain(v)].insert(v);
    }
  }

 private:
  void adjust(int u, std::int64_t delta) {
    const auto ui = static_cast<std::size_t>(u);
    if (free_[ui]) {
      auto& bucket = buckets_[static_cast<std::size_t>(side_of(u))];
      auto it = bucket.find(gain_[ui]);
      it->second.erase(u);
      if (it->second.empty()) bucket.erase(it);
      gain_[ui] += delta;
      bucket[gain_[ui]].insert(u);
    } else {
      gain_[ui] += delta;
    }
  }

  const Hypergraph& hg_;
  std::vector<int> side_;
  std::array<std::vector<std::int64_t>, 2> count_;
  std::array<std::int64_t, 2> weight_{};
  std::int64_t cut_ = 0;
  std::vector<std::int64_t> gain_;
  std::vector<char> free_;
  std::array<std::map<std::int64_t, std::set<int>, std::greater<>>, 2> buckets_;
};

using SideBounds = std::array<std::int64_t, 2>;

// Moves best-gain vertices off any overweight side. False if stuck.
inline bool rebalance(BisectionState& st, const SideBounds& max_w) {
  st.free_all();
  for (int s = 0; s < 2; ++s) {
    while (st.weight(s) > max_w[static_cast<std::size_t>(s)]) {
      const int v = st.best_move(s, max_w[static_cast<std::size_t>(1 - s)] - st.weight(1 - s));
      if (v < 0) return false;
      st.lock(v);
      st.move(v);
    }
  }
  return true;
}

/// FM passes with move-once locking and best-prefix rollback. Only moves
/// that keep the destination within its bound are made.
inline std::int64_t fm_refine_sides(const Hypergraph& hg, std::vector<int>& side, const SideBounds& max_w, int max_passes,
                                    bool verify = false) {
  BisectionState st(hg, side);
  const std::int64_t initial = st.cut();
  for (int pass = 0; pass < max_passes; ++pass) {
    st.free_all();
    const std::int64_t start = st.cut();
    std::int64_t best = start;
    std::size_t best_len = 0;
    std::vector<int> moves;
    while (true) {
      const int a = st.best_move(0, max_w[1] - st.weight(1));
      const int b = st.best_move(1, max_w[0] - st.weight(0));
      if (a < 0 && b < 0) break;
      int v;
      if (a < 0)
        v = b;
      else if (b < 0)
        v = a;
      else if (st.gain(a) != st.gain(b))
        v = st.gain(a) > st.gain(b) ? a : b;
      else
        v = std::min(a, b);
      st.lock(v);
      st.move(v);
      moves.push_back(v);
      if (st.cut() < best) {
        best = st.cut();
        best_len = moves.size();
      }
    }
    for (std::size_t i = moves.size(); i > best_len; --i) st.move(moves[i - 1]);
    if (verify && st.cut() != scaled_cut(hg, st.sides()))
      throw std::logic_error("incremental FM cut disagrees with recomputed cut");
    if (best >= start) break;
  }
  if (st.cut() > initial) throw std::logic_error("FM refinement increased the cut");
  side = st.sides();
  return st.cut();
}

// Greedy region growing: side 0 starts from `start` and absorbs the best-gain
// vertex of side 1 until it reaches `target0`.
inline std::optional<std::vector<int>> grow_region(const Hypergraph& hg, const SideBounds& max_w, std::int64_t target0,
                                                   int start) {
  BisectionState st(hg, std::vector<int>(static_cast<std::size_t>(hg.num_vertices()), 1));
  st.free_all();
  st.lock(start);
  st.move(start);
  while (st.weight(0) < target0) {
    const int v = st.best_move(1, max_w[0] - st.weight(0));
    if (v < 0) break;
    st.lock(v);
    st.move(v);
  }
  if (st.weight(0) > max_w[0] || st.weight(1) > max_w[1]) return std::nullopt;
  return st.sides();
}

struct Bisection {
  std::vector<int> side;
  std::int64_t cut = 0;
};

inline std::optional<Bisection> best_grown(const Hypergraph& hg, const SideBounds& max_w, std::int64_t target0,
                                           std::uint64_t seed, int restarts, int fm_passes, bool verify) {
  std::vector<int> starts;
  for (int v = 0; v < hg.num_vertices(); ++v)
    if (hg.vertex_weight(v) <= max_w[0]) starts.push_back(v);
  if (starts.empty()) return std::nullopt;
  std::optional<Bisection> best;
  for (int r = 0; r < std::max(1, restarts); ++r) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    const int start = starts[rng.below(starts.size())];
    auto side = grow_region(hg, max_w, target0, start);
    if (!side) continue;
    std::int64_t cut =
        fm_passes > 0 ? fm_refine_sides(hg, *side, max_w, fm_passes, verify) : scaled_cut(hg, *side);
    if (!best || cut < best->cut) best = Bisection{std::move(*side), cut};
  }
  return best;
}

}  // namespace detail

struct CoarseningLevel {
  Hypergraph graph;               // the coarser hypergraph
  std::vector<int> fine_to_coarse;  // previous level vertex -> vertex of `graph`
};

struct CoarseningHierarchy {
  Hypergraph finest;
  std::vector<CoarseningLevel> levels;

  const Hypergraph& coarsest() const { return levels.empty() ? finest : levels.back().graph; }
  const Hypergraph& graph(std::size_t level) const { return level == 0 ? finest : levels[level - 1].graph; }
  std::size_t depth() const { return levels.size() + 1; }
};

/// One round of heavy-connectivity matching. Pair rating is the sum over
/// shared edges of scaled weight / (|e| - 1); pairs are taken heaviest first,
/// ties by lowest (u, v), and merged weight never exceeds `max_cluster`.
/// Vertices without edges are paired among themselves.
inline std::vector<int> heavy_matching(const Hypergraph& hg, std::int64_t max_cluster, std::size_t max_rated_edge = 64) {
  const int n = hg.num_vertices();
  std::map<std::pair<int, int>, double> rating;
  for (const auto& e : hg.edges()) {
    if (e.pins.size() > max_rated_edge) continue;
    const double r = static_cast<double>(e.scaled) / static_cast<double>(e.pins.size() - 1);
    for (std::size_t i = 0; i < e.pins.size(); ++i)
      for (std::size_t j = i + 1; j < e.pins.size(); ++j) rating[{e.pins[i], e.pins[j]}] += r;
  }
  std::vector<std::pair<double, std::pair<int, int>>> order;
  order.reserve(rating.size());
  for (const auto& [uv, r] : rating) order.emplace_back(r, uv);
  std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<int> mate(static_cast<std::size_t>(n), -1);
  for (const auto& [r, uv] : order) {
    const auto [u, v] = uv;
    if (mate[static_cast<std::size_t>(u)] >= 0 || mate[static_cast<std::size_t>(v)] >= 0) continue;
    if (hg.vertex_weight(u) + hg.vertex_weight(v) > max_cluster) continue;
    mate[static_cast<std::size_t>(u)] = v;
    mate[static_cast<std::size_t>(v)] = u;
  }
  int pending = -1;
  for (int v = 0; v < n; ++v) {
    if (!hg.incident(v).empty() || mate[static_cast<std::size_t>(v)] >= 0) continue;
    if (pending >= 0 && hg.vertex_weight(pending) + hg.vertex_weight(v) <= max_cluster) {
      mate[static_cast<std::size_t>(pending)] = v;
      mate[static_cast<std::size_t>(v)] = pending;
      pending = -1;
    } else {
      pending = v;
    }
  }
  std::vector<int> coarse(static_cast<std::size_t>(n), -1);
  int next = 0;
  for (int v = 0; v < n; ++v) {
    if (coarse[static_cast<std::size_t>(v)] >= 0) continue;
    coarse[static_cast<std::size_t>(v)] = next;
    if (mate[static_cast<std::size_t>(v)] >= 0) coarse[static_cast<std::size_t>(mate[static_cast<std::size_t>(v)])] = next;
    ++next;
  }
  return coarse;
}

inline Hypergraph contract(const Hypergraph& hg, const std::vector<int>& fine_to_coarse) {
  int nc = 0;
  for (int c : fine_to_coarse) nc = std::max(nc, c + 1);
  std::vector<std::int64_t> weights(static_cast<std::size_t>(nc), 0);
  for (int v = 0; v < hg.num_vertices(); ++v) weights[static_cast<std::size_t>(fine_to_coarse[static_cast<std::size_t>(v)])] += hg.vertex_weight(v);
  std::vector<Hyperedge> edges;
  edges.reserve(hg.num_edges());
  for (const auto& e : hg.edges()) {
    Hyperedge c{{}, e.weight, e.scaled};
    for (int p : e.pins) c.pins.push_back(fine_to_coarse[static_cast<std::size_t>(p)]);
    edges.push_back(std::move(c));
  }
  return Hypergraph(std::move(weights), std::move(edges));
}

/// Successive heavy-connectivity contractions until at most
/// `target_vertices` remain or a level shrinks by less than 5%.
inline CoarseningHierarchy coarsen(const Hypergraph& hg, int target_vertices, std::int64_t max_cluster_weight = 0) {
  CoarseningHierarchy h{hg, {}};
  if (max_cluster_weight <= 0) {
    const double avg = static_cast<double>(hg.total_weight()) / std::max(1, target_vertices);
    max_cluster_weight = std::max<std::int64_t>({1, hg.max_vertex_weight(), static_cast<std::int64_t>(std::ceil(1.5 * avg))});
  }
  while (h.coarsest().num_vertices() > target_vertices) {
    const Hypergraph& cur = h.coarsest();
    auto map = heavy_matching(cur, max_cluster_weight);
    int nc = 0;
    for (int c : map) nc = std::max(nc, c + 1);
    if (nc >= cur.num_vertices()) break;
    const bool stalled = nc > 0.95 * cur.num_vertices();
    Hypergraph next = contract(cur, map);
    h.levels.push_back(CoarseningLevel{std::move(next), std::move(map)});
    if (stalled) break;
  }
  return h;
}

/// Region-growing bisection under the (1 + epsilon) balance bound; the best
/// of `restarts` seeded starts by cut.
inline Partition initial_bisection(const Hypergraph& hg, double epsilon, std::uint64_t seed, int restarts = 10) {
  if (hg.num_vertices() < 2) throw Error(ErrorKind::KTooLarge, "bisection needs at least two vertices");
  const std::int64_t bound = max_part_weight(hg.total_weight(), 2, epsilon);
  if (hg.max_vertex_weight() > bound)
    throw Error(ErrorKind::InfeasibleBalance, "a vertex outweighs the balance bound " + std::to_string(bound));
  const detail::SideBounds max_w{bound, bound};
  const std::int64_t target0 = hg.total_weight() / 2;
  auto best = detail::best_grown(hg, max_w, target0, seed, restarts, 0, false);
  if (!best) throw Error(ErrorKind::InfeasibleBalance, "no balanced bisection found");
  return Partition{2, std::move(best->side), epsilon};
}

/// Two-way FM refinement under the partition's balance bound. The returned
/// cut never exceeds the input cut.
inline Partition fm_refine(const Hypergraph& hg, Partition p, int max_passes = 10, bool verify = false) {
  if (p.k != 2) throw Error(ErrorKind::ConfigError, "fm_refine works on bisections");
  const std::int64_t bound = max_part_weight(hg.total_weight(), 2, p.epsilon);
  detail::fm_refine_sides(hg, p.assignment, {bound, bound}, max_passes, verify);
  return p;
}

namespace detail {

// Multilevel bisection: coarsen, grow + refine on the coarsest level, then
// project back refining at every level. Coarse levels relax the bounds by
// their heaviest vertex; the finest level is strict.
inline std::vector<int> multilevel_bisect(const Hypergraph& hg, const SideBounds& max_w, std::int64_t target0,
                                          std::uint64_t seed, const PartitionOptions& opts, int coarsen_target) {
  auto attempt = [&](const CoarseningHierarchy& h) -> std::optional<std::vector<int>> {
    auto relaxed = [&](std::size_t level) {
      const std::int64_t slack = level == 0 ? 0 : h.graph(level).max_vertex_weight() - 1;
      return SideBounds{max_w[0] + slack, max_w[1] + slack};
    };
    const std::size_t top = h.depth() - 1;
    auto best = best_grown(h.coarsest(), relaxed(top), target0, seed, opts.restarts, opts.max_passes, opts.verify_cuts);
    if (!best) return std::nullopt;
    std::vector<int> side = std::move(best->side);
    for (std::size_t level = top; level > 0; --level) {
      const auto& map = h.levels[level - 1].fine_to_coarse;
      const Hypergraph& fine = h.graph(level - 1);
      std::vector<int> projected(static_cast<std::size_t>(fine.num_vertices()));
      for (int v = 0; v < fine.num_vertices(); ++v) projected[static_cast<std::size_t>(v)] = side[static_cast<std::size_t>(map[static_cast<std::size_t>(v)])];
      {
        BisectionState st(fine, projected);
        if (!rebalance(st, relaxed(level - 1))) return std::nullopt;
        projected = st.sides();
      }
      fm_refine_sides(fine, projected, relaxed(level - 1), opts.max_passes, opts.verify_cuts);
      side = std::move(projected);
    }
    return side;
  };

  auto side = attempt(coarsen(hg, coarsen_target));
  if (!side) side = attempt(CoarseningHierarchy{hg, {}});
  if (!side) throw Error(ErrorKind::InfeasibleBalance, "could not bisect within the balance bounds");
  return *side;
}

}  // namespace detail

struct PartitionResult {
  Partition partition;
  CutReport report;
};

/// Balanced k-way partition by recursive multilevel bisection. Each split
/// aims at a weight proportional to the parts it will hold; the side bounds
/// are chosen so every final part respects floor((1 + epsilon) * W / k).
inline PartitionResult partition_k(const Hypergraph& hg, int k, double epsilon, std::uint64_t seed,
                                   const PartitionOptions& opts = {}) {
  const int n = hg.num_vertices();
  if (k < 2) throw Error(ErrorKind::ConfigError, "k must be at least 2");
  if (k > n) throw Error(ErrorKind::KTooLarge, "k=" + std::to_string(k) + " exceeds vertex count " + std::to_string(n));
  if (epsilon < 0) throw Error(ErrorKind::ConfigError, "epsilon must be non-negative");
  const std::int64_t bound = max_part_weight(hg.total_weight(), k, epsilon);
  if (hg.max_vertex_weight() > bound)
    throw Error(ErrorKind::InfeasibleBalance, "a vertex outweighs the part bound " + std::to_string(bound));
  if (bound * k < hg.total_weight())
    throw Error(ErrorKind::InfeasibleBalance, "epsilon too small for k=" + std::to_string(k));

  std::vector<int> assignment(static_cast<std::size_t>(n), -1);
  std::function<void(const std::vector<int>&, int, int, std::uint64_t)> recurse =
      [&](const std::vector<int>& verts, int parts, int first, std::uint64_t s) {
        if (parts == 1) {
          for (int v : verts) assignment[static_cast<std::size_t>(v)] = first;
          return;
        }
        const int k0 = (parts + 1) / 2;
        const int k1 = parts / 2;
        const Hypergraph sub = hg.induced(verts);
        const std::int64_t total = sub.total_weight();
        const std::int64_t heaviest = sub.max_vertex_weight();
        std::int64_t lightest = heaviest;
        for (auto w : sub.vertex_weights()) lightest = std::min(lightest, w);
        auto cap = [&](int kside) { return kside == 1 ? bound : kside * (bound - heaviest + 1); };
        const detail::SideBounds max_w{std::min(cap(k0), total - k1 * lightest), std::min(cap(k1), total - k0 * lightest)};
        if (max_w[0] + max_w[1] < total || max_w[0] < k0 * lightest || max_w[1] < k1 * lightest)
          throw Error(ErrorKind::InfeasibleBalance, "cannot split " + std::to_string(total) + " weight into " +
                                                        std::to_string(parts) + " bounded parts");
        std::int64_t target0 = static_cast<std::int64_t>(std::llround(static_cast<double>(total) * k0 / parts));
        target0 = std::clamp(target0, total - max_w[1], max_w[0]);
        const std::uint64_t level_seed = derive_seed(derive_seed(s, static_cast<std::uint64_t>(first)), static_cast<std::uint64_t>(parts));
        const auto side =
            detail::multilevel_bisect(sub, max_w, target0, level_seed, opts, std::max(2 * parts, opts.min_coarse_vertices));
        std::vector<int> left, right;
        for (std::size_t i = 0; i < verts.size(); ++i) (side[i] == 0 ? left : right).push_back(verts[i]);
        if (static_cast<int>(left.size()) < k0 || static_cast<int>(right.size()) < k1)
          throw Error(ErrorKind::InfeasibleBalance, "bisection left a side with fewer vertices than parts");
        recurse(left, k0, first, level_seed);
        recurse(right, k1, first + k0, level_seed);
      };
  std::vector<int> all(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) all[static_cast<std::size_t>(v)] = v;
  recurse(all, k, 0, seed);

  Partition p{k, std::move(assignment), epsilon};
  if (!is_balanced(hg, p)) throw std::logic_error("partition_k produced an unbalanced partition");
  PartitionResult out{p, cut_report(hg, p.assignment, k)};
  return out;
}

/// Assigns every document of `all_docs` that is not a vertex of `hg` to the
/// currently lightest part (ties to the lowest part id), in sorted order.
inline std::map<std::string, int> isolated_vertex_placement(const std::vector<std::string>& all_docs, const Hypergraph& hg,
                                                            const Partition& p) {
  std::map<std::string, int> out;
  for (int v = 0; v < hg.num_vertices(); ++v) out.emplace(hg.names().at(static_cast<std::size_t>(v)), p.assignment[static_cast<std::size_t>(v)]);
  auto weights = part_weights(hg, p.assignment, p.k);
  std::set<std::string> missing;
  for (const auto& d : all_docs)
    if (!out.count(d)) missing.insert(d);
  for (const auto& d : missing) {
    const auto lightest = std::min_element(weights.begin(), weights.end()) - weights.begin();
    out.emplace(d, static_cast<int>(lightest));
    weights[static_cast<std::size_t>(lightest)] += 1;
  }
  return out;
}

}  // namespace hyperlens
