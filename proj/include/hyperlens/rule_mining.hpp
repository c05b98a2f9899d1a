#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "hyperlens/error.hpp"
#include "hyperlens/io.hpp"
#include "hyperlens/parallel.hpp"
#include "hyperlens/session_builder.hpp"

namespace hyperlens {

struct Transaction {
  std::string tid;
  std::vector<std::string> items;  // sorted, distinct

  friend bool operator==(const Transaction&, const Transaction&) = default;
};

struct TransactionOptions {
  bool per_user = false;                         // one basket per user instead of per session
  const std::set<std::string, std::less<>>* universe = nullptr;  // keep only these items when set
};

struct TransactionSet {
  std::vector<Transaction> transactions;
  std::size_t dropped_empty = 0;
};

/// One transaction per session (or per user) holding its distinct item keys.
/// Baskets left empty are dropped and counted.
inline TransactionSet build_transactions(const std::vector<Session>& sessions, const TransactionOptions& opts = {}) {
  std::map<std::string, std::set<std::string>> baskets;
  std::vector<std::string> order;
  for (const auto& s : sessions) {
    // Split conflicting sessions share an id, so the user is part of the tid.
    const std::string tid = opts.per_user ? s.user.str() : s.session_id + "@" + s.user.str();
    auto [it, inserted] = baskets.try_emplace(tid);
    if (inserted) order.push_back(tid);
    for (const auto& r : s.resources) {
      std::string key = r.key();
      if (opts.universe && !opts.universe->count(key)) continue;
      it->second.insert(std::move(key));
    }
  }
  TransactionSet out;
  for (const auto& tid : order) {
    const auto& items = baskets[tid];
    if (items.empty()) {
      ++out.dropped_empty;
      continue;
    }
    out.transactions.push_back(Transaction{tid, {items.begin(), items.end()}});
  }
  return out;
}

struct ItemSet {
  std::vector<std::string> items;  // sorted
  std::size_t support_count = 0;
  std::size_t n_transactions = 0;

  double support() const { return static_cast<double>(support_count) / static_cast<double>(n_transactions); }

  friend bool operator==(const ItemSet&, const ItemSet&) = default;
};

struct MiningOptions {
  double min_support = 0.01;
  std::size_t max_itemset_size = 6;
  unsigned threads = 1;
};

/// Smallest integer count meeting a fractional threshold. The epsilon absorbs
/// binary representation error such as 0.05 * 40 = 2.0000000000000004.
inline std::size_t min_count_for(double fraction, std::size_t denominator) {
  const double raw = fraction * static_cast<double>(denominator);
  const double c = std::ceil(raw - 1e-9);
  return c <= 0 ? 0 : static_cast<std::size_t>(c);
}

namespace detail {

using Bits = std::vector<std::uint64_t>;

inline std::size_t popcount_and(const Bits& a, const Bits& b, Bits* out) {
  std::size_t n = 0;
  if (out) out->resize(a.size());
  for (std::size_t w = 0; w < a.size(); ++w) {
    const std::uint64_t x = a[w] & b[w];
    if (out) (*out)[w] = x;
    n += static_cast<std::size_t>(std::popcount(x));
  }
  return n;
}

struct Level {
  std::vector<std::vector<int>> sets;  // lexicographic
  std::vector<Bits> tids;
  std::vector<std::size_t> counts;
};

}  // namespace detail

/// Canonical order: by size, then lexicographically by item keys.
inline bool itemset_less(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

/// Level-wise Apriori with subset pruning and exact counts. Exceeding the
/// itemset size cap aborts instead of silently truncating.
inline std::vector<ItemSet> mine_frequent_itemsets(const std::vector<Transaction>& tx, const MiningOptions& opts = {}) {
  if (tx.empty()) throw Error(ErrorKind::NoTransactions, "no transactions to mine");
  if (!(opts.min_support > 0.0 && opts.min_support <= 1.0))
    throw Error(ErrorKind::ConfigError, "min_support must be in (0, 1]");
  const std::size_t n = tx.size();
  const std::size_t min_count = std::max<std::size_t>(1, min_count_for(opts.min_support, n));

  std::set<std::string> all;
  for (const auto& t : tx) all.insert(t.items.begin(), t.items.end());
  const std::vector<std::string> names(all.begin(), all.end());
  std::map<std::string_view, int> id_of;
  for (std::size_t i = 0; i < names.size(); ++i) id_of.emplace(names[i], static_cast<int>(i));

  const std::size_t words = (n + 63) / 64;
  std::vector<detail::Bits> item_tids(names.size(), detail::Bits(words, 0));
  for (std::size_t t = 0; t < n; ++t)
    for (const auto& item : tx[t].items) item_tids[static_cast<std::size_t>(id_of.at(item))][t / 64] |= 1ULL << (t % 64);

  std::vector<ItemSet> out;
  auto emit = [&](const detail::Level& level) {
    for (std::size_t i = 0; i < level.sets.size(); ++i) {
      ItemSet s;
      for (int id : level.sets[i]) s.items.push_back(names[static_cast<std::size_t>(id)]);
      s.support_count = level.counts[i];
      s.n_transactions = n;
      out.push_back(std::move(s));
    }
  };

  detail::Level level;
  for (std::size_t i = 0; i < names.size(); ++i) {
    std::size_t c = 0;
    for (auto w : item_tids[i]) c += static_cast<std::size_t>(std::popcount(w));
    if (c >= min_count) {
      level.sets.push_back({static_cast<int>(i)});
      level.tids.push_back(item_tids[i]);
      level.counts.push_back(c);
    }
  }

  for (std::size_t size = 1; !level.sets.empty(); ++size) {
    emit(level);
    // Join sets sharing their first size-1 items, then prune on subsets.
    std::set<std::vector<int>> frequent(level.sets.begin(), level.sets.end());
    std::vector<std::pair<std::size_t, std::size_t>> joins;
    for (std::size_t a = 0; a < level.sets.size(); ++a) {
      for (std::size_t b = a + 1; b < level.sets.size(); ++b) {
        if (!std::equal(level.sets[a].begin(), level.sets[a].end() - 1, level.sets[b].begin())) break;
        std::vector<int> cand = level.sets[a];
        cand.push_back(level.sets[b].back());
        bool ok = true;
        std::vector<int> sub(cand.size() - 1);
        for (std::size_t drop = 0; ok && drop + 2 < cand.size(); ++drop) {
          std::size_t k = 0;
          for (std::size_t j = 0; j < cand.size(); ++j)
            if (j != drop) sub[k++] = cand[j];
          ok = frequent.count(sub) > 0;
        }
        if (ok) joins.emplace_back(a, b);
      }
    }
    std::vector<detail::Bits> tids(joins.size());
    std::vector<std::size_t> counts(joins.size());
    parallel_for(joins.size(), opts.threads, [&](std::size_t j) {
      counts[j] = detail::popcount_and(level.tids[joins[j].first], level.tids[joins[j].second], &tids[j]);
    });
    detail::Level next;
    for (std::size_t j = 0; j < joins.size(); ++j) {
      if (counts[j] < min_count) continue;
      std::vector<int> cand = level.sets[joins[j].first];
      cand.push_back(level.sets[joins[j].second].back());
      next.sets.push_back(std::move(cand));
      next.tids.push_back(std::move(tids[j]));
      next.counts.push_back(counts[j]);
    }
    if (!next.sets.empty() && size + 1 > opts.max_itemset_size)
      throw Error(ErrorKind::ItemsetSizeCap, "frequent itemsets of size " + std::to_string(size + 1) +
                                                 " exceed the cap of " + std::to_string(opts.max_itemset_size) +
                                                 "; raise min_support or the cap");
    level = std::move(next);
  }
  std::sort(out.begin(), out.end(), [](const ItemSet& a, const ItemSet& b) { return itemset_less(a.items, b.items); });
  return out;
}

struct AssociationRule {
  std::vector<std::string> antecedent;
  std::vector<std::string> consequent;
  std::size_t union_count = 0;
  std::size_t antecedent_count = 0;
  std::size_t n_transactions = 0;

  double support() const { return static_cast<double>(union_count) / static_cast<double>(n_transactions); }
  double confidence() const { return static_cast<double>(union_count) / static_cast<double>(antecedent_count); }

  std::vector<std::string> items() const {
    std::vector<std::string> all = antecedent;
    all.insert(all.end(), consequent.begin(), consequent.end());
    std::sort(all.begin(), all.end());
    return all;
  }

  friend bool operator==(const AssociationRule&, const AssociationRule&) = default;
};

struct RuleOptions {
  double min_confidence = 0.8;
  bool single_consequent = false;
};

/// Every split A => C of each frequent itemset with confidence at or above
/// the threshold. Itemsets must be closed under subsets (Apriori output).
inline std::vector<AssociationRule> generate_rules(const std::vector<ItemSet>& itemsets, const RuleOptions& opts = {}) {
  std::map<std::vector<std::string>, std::size_t> count_of;
  for (const auto& s : itemsets) count_of.emplace(s.items, s.support_count);
  std::vector<AssociationRule> out;
  for (const auto& s : itemsets) {
    const std::size_t m = s.items.size();
    if (m < 2) continue;
    if (m > 24) throw Error(ErrorKind::ItemsetSizeCap, "itemset too large for rule enumeration");
    const std::uint32_t full = (1u << m) - 1;
    for (std::uint32_t mask = 1; mask < full; ++mask) {
      AssociationRule r;
      for (std::size_t i = 0; i < m; ++i) (mask >> i & 1u ? r.antecedent : r.consequent).push_back(s.items[i]);
      if (opts.single_consequent && r.consequent.size() != 1) continue;
      auto it = count_of.find(r.antecedent);
      if (it == count_of.end()) throw Error(ErrorKind::BadInput, "itemsets are not closed under subsets");
      r.union_count = s.support_count;
      r.antecedent_count = it->second;
      r.n_transactions = s.n_transactions;
      if (r.union_count < min_count_for(opts.min_confidence, r.antecedent_count)) continue;
      out.push_back(std::move(r));
    }
  }
  std::sort(out.begin(), out.end(), [](const AssociationRule& a, const AssociationRule& b) {
    auto ia = a.items(), ib = b.items();
    if (ia != ib) return itemset_less(ia, ib);
    return itemset_less(a.antecedent, b.antecedent);
  });
  return out;
}

inline std::string join(const std::vector<std::string>& items, char sep = ',') {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

inline std::string rules_to_tsv(const std::vector<AssociationRule>& rules) {
  std::string out;
  for (const auto& r : rules)
    out += join(r.antecedent) + '\t' + join(r.consequent) + '\t' + io::format_double(r.support()) + '\t' +
           io::format_double(r.confidence()) + '\n';
  return out;
}

inline std::string itemsets_to_tsv(const std::vector<ItemSet>& sets) {
  std::string out;
  for (const auto& s : sets) out += join(s.items) + '\t' + std::to_string(s.support_count) + '\t' + io::format_double(s.support()) + '\n';
  return out;
}

// The rules file only carries fractions, which is all hypergraph
// construction needs.
struct RuleRecord {
  std::vector<std::string> antecedent;
  std::vector<std::string> consequent;
  double support = 0;
  double confidence = 0;
};

inline RuleRecord to_record(const AssociationRule& r) { return {r.antecedent, r.consequent, r.support(), r.confidence()}; }

inline std::vector<RuleRecord> rules_from_tsv(std::string_view text) {
  std::vector<RuleRecord> out;
  std::size_t n = 0;
  auto items = [](std::string_view s) {
    std::vector<std::string> v;
    for (auto part : io::split(s, ','))
      if (!part.empty()) v.emplace_back(part);
    return v;
  };
  for (auto line : io::lines(text)) {
    ++n;
    if (line.empty()) continue;
    auto f = io::split(line, '\t');
    RuleRecord r;
    if (f.size() != 4 || !io::parse_double(f[2], r.support) || !io::parse_double(f[3], r.confidence))
      throw Error(ErrorKind::BadInput, "rules line " + std::to_string(n) + " is malformed");
    r.antecedent = items(f[0]);
    r.consequent = items(f[1]);
    if (r.antecedent.empty() || r.consequent.empty())
      throw Error(ErrorKind::BadInput, "rules line " + std::to_string(n) + " has an empty side");
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace hyperlens
