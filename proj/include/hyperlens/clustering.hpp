#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

#include "hyperlens/error.hpp"
#include "hyperlens/io.hpp"
#include "hyperlens/random.hpp"
#include "hyperlens/text_index.hpp"

namespace hyperlens {

/// Dense rows keyed by document id; the input of every content baseline.
struct FeatureMatrix {
  std::vector<std::string> ids;
  Eigen::MatrixXd rows;  // ids.size() x dims
};

inline FeatureMatrix to_features(const TermDocMatrix& m) {
  FeatureMatrix f{m.doc_ids, Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m.rows.size()), static_cast<Eigen::Index>(m.n_terms))};
  for (std::size_t i = 0; i < m.rows.size(); ++i)
    for (auto [t, w] : m.rows[i]) f.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = w;
  return f;
}

struct ClusterAssignment {
  std::string algorithm;
  std::vector<std::string> doc_ids;  // sorted
  std::vector<int> labels;           // dense in [0, k_effective)
  int k_effective = 0;
  std::map<std::string, std::string> params;
  std::uint64_t seed = 0;

  std::map<std::string, int> as_map() const {
    std::map<std::string, int> out;
    for (std::size_t i = 0; i < doc_ids.size(); ++i) out.emplace(doc_ids[i], labels[i]);
    return out;
  }

  std::vector<std::vector<std::string>> clusters() const {
    std::vector<std::vector<std::string>> out(static_cast<std::size_t>(k_effective));
    for (std::size_t i = 0; i < doc_ids.size(); ++i) out[static_cast<std::size_t>(labels[i])].push_back(doc_ids[i]);
    return out;
  }
};

inline std::string assignment_to_tsv(const ClusterAssignment& a) {
  std::string out;
  for (std::size_t i = 0; i < a.doc_ids.size(); ++i) out += a.doc_ids[i] + '\t' + std::to_string(a.labels[i]) + '\n';
  return out;
}

/// Reads `doc_id<TAB>cluster_id` back, densifying ids by first appearance in
/// sorted document order.
inline ClusterAssignment assignment_from_tsv(std::string_view text, std::string algorithm) {
  std::map<std::string, std::int64_t> raw;
  std::size_t n = 0;
  for (auto line : io::lines(text)) {
    ++n;
    if (line.empty()) continue;
    auto f = io::split(line, '\t');
    std::int64_t c = 0;
    if (f.size() != 2 || f[0].empty() || !io::parse_int(f[1], c))
      throw Error(ErrorKind::BadInput, "assignment line " + std::to_string(n) + " is not doc_id<TAB>cluster_id");
    if (!raw.emplace(std::string(f[0]), c).second) throw Error(ErrorKind::BadInput, "document assigned twice: " + std::string(f[0]));
  }
  ClusterAssignment a;
  a.algorithm = std::move(algorithm);
  std::map<std::int64_t, int> dense;
  for (const auto& [doc, c] : raw) {
    auto [it, inserted] = dense.emplace(c, static_cast<int>(dense.size()));
    a.doc_ids.push_back(doc);
    a.labels.push_back(it->second);
  }
  a.k_effective = static_cast<int>(dense.size());
  return a;
}

namespace detail {

// Rows reordered by document id so results do not depend on input order.
struct Canonical {
  std::vector<std::string> ids;
  Eigen::MatrixXd x;
};

inline Canonical canonicalize(const FeatureMatrix& f) {
  if (static_cast<Eigen::Index>(f.ids.size()) != f.rows.rows())
    throw Error(ErrorKind::BadInput, "feature matrix id count does not match row count");
  std::vector<std::size_t> order(f.ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return f.ids[a] < f.ids[b]; });
  Canonical c;
  c.x.resize(f.rows.rows(), f.rows.cols());
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i > 0 && f.ids[order[i]] == f.ids[order[i - 1]]) throw Error(ErrorKind::BadInput, "duplicate document id " + f.ids[order[i]]);
    c.ids.push_back(f.ids[order[i]]);
    c.x.row(static_cast<Eigen::Index>(i)) = f.rows.row(static_cast<Eigen::Index>(order[i]));
  }
  return c;
}

inline ClusterAssignment make_assignment(std::string algorithm, std::vector<std::string> ids, const std::vector<int>& raw,
                                         std::uint64_t seed) {
  ClusterAssignment a;
  a.algorithm = std::move(algorithm);
  a.seed = seed;
  std::map<int, int> dense;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] < 0) continue;
    auto [it, inserted] = dense.emplace(raw[i], static_cast<int>(dense.size()));
    a.doc_ids.push_back(ids[i]);
    a.labels.push_back(it->second);
  }
  a.k_effective = static_cast<int>(dense.size());
  return a;
}

inline void check_k(int k, Eigen::Index n) {
  if (k < 1) throw Error(ErrorKind::ConfigError, "k must be positive");
  if (k > n) throw Error(ErrorKind::KTooLarge, "k=" + std::to_string(k) + " exceeds document count " + std::to_string(n));
}

// Nearest center by squared distance; ties to the lowest center index.
inline int nearest(const Eigen::MatrixXd& centers, const Eigen::VectorXd& x, double* dist2 = nullptr) {
  int best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centers.rows(); ++c) {
    const double d = (centers.row(c).transpose() - x).squaredNorm();
    if (d < bd) {
      bd = d;
      best = static_cast<int>(c);
    }
  }
  if (dist2) *dist2 = bd;
  return best;
}

// Greedy k-means++ seeding: first center uniform; each later center is the
// best of 2 + ln(k) candidates drawn by squared distance, judged by the
// potential it leaves. With fewer distinct points than k, the lowest unused
// row is taken.
inline std::vector<Eigen::Index> plus_plus_seeds(const Eigen::MatrixXd& x, int k, Rng& rng) {
  const Eigen::Index n = x.rows();
  const auto un = static_cast<std::size_t>(n);
  const int trials = 2 + static_cast<int>(std::log(static_cast<double>(k)));
  std::vector<Eigen::Index> chosen{static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)))};
  std::vector<double> d2(un), cand(un), best_d2;
  for (Eigen::Index i = 0; i < n; ++i) d2[static_cast<std::size_t>(i)] = (x.row(i) - x.row(chosen[0])).squaredNorm();
  auto sample = [&](double total) {
    double r = rng.uniform() * total;
    Eigen::Index last = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (d2[static_cast<std::size_t>(i)] <= 0) continue;
      last = i;
      r -= d2[static_cast<std::size_t>(i)];
      if (r < 0) return i;
    }
    return last;
  };
  while (static_cast<int>(chosen.size()) < k) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    Eigen::Index pick = -1;
    if (total > 0) {
      double best_pot = std::numeric_limits<double>::infinity();
      for (int t = 0; t < trials; ++t) {
        const Eigen::Index c = sample(total);
        double pot = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
          cand[static_cast<std::size_t>(i)] = std::min(d2[static_cast<std::size_t>(i)], (x.row(i) - x.row(c)).squaredNorm());
          pot += cand[static_cast<std::size_t>(i)];
        }
        if (pot < best_pot) {
          best_pot = pot;
          pick = c;
          best_d2 = cand;
        }
      }
      d2 = best_d2;
    } else {
      for (Eigen::Index i = 0; i < n && pick < 0; ++i)
        if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) pick = i;
    }
    chosen.push_back(pick);
  }
  return chosen;
}

struct LloydResult {
  std::vector<int> labels;
  Eigen::MatrixXd centers;
  std::vector<double> objective;
  int iterations = 0;
};

inline LloydResult lloyd(const Eigen::MatrixXd& x, int k, std::uint64_t seed, int max_iter) {
  const Eigen::Index n = x.rows();
  Rng rng(seed);
  LloydResult r;
  const auto seeds = plus_plus_seeds(x, k, rng);
  r.centers.resize(k, x.cols());
  for (int c = 0; c < k; ++c) r.centers.row(c) = x.row(seeds[static_cast<std::size_t>(c)]);
  r.labels.assign(static_cast<std::size_t>(n), -1);
  std::vector<double> dist(static_cast<std::size_t>(n));
  for (int it = 0; it < std::max(1, max_iter); ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = nearest(r.centers, x.row(i).transpose(), &dist[static_cast<std::size_t>(i)]);
      if (c != r.labels[static_cast<std::size_t>(i)]) changed = true;
      r.labels[static_cast<std::size_t>(i)] = c;
    }
    // Empty clusters take the point farthest from its current center.
    std::vector<int> sizes(static_cast<std::size_t>(k), 0);
    for (int l : r.labels) ++sizes[static_cast<std::size_t>(l)];
    for (int c = 0; c < k; ++c) {
      if (sizes[static_cast<std::size_t>(c)] > 0) continue;
      Eigen::Index far = -1;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (sizes[static_cast<std::size_t>(r.labels[static_cast<std::size_t>(i)])] < 2) continue;
        if (far < 0 || dist[static_cast<std::size_t>(i)] > dist[static_cast<std::size_t>(far)]) far = i;
      }
      if (far < 0) break;
      --sizes[static_cast<std::size_t>(r.labels[static_cast<std::size_t>(far)])];
      r.labels[static_cast<std::size_t>(far)] = c;
      sizes[static_cast<std::size_t>(c)] = 1;
      dist[static_cast<std::size_t>(far)] = 0;
      changed = true;
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, x.cols());
    for (Eigen::Index i = 0; i < n; ++i) sums.row(r.labels[static_cast<std::size_t>(i)]) += x.row(i);
    for (int c = 0; c < k; ++c)
      if (sizes[static_cast<std::size_t>(c)] > 0) r.centers.row(c) = sums.row(c) / sizes[static_cast<std::size_t>(c)];
    double obj = 0;
    for (Eigen::Index i = 0; i < n; ++i) obj += (x.row(i) - r.centers.row(r.labels[static_cast<std::size_t>(i)])).squaredNorm();
    r.objective.push_back(obj);
    r.iterations = it + 1;
    if (!changed) break;
  }
  return r;
}

}  // namespace detail

struct KMeansResult {
  ClusterAssignment assignment;
  std::vector<double> objective;  // within-cluster sum of squares per iteration of the kept run
  int best_init = 0;
};

/// Lloyd's algorithm from k-means++ seeds until no label changes or
/// `max_iter` iterations. `n_init` independently seeded runs are made and the
/// one with the lowest final objective kept (ties to the earliest).
inline KMeansResult kmeans_detailed(const FeatureMatrix& m, int k, std::uint64_t seed, int max_iter = 100, int n_init = 10) {
  auto c = detail::canonicalize(m);
  detail::check_k(k, c.x.rows());
  if (n_init < 1) throw Error(ErrorKind::ConfigError, "n_init must be positive");
  detail::LloydResult best;
  int best_init = 0;
  for (int r = 0; r < n_init; ++r) {
    auto run = detail::lloyd(c.x, k, derive_seed(seed, static_cast<std::uint64_t>(r)), max_iter);
    if (r == 0 || run.objective.back() < best.objective.back()) {
      best = std::move(run);
      best_init = r;
    }
  }
  KMeansResult out{detail::make_assignment("kmeans", std::move(c.ids), best.labels, seed), std::move(best.objective), best_init};
  out.assignment.params = {{"k", std::to_string(k)}, {"max_iter", std::to_string(max_iter)}, {"n_init", std::to_string(n_init)}};
  return out;
}

inline ClusterAssignment kmeans(const FeatureMatrix& m, int k, std::uint64_t seed, int max_iter = 100, int n_init = 10) {
  return kmeans_detailed(m, k, seed, max_iter, n_init).assignment;
}

/// Traversal order of farthest-first centers starting from row `first`.
inline std::vector<Eigen::Index> farthest_first_centers(const Eigen::MatrixXd& x, int k, Eigen::Index first) {
  const Eigen::Index n = x.rows();
  std::vector<Eigen::Index> centers{first};
  std::vector<double> mind(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) mind[static_cast<std::size_t>(i)] = (x.row(i) - x.row(first)).squaredNorm();
  while (static_cast<int>(centers.size()) < k) {
    Eigen::Index best = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::find(centers.begin(), centers.end(), i) != centers.end()) continue;
      if (best < 0 || mind[static_cast<std::size_t>(i)] > mind[static_cast<std::size_t>(best)]) best = i;
    }
    centers.push_back(best);
    for (Eigen::Index i = 0; i < n; ++i)
      mind[static_cast<std::size_t>(i)] = std::min(mind[static_cast<std::size_t>(i)], (x.row(i) - x.row(best)).squaredNorm());
  }
  return centers;
}

/// Hochbaum-Shmoys farthest-first traversal from a seeded random first
/// center, then nearest-center assignment.
inline ClusterAssignment farthest_first(const FeatureMatrix& m, int k, std::uint64_t seed) {
  auto c = detail::canonicalize(m);
  detail::check_k(k, c.x.rows());
  Rng rng(seed);
  const auto first = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(c.x.rows())));
  const auto idx = farthest_first_centers(c.x, k, first);
  Eigen::MatrixXd centers(k, c.x.cols());
  for (int j = 0; j < k; ++j) centers.row(j) = c.x.row(idx[static_cast<std::size_t>(j)]);
  std::vector<int> labels(static_cast<std::size_t>(c.x.rows()));
  for (Eigen::Index i = 0; i < c.x.rows(); ++i) labels[static_cast<std::size_t>(i)] = detail::nearest(centers, c.x.row(i).transpose());
  auto a = detail::make_assignment("farthest_first", std::move(c.ids), labels, seed);
  a.params = {{"k", std::to_string(k)}};
  return a;
}

enum class Linkage { Single, Complete, Average };

inline Linkage parse_linkage(std::string_view s) {
  if (s == "single") return Linkage::Single;
  if (s == "complete") return Linkage::Complete;
  if (s == "average") return Linkage::Average;
  throw Error(ErrorKind::ConfigError, "linkage must be single, complete or average");
}

inline std::string_view to_string(Linkage l) {
  switch (l) {
    case Linkage::Single: return "single";
    case Linkage::Complete: return "complete";
    case Linkage::Average: return "average";
  }
  return "?";
}

struct Merge {
  std::string left;   // lowest document id of each merged cluster
  std::string right;
  double height = 0;
};

struct HierarchicalResult {
  ClusterAssignment assignment;
  std::vector<Merge> merges;
};

/// Agglomerative clustering on Euclidean distance with Lance-Williams
/// updates, stopping at k clusters. The closest pair wins, ties to the
/// lowest (i, j).
inline HierarchicalResult hierarchical_detailed(const FeatureMatrix& m, int k, Linkage linkage) {
  auto c = detail::canonicalize(m);
  detail::check_k(k, c.x.rows());
  const auto n = static_cast<std::size_t>(c.x.rows());
  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      d[i][j] = d[j][i] = (c.x.row(static_cast<Eigen::Index>(i)) - c.x.row(static_cast<Eigen::Index>(j))).norm();
  std::vector<int> label(n);
  std::iota(label.begin(), label.end(), 0);
  std::vector<std::size_t> size(n, 1);
  std::vector<char> active(n, 1);
  HierarchicalResult out;
  for (std::size_t clusters = n; clusters > static_cast<std::size_t>(k); --clusters) {
    std::size_t bi = 0, bj = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j)
        if (active[j] && d[i][j] < best) {
          best = d[i][j];
          bi = i;
          bj = j;
        }
    }
    out.merges.push_back(Merge{c.ids[bi], c.ids[bj], best});
    for (std::size_t t = 0; t < n; ++t) {
      if (!active[t] || t == bi || t == bj) continue;
      double nd = 0;
      switch (linkage) {
        case Linkage::Single: nd = std::min(d[bi][t], d[bj][t]); break;
        case Linkage::Complete: nd = std::max(d[bi][t], d[bj][t]); break;
        case Linkage::Average:
          nd = (static_cast<double>(size[bi]) * d[bi][t] + static_cast<double>(size[bj]) * d[bj][t]) /
               static_cast<double>(size[bi] + size[bj]);
          break;
      }
      d[bi][t] = d[t][bi] = nd;
    }
    size[bi] += size[bj];
    active[bj] = 0;
    for (auto& l : label)
      if (l == static_cast<int>(bj)) l = static_cast<int>(bi);
  }
  out.assignment = detail::make_assignment("hierarchical", std::move(c.ids), label, 0);
  out.assignment.params = {{"k", std::to_string(k)}, {"linkage", std::string(to_string(linkage))}};
  return out;
}

inline ClusterAssignment hierarchical(const FeatureMatrix& m, int k, Linkage linkage) {
  return hierarchical_detailed(m, k, linkage).assignment;
}

/// Rows projected onto the top `dims` right singular vectors (U * S), with
/// each singular vector's sign fixed so its largest-magnitude entry is
/// positive. `dims` <= 0 or >= the column count returns the input.
inline Eigen::MatrixXd truncated_svd_projection(const Eigen::MatrixXd& x, int dims) {
  if (dims <= 0 || dims >= x.cols()) return x;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::Index r = std::min<Eigen::Index>(dims, svd.singularValues().size());
  Eigen::MatrixXd v = svd.matrixV().leftCols(r);
  for (Eigen::Index j = 0; j < r; ++j) {
    Eigen::Index arg = 0;
    for (Eigen::Index i = 1; i < v.rows(); ++i)
      if (std::abs(v(i, j)) > std::abs(v(arg, j)) + 1e-12) arg = i;
    if (v(arg, j) < 0) v.col(j) *= -1.0;
  }
  return x * v;
}

struct EmOptions {
  int max_iter = 100;
  double variance_floor = 1e-6;
  int projection_dims = 32;
  double tolerance = 1e-8;
};

struct EmResult {
  ClusterAssignment assignment;
  std::vector<double> log_likelihood;  // after each E-step
  std::vector<int> reseed_iterations;  // iterations where a component was re-seeded
  Eigen::MatrixXd means;
  Eigen::MatrixXd variances;
  Eigen::VectorXd weights;
  Eigen::MatrixXd responsibilities;
};

/// Diagonal-covariance Gaussian mixture fitted by EM, hard-assigned by the
/// largest responsibility. A component whose mass underflows is re-seeded
/// at the worst-explained point.
inline EmResult em_mixture(const FeatureMatrix& m, int k, std::uint64_t seed, const EmOptions& opts = {}) {
  auto c = detail::canonicalize(m);
  detail::check_k(k, c.x.rows());
  const Eigen::MatrixXd x = truncated_svd_projection(c.x, opts.projection_dims);
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  constexpr double kLog2Pi = 1.8378770664093453;

  const Eigen::RowVectorXd mean_all = x.colwise().mean();
  Eigen::RowVectorXd var_all = (x.rowwise() - mean_all).array().square().colwise().mean();
  var_all = var_all.cwiseMax(opts.variance_floor);

  Rng rng(seed);
  EmResult r;
  r.means.resize(k, d);
  const auto seeds = detail::plus_plus_seeds(x, k, rng);
  for (int j = 0; j < k; ++j) r.means.row(j) = x.row(seeds[static_cast<std::size_t>(j)]);
  r.variances = var_all.replicate(k, 1);
  r.weights = Eigen::VectorXd::Constant(k, 1.0 / k);

  Eigen::MatrixXd logp(n, k);
  Eigen::VectorXd point_ll(n);
  auto e_step = [&] {
    for (int j = 0; j < k; ++j) {
      const double log_det = r.variances.row(j).array().log().sum();
      const double base = std::log(r.weights(j)) - 0.5 * (static_cast<double>(d) * kLog2Pi + log_det);
      for (Eigen::Index i = 0; i < n; ++i)
        logp(i, j) = base - 0.5 * ((x.row(i) - r.means.row(j)).array().square() / r.variances.row(j).array()).sum();
    }
    double ll = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mx = logp.row(i).maxCoeff();
      point_ll(i) = mx + std::log((logp.row(i).array() - mx).exp().sum());
      ll += point_ll(i);
    }
    return ll;
  };

  double prev = e_step();
  r.log_likelihood.push_back(prev);
  for (int it = 0; it < opts.max_iter; ++it) {
    Eigen::MatrixXd resp = (logp.colwise() - point_ll).array().exp();
    bool reseeded = false;
    for (int j = 0; j < k; ++j) {
      const double nk = resp.col(j).sum();
      if (nk < 1e-10 * static_cast<double>(n)) {
        Eigen::Index worst = 0;
        point_ll.minCoeff(&worst);
        r.means.row(j) = x.row(worst);
        r.variances.row(j) = var_all;
        r.weights(j) = 1.0 / static_cast<double>(n);
        reseeded = true;
        continue;
      }
      r.weights(j) = nk / static_cast<double>(n);
      r.means.row(j) = (resp.col(j).transpose() * x) / nk;
      Eigen::RowVectorXd var = (resp.col(j).transpose() * (x.rowwise() - r.means.row(j)).array().square().matrix()) / nk;
      r.variances.row(j) = var.cwiseMax(opts.variance_floor);
    }
    r.weights /= r.weights.sum();
    if (reseeded) r.reseed_iterations.push_back(it);
    const double ll = e_step();
    r.log_likelihood.push_back(ll);
    if (!reseeded && std::abs(ll - prev) <= opts.tolerance * std::max(1.0, std::abs(prev))) break;
    prev = ll;
  }
  r.responsibilities = (logp.colwise() - point_ll).array().exp();
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < k; ++j)
      if (logp(i, j) > logp(i, best)) best = j;
    labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  r.assignment = detail::make_assignment("em", std::move(c.ids), labels, seed);
  r.assignment.params = {{"k", std::to_string(k)},
                         {"max_iter", std::to_string(opts.max_iter)},
                         {"variance_floor", io::format_double(opts.variance_floor)},
                         {"projection_dims", std::to_string(opts.projection_dims)},
                         {"reseeds", std::to_string(r.reseed_iterations.size())}};
  return r;
}

/// DBSCAN on Euclidean distance (a point's neighbourhood includes itself).
/// Noise points become singleton clusters unless `drop_noise`, in which case
/// they are left out of the assignment.
inline ClusterAssignment dbscan(const FeatureMatrix& m, double eps, int min_pts, bool drop_noise = false) {
  auto c = detail::canonicalize(m);
  const Eigen::Index n = c.x.rows();
  const double eps2 = eps * eps;
  std::vector<std::vector<Eigen::Index>> nbrs(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if ((c.x.row(i) - c.x.row(j)).squaredNorm() <= eps2) nbrs[static_cast<std::size_t>(i)].push_back(j);
  auto is_core = [&](Eigen::Index i) { return static_cast<int>(nbrs[static_cast<std::size_t>(i)].size()) >= min_pts; };
  constexpr int kUnset = -2;
  constexpr int kNoise = -1;
  std::vector<int> label(static_cast<std::size_t>(n), kUnset);
  int next = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (label[static_cast<std::size_t>(i)] != kUnset) continue;
    if (!is_core(i)) {
      label[static_cast<std::size_t>(i)] = kNoise;
      continue;
    }
    const int cid = next++;
    label[static_cast<std::size_t>(i)] = cid;
    std::vector<Eigen::Index> frontier(nbrs[static_cast<std::size_t>(i)]);
    for (std::size_t f = 0; f < frontier.size(); ++f) {
      const Eigen::Index q = frontier[f];
      auto& lq = label[static_cast<std::size_t>(q)];
      if (lq == kNoise) lq = cid;  // border point
      if (lq != kUnset) continue;
      lq = cid;
      if (is_core(q))
        for (auto r : nbrs[static_cast<std::size_t>(q)]) frontier.push_back(r);
    }
  }
  std::size_t noise = 0;
  for (auto& l : label)
    if (l == kNoise) {
      ++noise;
      if (!drop_noise) l = next++;
    }
  auto a = detail::make_assignment("dbscan", std::move(c.ids), label, 0);
  a.params = {{"eps", io::format_double(eps)},
              {"min_pts", std::to_string(min_pts)},
              {"noise", std::to_string(noise)},
              {"drop_noise", drop_noise ? "true" : "false"}};
  return a;
}

/// Columns shifted to zero mean and scaled to unit (population) standard
/// deviation; constant columns are dropped.
inline FeatureMatrix standardize(const FeatureMatrix& m) {
  const Eigen::RowVectorXd mean = m.rows.colwise().mean();
  const Eigen::RowVectorXd sd = (m.rows.rowwise() - mean).array().square().colwise().mean().sqrt();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index j = 0; j < m.rows.cols(); ++j)
    if (sd(j) > 1e-12) keep.push_back(j);
  FeatureMatrix out{m.ids, Eigen::MatrixXd(m.rows.rows(), static_cast<Eigen::Index>(keep.size()))};
  for (std::size_t j = 0; j < keep.size(); ++j)
    out.rows.col(static_cast<Eigen::Index>(j)) = (m.rows.col(keep[j]).array() - mean(keep[j])) / sd(keep[j]);
  return out;
}

/// Standardize-then-k-means.
inline ClusterAssignment filtered_kmeans(const FeatureMatrix& m, int k, std::uint64_t seed, int max_iter = 100,
                                         int n_init = 10) {
  FeatureMatrix s = standardize(m);
  if (s.rows.cols() == 0) s.rows = Eigen::MatrixXd::Zero(s.rows.rows(), 1);
  auto a = kmeans(s, k, seed, max_iter, n_init);
  a.algorithm = "filtered";
  a.params["kept_columns"] = std::to_string(s.rows.cols());
  return a;
}

/// Pair co-membership agreement (Rand index) between two labelings of the
/// same documents.
inline double rand_index(const std::map<std::string, int>& a, const std::map<std::string, int>& b) {
  std::vector<std::pair<int, int>> pairs;
  for (const auto& [doc, la] : a) {
    auto it = b.find(doc);
    if (it != b.end()) pairs.emplace_back(la, it->second);
  }
  if (pairs.size() < 2) return 1.0;
  std::size_t agree = 0, total = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i)
    for (std::size_t j = i + 1; j < pairs.size(); ++j) {
      ++total;
      agree += (pairs[i].first == pairs[j].first) == (pairs[i].second == pairs[j].second);
    }
  return static_cast<double>(agree) / static_cast<double>(total);
}

}  // namespace hyperlens
