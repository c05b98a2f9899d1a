#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hyperlens/error.hpp"
#include "hyperlens/io.hpp"

namespace hyperlens {

using StopWords = std::set<std::string, std::less<>>;

// Standard English function words; data/stopwords.txt carries the same list.
inline const StopWords& default_stopwords() {
  static const StopWords words = {
      "a",       "about",   "above",   "after",  "again",   "against", "all",     "am",     "an",    "and",
      "any",     "are",     "as",      "at",     "be",      "because", "been",    "before", "being", "below",
      "between", "both",    "but",     "by",     "can",     "could",   "did",     "do",     "does",  "doing",
      "down",    "during",  "each",    "few",    "for",     "from",    "further", "had",    "has",   "have",
      "having",  "he",      "her",     "here",   "hers",    "herself", "him",     "himself", "his",  "how",
      "i",       "if",      "in",      "into",   "is",      "it",      "its",     "itself", "just",  "me",
      "more",    "most",    "my",      "myself", "no",      "nor",     "not",     "now",    "of",    "off",
      "on",      "once",    "only",    "or",     "other",   "our",     "ours",    "ourselves", "out", "over",
      "own",     "same",    "she",     "should", "so",      "some",    "such",    "than",   "that",  "the",
      "their",   "theirs",  "them",    "themselves", "then", "there",  "these",   "they",   "this",  "those",
      "through", "to",      "too",     "under",  "until",   "up",      "very",    "was",    "we",    "were",
      "what",    "when",    "where",   "which",  "while",   "who",     "whom",    "why",    "will",  "with",
      "would",   "you",     "your",    "yours",  "yourself", "yourselves"};
  return words;
}

inline StopWords parse_stopwords(std::string_view text) {
  StopWords out;
  for (auto line : io::lines(text)) {
    auto w = io::trim(line);
    if (w.empty() || w.front() == '#') continue;
    std::string lower(w);
    for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    out.insert(std::move(lower));
  }
  return out;
}

/// Case-folds, splits on anything that is not a letter or digit, and drops
/// stop-words and single-character tokens. Bytes >= 0x80 are kept as word
/// characters so UTF-8 words survive intact.
inline std::vector<std::string> tokenize(std::string_view title, const StopWords& stopwords = default_stopwords()) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (cur.size() >= 2 && !stopwords.count(cur)) out.push_back(cur);
    cur.clear();
  };
  for (char ch : title) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c >= 0x80)
      cur.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    else
      flush();
  }
  flush();
  return out;
}

struct TitleDoc {
  std::string doc_id;
  std::string title;
  std::vector<std::string> terms;
};

inline TitleDoc make_title_doc(std::string doc_id, std::string title, const StopWords& stopwords = default_stopwords()) {
  TitleDoc d{std::move(doc_id), std::move(title), {}};
  d.terms = tokenize(d.title, stopwords);
  return d;
}

/// Term list (sorted) with document frequencies over `n_docs` documents.
struct Dictionary {
  std::vector<std::string> terms;
  std::vector<std::size_t> df;
  std::size_t n_docs = 0;
  std::unordered_map<std::string, std::size_t> index;

  std::size_t size() const { return terms.size(); }

  const std::size_t* find(std::string_view term) const {
    auto it = index.find(std::string(term));
    return it == index.end() ? nullptr : &it->second;
  }
};

inline Dictionary build_dictionary(const std::vector<TitleDoc>& docs) {
  std::map<std::string, std::size_t> counts;
  for (const auto& d : docs) {
    std::set<std::string_view> distinct(d.terms.begin(), d.terms.end());
    for (auto t : distinct) ++counts[std::string(t)];
  }
  Dictionary dict;
  dict.n_docs = docs.size();
  for (auto& [term, df] : counts) {
    dict.index.emplace(term, dict.terms.size());
    dict.terms.push_back(term);
    dict.df.push_back(df);
  }
  return dict;
}

/// Inverse document frequency with the natural log: ln(N / df).
inline double idf(std::string_view term, const Dictionary& dict) {
  const std::size_t* i = dict.find(term);
  if (!i) throw Error(ErrorKind::UnknownTerm, "term '" + std::string(term) + "' is not in the dictionary");
  return std::log(static_cast<double>(dict.n_docs) / static_cast<double>(dict.df[*i]));
}

enum class Weighting { Idf, TfIdf };

inline std::string_view to_string(Weighting w) { return w == Weighting::Idf ? "idf" : "tfidf"; }

inline Weighting parse_weighting(std::string_view s) {
  if (s == "idf") return Weighting::Idf;
  if (s == "tfidf" || s == "tf-idf") return Weighting::TfIdf;
  throw Error(ErrorKind::ConfigError, "weighting must be idf or tfidf, got '" + std::string(s) + "'");
}

/// Sparse document-by-term matrix. Rows hold (term index, weight) pairs in
/// ascending term order and never store zeros.
struct TermDocMatrix {
  std::vector<std::string> doc_ids;
  std::vector<std::vector<std::pair<std::size_t, double>>> rows;
  std::size_t n_terms = 0;
  Weighting weighting = Weighting::TfIdf;
  bool row_normalized = false;

  std::size_t nonzeros() const {
    std::size_t n = 0;
    for (const auto& r : rows) n += r.size();
    return n;
  }

  std::vector<double> dense_row(std::size_t i) const {
    std::vector<double> out(n_terms, 0.0);
    for (auto [t, w] : rows[i]) out[t] = w;
    return out;
  }
};

/// Cell (d, t) = count of t in d's title (1 in pure-IDF mode) times idf(t);
/// rows optionally scaled to unit L2 norm. Zero rows stay zero.
inline TermDocMatrix build_matrix(const std::vector<TitleDoc>& docs, const Dictionary& dict, bool normalize,
                                  Weighting weighting = Weighting::TfIdf) {
  if (dict.size() == 0) throw Error(ErrorKind::EmptyDictionary, "no terms to index");
  TermDocMatrix m;
  m.n_terms = dict.size();
  m.weighting = weighting;
  m.row_normalized = normalize;
  std::vector<double> idfs(dict.size());
  for (std::size_t t = 0; t < dict.size(); ++t)
    idfs[t] = std::log(static_cast<double>(dict.n_docs) / static_cast<double>(dict.df[t]));
  for (const auto& d : docs) {
    std::map<std::size_t, std::size_t> tf;
    for (const auto& term : d.terms) {
      const std::size_t* i = dict.find(term);
      if (!i) throw Error(ErrorKind::UnknownTerm, "term '" + term + "' of " + d.doc_id + " is not in the dictionary");
      ++tf[*i];
    }
    std::vector<std::pair<std::size_t, double>> row;
    double norm2 = 0.0;
    for (auto [t, count] : tf) {
      const double w = (weighting == Weighting::TfIdf ? static_cast<double>(count) : 1.0) * idfs[t];
      if (w == 0.0) continue;
      row.emplace_back(t, w);
      norm2 += w * w;
    }
    if (normalize && norm2 > 0.0) {
      const double inv = 1.0 / std::sqrt(norm2);
      for (auto& cell : row) cell.second *= inv;
    }
    m.doc_ids.push_back(d.doc_id);
    m.rows.push_back(std::move(row));
  }
  return m;
}

inline double cosine_similarity(const TermDocMatrix& m, std::size_t a, std::size_t b) {
  double dot = 0, na = 0, nb = 0;
  const auto& ra = m.rows[a];
  const auto& rb = m.rows[b];
  for (auto [t, w] : ra) na += w * w;
  for (auto [t, w] : rb) nb += w * w;
  std::size_t i = 0, j = 0;
  while (i < ra.size() && j < rb.size()) {
    if (ra[i].first == rb[j].first) {
      dot += ra[i].second * rb[j].second;
      ++i;
      ++j;
    } else if (ra[i].first < rb[j].first) {
      ++i;
    } else {
      ++j;
    }
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / std::sqrt(na * nb);
}

inline std::string matrix_to_tsv(const TermDocMatrix& m, const Dictionary& dict) {
  std::string out;
  for (std::size_t i = 0; i < m.rows.size(); ++i)
    for (auto [t, w] : m.rows[i]) out += m.doc_ids[i] + '\t' + dict.terms[t] + '\t' + io::format_double(w) + '\n';
  return out;
}

inline std::string dictionary_to_tsv(const Dictionary& dict) {
  std::string out;
  for (std::size_t t = 0; t < dict.size(); ++t) out += dict.terms[t] + '\t' + std::to_string(dict.df[t]) + '\n';
  return out;
}

// Reads a triplet export back. Documents listed in `doc_order` but absent from
// the file (all-zero rows) are kept as empty rows.
inline TermDocMatrix matrix_from_tsv(std::string_view text, const Dictionary& dict,
                                     const std::vector<std::string>& doc_order) {
  TermDocMatrix m;
  m.n_terms = dict.size();
  m.doc_ids = doc_order;
  m.rows.resize(doc_order.size());
  std::unordered_map<std::string, std::size_t> row_of;
  for (std::size_t i = 0; i < doc_order.size(); ++i) row_of.emplace(doc_order[i], i);
  std::size_t n = 0;
  for (auto line : io::lines(text)) {
    ++n;
    if (line.empty()) continue;
    auto f = io::split(line, '\t');
    double w = 0;
    const std::size_t* t = f.size() == 3 ? dict.find(f[1]) : nullptr;
    auto r = f.size() == 3 ? row_of.find(std::string(f[0])) : row_of.end();
    if (!t || r == row_of.end() || !io::parse_double(f[2], w))
      throw Error(ErrorKind::BadInput, "matrix line " + std::to_string(n) + " is not doc_id<TAB>term<TAB>weight");
    m.rows[r->second].emplace_back(*t, w);
  }
  for (auto& row : m.rows) std::sort(row.begin(), row.end());
  return m;
}

inline Dictionary dictionary_from_tsv(std::string_view text, std::size_t n_docs) {
  Dictionary dict;
  dict.n_docs = n_docs;
  std::size_t n = 0;
  for (auto line : io::lines(text)) {
    ++n;
    if (line.empty()) continue;
    auto f = io::split(line, '\t');
    std::int64_t df = 0;
    if (f.size() != 2 || !io::parse_int(f[1], df) || df < 1)
      throw Error(ErrorKind::BadInput, "dictionary line " + std::to_string(n) + " is not term<TAB>df");
    dict.index.emplace(std::string(f[0]), dict.terms.size());
    dict.terms.emplace_back(f[0]);
    dict.df.push_back(static_cast<std::size_t>(df));
  }
  return dict;
}

}  // namespace hyperlens
