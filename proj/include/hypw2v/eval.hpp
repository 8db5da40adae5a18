#pragma once

// Intrinsic evaluation: hypernymy (graded is-a correlation), cross-lingual analogy (3CosAdd),
// closest children, and the norm / frequency specificity statistic.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hypw2v/corpus.hpp"
#include "hypw2v/embedding.hpp"
#include "hypw2v/error.hpp"
#include "hypw2v/geometry.hpp"

namespace hypw2v::eval {

/// Default weight of the norm difference in is_a_score.
inline constexpr double kDefaultAlpha = 1000.0;

struct HyperLexRecord {
  std::string word_u;
  std::string word_v;
  double gold_score = 0.0;
};

struct AnalogyQuery {
  std::string w1, w2, w3, w4_gold;
};

struct EvalReport {
  std::string task;
  double metric = 0.0;
  std::size_t evaluated = 0;
  std::size_t skipped_oov = 0;
  std::optional<double> alpha;

  std::string to_text() const {
    std::ostringstream out;
    out << task << ": " << metric << " (evaluated " << evaluated << ", skipped " << skipped_oov << " out-of-vocabulary";
    if (alpha) out << ", alpha " << *alpha;
    out << ")";
    return out.str();
  }

  /// Single-line "key=value" record.
  std::string to_record() const {
    std::ostringstream out;
    out.precision(17);
    out << "task=" << task << " metric=" << metric << " evaluated=" << evaluated << " skipped_oov=" << skipped_oov;
    if (alpha) out << " alpha=" << *alpha;
    return out.str();
  }
};

/// Ranks 1..n with ties replaced by their average rank.
inline std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

/// Pearson correlation of tie-averaged ranks.
inline double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw EvalError("spearman: sequences differ in length");
  if (xs.size() < 2) throw EvalError("spearman: need at least two observations");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) throw EvalError("spearman: non-finite value");
  }
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  const double n = static_cast<double>(xs.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double a = rx[i] - mean;
    const double b = ry[i] - mean;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  if (sxx == 0.0 || syy == 0.0) throw EvalError("spearman: undefined correlation (constant ranks)");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

namespace detail {

inline void require_poincare(const EmbeddingView& view, const char* op) {
  if (view.geometry != Geometry::poincare) {
    throw EvalError(std::string(op) + " needs poincare embeddings; norms of euclidean vectors carry no specificity");
  }
}

inline WordId require_word(const Lexicon& lexicon, const std::string& word) {
  const auto id = lexicon.find(word);
  if (!id) throw EvalError("'" + word + "' is out of vocabulary");
  return *id;
}

}  // namespace detail

/// is-a(u, v) = -(1 + alpha (||v|| - ||u||)) d(u, v): how much u is a kind of v.
inline double is_a_score(std::span<const double> u, std::span<const double> v, double alpha) {
  const double d = geometry::poincare_distance(u, v);
  return -(1.0 + alpha * (geometry::norm(v) - geometry::norm(u))) * d;
}

inline EvalReport eval_hyperlex(const std::vector<HyperLexRecord>& records, const EmbeddingView& view,
                                const Lexicon& lexicon, double alpha, std::string task = "hyperlex") {
  detail::require_poincare(view, "hypernymy evaluation");
  EvalReport report{std::move(task), 0.0, 0, 0, alpha};
  std::vector<double> gold, predicted;
  for (const auto& r : records) {
    const auto u = lexicon.find(r.word_u);
    const auto v = lexicon.find(r.word_v);
    if (!u || !v) {
      ++report.skipped_oov;
      continue;
    }
    gold.push_back(r.gold_score);
    predicted.push_back(is_a_score(view.row(*u), view.row(*v), alpha));
  }
  report.evaluated = gold.size();
  if (report.evaluated < 2) {
    throw EvalError("hypernymy evaluation: " + std::to_string(report.evaluated) + " evaluable records (" +
                    std::to_string(report.skipped_oov) + " skipped as out of vocabulary), need at least 2");
  }
  report.metric = spearman(gold, predicted);
  return report;
}

inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  const double na = geometry::norm(a);
  const double nb = geometry::norm(b);
  if (na == 0.0 || nb == 0.0) throw DomainError("cosine similarity of a zero vector");
  return std::clamp(geometry::dot(a, b) / (na * nb), -1.0, 1.0);
}

/// 3CosAdd over a fixed embedding table. Row norms are cached; rows of norm zero never win.
class AnalogySolver {
 public:
  AnalogySolver(const EmbeddingView& view, const Lexicon& lexicon) : view_(view), lexicon_(lexicon) {
    norms_.resize(view.size());
    for (WordId id = 0; id < view.size(); ++id) norms_[id] = geometry::norm(view.row(id));
  }

  /// argmax_x cos(x, v(w2) - v(w1) + v(w3)) excluding the three query words; ties go to the lower
  /// id. Returns nullopt when a query word is out of vocabulary or no candidate is scorable.
  std::optional<WordId> predict(const std::string& w1, const std::string& w2, const std::string& w3) const {
    const auto a = lexicon_.find(w1);
    const auto b = lexicon_.find(w2);
    const auto c = lexicon_.find(w3);
    if (!a || !b || !c) return std::nullopt;
    std::vector<double> query(view_.dim);
    const auto ra = view_.row(*a), rb = view_.row(*b), rc = view_.row(*c);
    for (std::size_t i = 0; i < view_.dim; ++i) query[i] = rb[i] - ra[i] + rc[i];
    const double qn = geometry::norm(query);
    if (qn == 0.0) return std::nullopt;
    std::optional<WordId> best;
    double best_sim = -2.0;
    for (WordId id = 0; id < view_.size(); ++id) {
      if (id == *a || id == *b || id == *c || norms_[id] == 0.0) continue;
      const double sim = geometry::dot(view_.row(id), query) / (norms_[id] * qn);
      if (sim > best_sim) {
        best_sim = sim;
        best = id;
      }
    }
    return best;
  }

 private:
  EmbeddingView view_;
  const Lexicon& lexicon_;
  std::vector<double> norms_;
};

/// Predicted w4 for "w1 is to w2 as w3 is to ?". Throws EvalError when a query word is OOV.
inline std::string analogy_predict(const std::string& w1, const std::string& w2, const std::string& w3,
                                   const EmbeddingView& view, const Lexicon& lexicon) {
  for (const auto* w : {&w1, &w2, &w3}) detail::require_word(lexicon, *w);
  const auto id = AnalogySolver(view, lexicon).predict(w1, w2, w3);
  if (!id) throw EvalError("analogy query has no scorable candidate");
  return lexicon.word(*id);
}

/// Accuracy over queries whose four words are all in the vocabulary; the others are skipped.
inline EvalReport eval_analogy(const std::vector<AnalogyQuery>& queries, const EmbeddingView& view,
                               const Lexicon& lexicon, std::string task = "analogy") {
  EvalReport report{std::move(task), 0.0, 0, 0, std::nullopt};
  const AnalogySolver solver(view, lexicon);
  std::size_t correct = 0;
  for (const auto& q : queries) {
    if (!lexicon.contains(q.w1) || !lexicon.contains(q.w2) || !lexicon.contains(q.w3) ||
        !lexicon.contains(q.w4_gold)) {
      ++report.skipped_oov;
      continue;
    }
    ++report.evaluated;
    const auto id = solver.predict(q.w1, q.w2, q.w3);
    if (id && lexicon.word(*id) == q.w4_gold) ++correct;
  }
  if (report.evaluated == 0) {
    throw EvalError("analogy evaluation: no evaluable queries (" + std::to_string(report.skipped_oov) +
                    " skipped as out of vocabulary)");
  }
  report.metric = static_cast<double>(correct) / static_cast<double>(report.evaluated);
  return report;
}

struct Neighbor {
  WordId id;
  double distance;
};

/// The k nearest words to `word` by poincare distance (or by cosine distance 1 - cos), query
/// excluded, ordered by increasing distance then id.
inline std::vector<Neighbor> nearest_neighbors(const std::string& word, std::size_t k, const EmbeddingView& view,
                                               const Lexicon& lexicon, bool use_cosine) {
  const WordId q = detail::require_word(lexicon, word);
  if (!use_cosine) detail::require_poincare(view, "poincare nearest neighbors");
  std::vector<Neighbor> all;
  all.reserve(view.size());
  for (WordId id = 0; id < view.size(); ++id) {
    if (id == q) continue;
    double d;
    if (use_cosine) {
      const double na = geometry::norm(view.row(q)), nb = geometry::norm(view.row(id));
      if (na == 0.0 || nb == 0.0) continue;
      d = 1.0 - geometry::dot(view.row(q), view.row(id)) / (na * nb);
    } else {
      d = geometry::poincare_distance(view.row(q), view.row(id));
    }
    all.push_back({id, d});
  }
  const auto less = [](const Neighbor& a, const Neighbor& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
  };
  const std::size_t n = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end(), less);
  all.resize(n);
  return all;
}

/// Size of the nearest-neighbor pool searched for children.
inline std::size_t children_search_pool(std::size_t k) { return std::max<std::size_t>(5 * k, 100); }

/// Among the nearest neighbors of `word`, those with a strictly larger norm (more specific),
/// at most k, by increasing distance.
inline std::vector<Neighbor> closest_children(const std::string& word, std::size_t k, const EmbeddingView& view,
                                              const Lexicon& lexicon) {
  detail::require_poincare(view, "closest children");
  const WordId q = detail::require_word(lexicon, word);
  const double qn = geometry::norm(view.row(q));
  auto pool = nearest_neighbors(word, children_search_pool(k), view, lexicon, false);
  std::vector<Neighbor> out;
  for (const auto& n : pool) {
    if (out.size() == k) break;
    if (geometry::norm(view.row(n.id)) > qn) out.push_back(n);
  }
  return out;
}

/// Spearman correlation between 1 / count and the embedding norm over the whole vocabulary.
inline double norm_frequency_correlation(const EmbeddingView& view, const Vocabulary& vocab) {
  if (vocab.size() < 2) throw EvalError("norm/frequency correlation needs at least two words");
  if (view.size() != vocab.size()) throw EvalError("embedding table and vocabulary differ in size");
  std::vector<double> inv_freq(vocab.size()), norms(vocab.size());
  for (WordId id = 0; id < vocab.size(); ++id) {
    inv_freq[id] = 1.0 / static_cast<double>(vocab.count(id));
    norms[id] = geometry::norm(view.row(id));
  }
  return spearman(inv_freq, norms);
}

}  // namespace hypw2v::eval
