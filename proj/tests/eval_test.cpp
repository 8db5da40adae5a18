#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "hypw2v/eval.hpp"
#include "test_support.hpp"

namespace {

using namespace hypw2v;
using namespace hypw2v::eval;
using testutil::random_ball_point;
using testutil::Rng;

// Rank of each element by counting: 1 + #smaller + (#equal - 1) / 2.
std::vector<long double> counting_ranks(const std::vector<double>& xs) {
  std::vector<long double> r(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    long double smaller = 0, equal = 0;
    for (double x : xs) {
      smaller += x < xs[i];
      equal += x == xs[i];
    }
    r[i] = 1 + smaller + (equal - 1) / 2;
  }
  return r;
}

double spearman_oracle(const std::vector<double>& xs, const std::vector<double>& ys) {
  const auto rx = counting_ranks(xs), ry = counting_ranks(ys);
  const long double n = xs.size();
  const long double mx = std::accumulate(rx.begin(), rx.end(), 0.0L) / n;
  const long double my = std::accumulate(ry.begin(), ry.end(), 0.0L) / n;
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

struct Table {
  Lexicon lexicon;
  std::vector<double> data;
  std::size_t dim;
  Geometry geometry;
  EmbeddingView view() const { return {geometry, dim, data}; }
};

Table random_table(Rng& rng, std::size_t v, std::size_t dim, Geometry g = Geometry::poincare) {
  Table t{{}, {}, dim, g};
  std::vector<std::string> words;
  for (std::size_t i = 0; i < v; ++i) {
    words.push_back("w" + std::to_string(i));
    const auto row = random_ball_point(rng, dim, 0.95);
    t.data.insert(t.data.end(), row.begin(), row.end());
  }
  t.lexicon = Lexicon(words);
  return t;
}

Table table_of(const std::vector<std::string>& words, const std::vector<std::vector<double>>& rows,
               Geometry g = Geometry::poincare) {
  Table t{Lexicon(words), {}, rows.at(0).size(), g};
  for (const auto& r : rows) t.data.insert(t.data.end(), r.begin(), r.end());
  return t;
}

TEST(Spearman, Examples) {
  const std::vector xs{1.0, 2.0, 3.0, 4.0};
  EXPECT_DOUBLE_EQ(spearman(xs, xs), 1.0);
  EXPECT_DOUBLE_EQ(spearman(xs, std::vector{4.0, 3.0, 2.0, 1.0}), -1.0);
  EXPECT_NEAR(spearman(xs, std::vector{1.0, 3.0, 2.0, 4.0}), 0.8, 1e-15);
}

TEST(Spearman, AverageRanksForTies) {
  EXPECT_EQ(average_ranks(std::vector{10.0, 20.0, 10.0, 5.0}), (std::vector{2.5, 4.0, 2.5, 1.0}));
}

TEST(Spearman, Errors) {
  EXPECT_THROW(spearman(std::vector{1.0, 2.0}, std::vector{1.0}), EvalError);
  EXPECT_THROW(spearman(std::vector{1.0}, std::vector{1.0}), EvalError);
  EXPECT_THROW(spearman(std::vector{1.0, 1.0, 1.0}, std::vector{1.0, 2.0, 3.0}), EvalError);
  EXPECT_THROW(spearman(std::vector{1.0, std::nan("")}, std::vector{1.0, 2.0}), EvalError);
}

TEST(Spearman, MatchesCountingOracleAndIsSymmetric) {
  Rng rng(1);
  std::uniform_int_distribution<int> small(0, 6);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng() % 60;
    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
      // Coarse values produce ties.
      xs[i] = trial % 2 ? small(rng) : std::uniform_real_distribution<double>()(rng);
      ys[i] = small(rng);
    }
    if (std::adjacent_find(xs.begin(), xs.end(), std::not_equal_to<>()) == xs.end() ||
        std::adjacent_find(ys.begin(), ys.end(), std::not_equal_to<>()) == ys.end()) {
      continue;
    }
    const double rho = spearman(xs, ys);
    EXPECT_NEAR(rho, spearman_oracle(xs, ys), 1e-12);
    EXPECT_EQ(rho, spearman(ys, xs));
  }
}

TEST(IsAScore, Examples) {
  Rng rng(2);
  const auto u = random_ball_point(rng, 3), v = random_ball_point(rng, 3);
  EXPECT_EQ(is_a_score(u, v, 0.0), -geometry::poincare_distance(u, v));
  EXPECT_EQ(is_a_score(u, u, 1000.0), -0.0);

  const std::vector a{0.2, 0.0}, b{0.0, 0.5};
  const double d = geometry::poincare_distance(a, b);
  EXPECT_NEAR(is_a_score(a, b, 1.0), -1.3 * d, 1e-15);
}

TEST(IsAScore, SubstitutionExampleWithUnitDistance) {
  // u at norm 0.2 on the x axis; v at norm 0.5 placed so that d(u, v) = 1.
  const double nu = 0.2, nv = 0.5;
  const double target = std::cosh(1.0);
  // cosh d = 1 + 2 |u - v|^2 / ((1 - nu^2)(1 - nv^2)), |u - v|^2 = nu^2 + nv^2 - 2 nu nv cos(theta)
  const double sq = (target - 1.0) * (1 - nu * nu) * (1 - nv * nv) / 2.0;
  const double cos_theta = (nu * nu + nv * nv - sq) / (2.0 * nu * nv);
  const std::vector u{nu, 0.0}, v{nv * cos_theta, nv * std::sqrt(1.0 - cos_theta * cos_theta)};
  ASSERT_NEAR(geometry::poincare_distance(u, v), 1.0, 1e-14);
  EXPECT_NEAR(is_a_score(u, v, 1.0), -1.3, 1e-13);
}

TEST(IsAScore, SpecificToGeneralScoresHigher) {
  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    auto u = random_ball_point(rng, 4), v = random_ball_point(rng, 4);
    if (geometry::norm(u) < geometry::norm(v)) std::swap(u, v);
    if (geometry::norm(u) == geometry::norm(v)) continue;
    for (double alpha : {0.5, 1.0, 1000.0}) EXPECT_GT(is_a_score(u, v, alpha), is_a_score(v, u, alpha));
  }
}

TEST(EvalHyperlex, PerfectOrderGivesOne) {
  // general -> specific chain: w0 (norm 0.1) ... w3 (norm 0.7) on one ray.
  const auto t = table_of({"w0", "w1", "w2", "w3"}, {{0.1, 0.0}, {0.3, 0.0}, {0.5, 0.0}, {0.7, 0.0}});
  const std::vector<HyperLexRecord> records{{"w3", "w0", 9.0}, {"w2", "w0", 8.0}, {"w1", "w0", 7.0},
                                            {"w0", "w1", 2.0}, {"w0", "w3", 1.0}};
  const auto r = eval_hyperlex(records, t.view(), t.lexicon, 1000.0);
  EXPECT_DOUBLE_EQ(r.metric, 1.0);
  EXPECT_EQ(r.evaluated, 5u);
  EXPECT_EQ(r.skipped_oov, 0u);
  EXPECT_EQ(r.alpha, 1000.0);
}

TEST(EvalHyperlex, AllOutOfVocabularyIsAnError) {
  const auto t = table_of({"w0", "w1"}, {{0.1, 0.0}, {0.3, 0.0}});
  const std::vector<HyperLexRecord> records{{"chemistry", "science", 6.0}, {"chemistry", "knife", 0.5}};
  try {
    eval_hyperlex(records, t.view(), t.lexicon, 1000.0);
    FAIL();
  } catch (const EvalError& e) {
    EXPECT_NE(std::string(e.what()).find("2 skipped"), std::string::npos) << e.what();
  }
}

TEST(EvalHyperlex, TwoRecordsWithHandBuiltStore) {
  // science general (small norm), chemistry more specific and close to it, knife far away.
  const auto t = table_of({"science", "chemistry", "knife"}, {{0.1, 0.0}, {0.3, 0.05}, {-0.2, 0.7}});
  const std::vector<HyperLexRecord> records{{"chemistry", "science", 6.0}, {"chemistry", "knife", 0.5}};
  const auto r = eval_hyperlex(records, t.view(), t.lexicon, 1000.0);
  EXPECT_EQ(r.evaluated, 2u);
  EXPECT_DOUBLE_EQ(r.metric, 1.0);
}

TEST(EvalHyperlex, MatchesOracleAndIgnoresRecordOrder) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto t = random_table(rng, 30, 5);
    std::vector<HyperLexRecord> records;
    std::vector<double> gold, predicted;
    for (int i = 0; i < 20; ++i) {
      const auto a = rng() % 35, b = rng() % 35;  // ids >= 30 are out of vocabulary
      const double score = std::uniform_real_distribution<double>(0, 10)(rng);
      records.push_back({"w" + std::to_string(a), "w" + std::to_string(b), score});
      if (a < 30 && b < 30) {
        gold.push_back(score);
        const auto u = t.view().row(static_cast<WordId>(a)), v = t.view().row(static_cast<WordId>(b));
        const double d = std::acosh(1.0 + 2.0 * geometry::squared_distance(u, v) /
                                              ((1.0 - geometry::squared_norm(u)) * (1.0 - geometry::squared_norm(v))));
        predicted.push_back(-(1.0 + 1000.0 * (geometry::norm(v) - geometry::norm(u))) * d);
      }
    }
    if (gold.size() < 2) continue;
    const auto r = eval_hyperlex(records, t.view(), t.lexicon, 1000.0);
    EXPECT_EQ(r.evaluated + r.skipped_oov, records.size());
    EXPECT_NEAR(r.metric, spearman_oracle(gold, predicted), 1e-12);
    std::reverse(records.begin(), records.end());
    EXPECT_EQ(eval_hyperlex(records, t.view(), t.lexicon, 1000.0).metric, r.metric);
  }
}

TEST(EvalHyperlex, RejectsEuclideanEmbeddings) {
  const auto t = table_of({"a", "b", "c"}, {{0.1, 0.0}, {0.3, 0.0}, {0.0, 0.2}}, Geometry::euclidean);
  EXPECT_THROW(eval_hyperlex({{"a", "b", 1.0}, {"b", "c", 2.0}}, t.view(), t.lexicon, 1.0), EvalError);
  EXPECT_THROW(closest_children("a", 2, t.view(), t.lexicon), EvalError);
}

TEST(CosineSimilarity, Examples) {
  EXPECT_DOUBLE_EQ(cosine_similarity(std::vector{0.3, -0.2}, std::vector{0.3, -0.2}), 1.0);
  EXPECT_EQ(cosine_similarity(std::vector{1.0, 0.0}, std::vector{0.0, 2.0}), 0.0);
  EXPECT_NEAR(cosine_similarity(std::vector{1.0, 0.0}, std::vector{1.0, 1.0}), 0.707107, 1e-6);
  EXPECT_THROW(cosine_similarity(std::vector{0.0, 0.0}, std::vector{1.0, 1.0}), DomainError);
}

// Exhaustive 3CosAdd: normalize everything, score every candidate, sort by (-score, id).
std::string analogy_oracle(const Table& t, WordId a, WordId b, WordId c) {
  const auto view = t.view();
  std::vector<long double> q(t.dim);
  for (std::size_t i = 0; i < t.dim; ++i) q[i] = view.row(b)[i] - view.row(a)[i] + view.row(c)[i];
  std::vector<std::pair<long double, WordId>> scored;
  for (WordId id = 0; id < view.size(); ++id) {
    if (id == a || id == b || id == c) continue;
    long double dot = 0, nx = 0, nq = 0;
    for (std::size_t i = 0; i < t.dim; ++i) {
      dot += view.row(id)[i] * q[i];
      nx += view.row(id)[i] * view.row(id)[i];
      nq += q[i] * q[i];
    }
    scored.emplace_back(-dot / std::sqrt(nx * nq), id);
  }
  std::sort(scored.begin(), scored.end());
  return t.lexicon.word(scored.front().second);
}

TEST(AnalogyPredict, ExactParallelogram) {
  const auto t = table_of({"w1", "w2", "w3", "w4", "other"},
                          {{0.1, 0.1}, {0.4, 0.1}, {0.1, 0.5}, {0.4, 0.5}, {-0.3, 0.2}}, Geometry::euclidean);
  EXPECT_EQ(analogy_predict("w1", "w2", "w3", t.view(), t.lexicon), "w4");
}

TEST(AnalogyPredict, OnlyRemainingCandidate) {
  for (Geometry g : {Geometry::euclidean, Geometry::poincare}) {
    const auto t = table_of({"w1", "w2", "w3", "x"}, {{0.1, 0.1}, {0.4, 0.1}, {0.1, 0.5}, {-0.5, -0.5}}, g);
    EXPECT_EQ(analogy_predict("w1", "w2", "w3", t.view(), t.lexicon), "x");
  }
}

TEST(AnalogyPredict, OutOfVocabularyQueryWord) {
  const auto t = table_of({"w1", "w2", "w3", "x"}, {{0.1, 0.1}, {0.4, 0.1}, {0.1, 0.5}, {-0.5, -0.5}});
  EXPECT_THROW(analogy_predict("w1", "w2", "nope", t.view(), t.lexicon), EvalError);
}

TEST(AnalogyPredict, MatchesExhaustiveOracle) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto t = random_table(rng, 50, 2 + trial % 9);
    for (int q = 0; q < 20; ++q) {
      const auto a = static_cast<WordId>(rng() % 50), b = static_cast<WordId>(rng() % 50),
                 c = static_cast<WordId>(rng() % 50);
      const auto predicted = analogy_predict(t.lexicon.word(a), t.lexicon.word(b), t.lexicon.word(c), t.view(), t.lexicon);
      EXPECT_EQ(predicted, analogy_oracle(t, a, b, c));
      EXPECT_NE(predicted, t.lexicon.word(a));
      EXPECT_NE(predicted, t.lexicon.word(b));
      EXPECT_NE(predicted, t.lexicon.word(c));
    }
  }
}

TEST(EvalAnalogy, AllExact) {
  const auto t = table_of({"w1", "w2", "w3", "w4", "other"},
                          {{0.1, 0.1}, {0.4, 0.1}, {0.1, 0.5}, {0.4, 0.5}, {-0.3, 0.2}}, Geometry::euclidean);
  const auto r = eval_analogy({{"w1", "w2", "w3", "w4"}, {"w1", "w3", "w2", "w4"}}, t.view(), t.lexicon);
  EXPECT_EQ(r.metric, 1.0);
  EXPECT_EQ(r.evaluated, 2u);
  EXPECT_FALSE(r.alpha);
}

TEST(EvalAnalogy, AllOutOfVocabularyIsAnError) {
  const auto t = table_of({"w1", "w2", "w3", "w4"}, {{0.1, 0.1}, {0.4, 0.1}, {0.1, 0.5}, {0.4, 0.5}});
  EXPECT_THROW(eval_analogy({{"prince", "princess", "prinz", "prinzessin"}}, t.view(), t.lexicon), EvalError);
  // OOV gold word also skips the query.
  EXPECT_THROW(eval_analogy({{"w1", "w2", "w3", "unknown"}}, t.view(), t.lexicon), EvalError);
}

TEST(EvalAnalogy, MatchesOracleOnMixedQueries) {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto t = random_table(rng, 40, 6, trial % 2 ? Geometry::poincare : Geometry::euclidean);
    std::vector<AnalogyQuery> queries;
    std::size_t correct = 0, evaluated = 0;
    for (int q = 0; q < 30; ++q) {
      WordId ids[4];
      for (auto& id : ids) id = static_cast<WordId>(rng() % 44);
      const auto name = [](WordId id) { return "w" + std::to_string(id); };
      const bool oov = std::any_of(std::begin(ids), std::end(ids), [](WordId id) { return id >= 40; });
      if (!oov) {
        // Half the queries take the oracle's answer as gold so both outcomes occur.
        if (q % 2 == 0) ids[3] = *t.lexicon.find(analogy_oracle(t, ids[0], ids[1], ids[2]));
        ++evaluated;
        correct += analogy_oracle(t, ids[0], ids[1], ids[2]) == name(ids[3]);
      }
      queries.push_back({name(ids[0]), name(ids[1]), name(ids[2]), name(ids[3])});
    }
    const auto r = eval_analogy(queries, t.view(), t.lexicon);
    EXPECT_EQ(r.evaluated, evaluated);
    EXPECT_EQ(r.evaluated + r.skipped_oov, queries.size());
    EXPECT_EQ(r.metric, static_cast<double>(correct) / static_cast<double>(evaluated));
  }
}

TEST(ClosestChildren, LargestNormHasNoChildren) {
  const auto t = table_of({"a", "b", "c"}, {{0.1, 0.0}, {0.0, 0.3}, {0.6, 0.2}});
  EXPECT_TRUE(closest_children("c", 5, t.view(), t.lexicon).empty());
}

TEST(ClosestChildren, NormFilter) {
  const auto t = table_of({"t", "n1", "n2"}, {{0.3, 0.0}, {0.5, 0.0}, {0.2, 0.0}});
  // n2 is nearer but has the smaller norm.
  ASSERT_LT(geometry::poincare_distance(t.view().row(0), t.view().row(2)),
            geometry::poincare_distance(t.view().row(0), t.view().row(1)));
  const auto r = closest_children("t", 5, t.view(), t.lexicon);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(t.lexicon.word(r[0].id), "n1");
}

TEST(ClosestChildren, OutOfVocabularyQuery) {
  const auto t = table_of({"a", "b"}, {{0.1, 0.0}, {0.0, 0.3}});
  try {
    closest_children("zebra", 3, t.view(), t.lexicon);
    FAIL();
  } catch (const EvalError& e) {
    EXPECT_NE(std::string(e.what()).find("out of vocabulary"), std::string::npos);
  }
}

TEST(ClosestChildren, MatchesExhaustiveOracle) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto t = random_table(rng, 100, 2 + trial % 9);
    const auto view = t.view();
    for (WordId q = 0; q < 100; q += 7) {
      const std::size_t k = 1 + rng() % 12;
      std::vector<std::pair<double, WordId>> all;
      for (WordId id = 0; id < 100; ++id) {
        if (id != q) all.emplace_back(geometry::poincare_distance(view.row(q), view.row(id)), id);
      }
      std::sort(all.begin(), all.end());
      std::vector<WordId> expected;
      for (const auto& [d, id] : all) {
        if (expected.size() < k && geometry::norm(view.row(id)) > geometry::norm(view.row(q))) expected.push_back(id);
      }
      const auto got = closest_children(t.lexicon.word(q), k, view, t.lexicon);
      std::vector<WordId> got_ids;
      for (const auto& n : got) got_ids.push_back(n.id);
      EXPECT_EQ(got_ids, expected);
    }
  }
}

TEST(ClosestChildren, SearchPool) {
  EXPECT_EQ(children_search_pool(1), 100u);
  EXPECT_EQ(children_search_pool(20), 100u);
  EXPECT_EQ(children_search_pool(21), 105u);
}

TEST(NearestNeighbors, CosineAndPoincare) {
  const auto t = table_of({"q", "a", "b", "c"}, {{0.5, 0.0}, {0.1, 0.0}, {0.4, 0.4}, {-0.5, 0.0}});
  const auto cos = nearest_neighbors("q", 2, t.view(), t.lexicon, true);
  ASSERT_EQ(cos.size(), 2u);
  EXPECT_EQ(cos[0].id, 1u);
  EXPECT_EQ(cos[0].distance, 0.0);
  EXPECT_EQ(cos[1].id, 2u);
  const auto hyp = nearest_neighbors("q", 10, t.view(), t.lexicon, false);
  ASSERT_EQ(hyp.size(), 3u);
  EXPECT_TRUE(std::is_sorted(hyp.begin(), hyp.end(), [](auto& x, auto& y) { return x.distance < y.distance; }));
}

Vocabulary vocab_with_counts(const std::vector<std::uint64_t>& counts) {
  std::vector<std::pair<std::string, std::uint64_t>> entries;
  for (std::size_t i = 0; i < counts.size(); ++i) entries.emplace_back("w" + std::to_string(i), counts[i]);
  return Vocabulary::from_counts(entries, 1);
}

TEST(NormFrequency, Examples) {
  const auto two = vocab_with_counts({10, 1});
  const std::vector<double> rows{0.2, 0.0, 0.6, 0.0};
  EXPECT_DOUBLE_EQ(norm_frequency_correlation({Geometry::poincare, 2, rows}, two), 1.0);

  const auto v = vocab_with_counts({50, 40, 30, 20, 10});
  std::vector<double> increasing;
  for (int i = 0; i < 5; ++i) increasing.insert(increasing.end(), {0.1 * (i + 1), 0.0});
  EXPECT_DOUBLE_EQ(norm_frequency_correlation({Geometry::poincare, 2, increasing}, v), 1.0);
}

TEST(NormFrequency, UndefinedCorrelation) {
  const auto v = vocab_with_counts({5, 5, 5});
  const std::vector<double> rows{0.1, 0.0, 0.1, 0.0, 0.1, 0.0};
  EXPECT_THROW(norm_frequency_correlation({Geometry::poincare, 2, rows}, v), EvalError);
}

TEST(NormFrequency, MatchesRankOracle) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 10 + rng() % 91;
    std::vector<std::uint64_t> counts(n);
    for (auto& c : counts) c = 1 + rng() % 30;
    const auto vocab = vocab_with_counts(counts);
    const auto t = random_table(rng, n, 5);
    std::vector<double> inv, norms;
    for (WordId id = 0; id < n; ++id) {
      inv.push_back(1.0 / static_cast<double>(vocab.count(id)));
      norms.push_back(geometry::norm(t.view().row(id)));
    }
    const double rho = norm_frequency_correlation(t.view(), vocab);
    EXPECT_NEAR(rho, spearman_oracle(inv, norms), 1e-12);
    if (n >= 80) {
      EXPECT_LT(std::abs(rho), 0.35);
    }
  }
}

TEST(EvalReport, Formats) {
  const EvalReport r{"hyperlex", 0.25, 8, 2, 1000.0};
  EXPECT_EQ(r.to_record(), "task=hyperlex metric=0.25 evaluated=8 skipped_oov=2 alpha=1000");
  EXPECT_EQ(r.to_text(), "hyperlex: 0.25 (evaluated 8, skipped 2 out-of-vocabulary, alpha 1000)");
}

}  // namespace
