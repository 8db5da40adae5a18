#pragma once

// Skip-gram negative-sampling objective in Euclidean and Poincare geometry, the SGD / RSGD
// update rules and the training loop.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "hypw2v/corpus.hpp"
#include "hypw2v/embedding.hpp"
#include "hypw2v/error.hpp"
#include "hypw2v/geometry.hpp"

namespace hypw2v {

enum class Retraction { exp_map, first_order };

inline std::string_view to_string(Retraction r) { return r == Retraction::exp_map ? "exp" : "first-order"; }

struct ModelConfig {
  Geometry geometry = Geometry::poincare;
  std::size_t dim = 100;
  bool use_bias = false;      // scalar bias per context word
  bool target_bias = false;   // additional scalar bias per target word
  std::size_t negatives = 5;
  double learning_rate = 0.05;
  double lr_min = 5e-6;
  std::size_t epochs = 5;
  std::uint64_t seed = 1;
  double ball_epsilon = geometry::kBallEpsilon;
  Retraction retraction = Retraction::exp_map;
  double init_radius = 1e-3;
  int window = 5;
  double smoothing_power = 0.75;
  double subsample = 0.0;
  bool cross_window = false;
  std::size_t threads = 1;

  /// Documented defaults per geometry: lr0 0.025 (euclidean) / 0.05 (poincare), lr_min = 1e-4 lr0.
  static ModelConfig defaults_for(Geometry g) {
    ModelConfig c;
    c.geometry = g;
    c.learning_rate = g == Geometry::poincare ? 0.05 : 0.025;
    c.lr_min = 1e-4 * c.learning_rate;
    return c;
  }

  void validate() const {
    if (dim < 2) throw ConfigError("dim must be >= 2");
    if (negatives < 1) throw ConfigError("negatives must be >= 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning rate must be positive");
    if (!(lr_min > 0.0) || lr_min > learning_rate) throw ConfigError("lr_min must lie in (0, learning_rate]");
    if (!(ball_epsilon > 0.0 && ball_epsilon < 1.0)) throw ConfigError("ball_epsilon must lie in (0, 1)");
    if (!(init_radius >= 0.0 && init_radius < 1.0 - ball_epsilon)) throw ConfigError("init_radius out of range");
    if (window < 1) throw ConfigError("window must be >= 1");
    if (!(smoothing_power > 0.0 && smoothing_power <= 1.0)) throw ConfigError("smoothing power must lie in (0, 1]");
    if (subsample < 0.0) throw ConfigError("subsample threshold must be >= 0");
    if (threads < 1) throw ConfigError("threads must be >= 1");
  }
};

/// Trainable state. Target rows are the published embeddings.
struct ParameterStore {
  Geometry geometry = Geometry::poincare;
  std::size_t vocab_size = 0;
  std::size_t dim = 0;
  std::vector<double> target;
  std::vector<double> context;
  std::vector<double> context_bias;  // empty unless use_bias
  std::vector<double> target_bias;   // empty unless target_bias

  ParameterStore() = default;
  ParameterStore(Geometry g, std::size_t v, std::size_t d, bool with_context_bias, bool with_target_bias)
      : geometry(g),
        vocab_size(v),
        dim(d),
        target(v * d, 0.0),
        context(v * d, 0.0),
        context_bias(with_context_bias ? v : 0, 0.0),
        target_bias(with_target_bias ? v : 0, 0.0) {}

  std::span<double> target_row(WordId id) { return {target.data() + std::size_t{id} * dim, dim}; }
  std::span<const double> target_row(WordId id) const { return {target.data() + std::size_t{id} * dim, dim}; }
  std::span<double> context_row(WordId id) { return {context.data() + std::size_t{id} * dim, dim}; }
  std::span<const double> context_row(WordId id) const { return {context.data() + std::size_t{id} * dim, dim}; }
  double bias_of_context(WordId id) const { return context_bias.empty() ? 0.0 : context_bias[id]; }
  double bias_of_target(WordId id) const { return target_bias.empty() ? 0.0 : target_bias[id]; }

  EmbeddingView targets() const { return {geometry, dim, target}; }
  EmbeddingView contexts() const { return {geometry, dim, context}; }

  friend bool operator==(const ParameterStore&, const ParameterStore&) = default;
};

struct TrainStats {
  std::uint64_t pairs_processed = 0;
  std::uint64_t skipped_singular = 0;
  std::uint64_t saturated_terms = 0;
  std::size_t epoch = 0;
  double mean_loss = 0.0;               // exponential moving average over pairs
  std::vector<double> epoch_mean_loss;  // exact mean loss of each completed epoch
  // Pairs drawn from the stream so far (including skipped ones); drives the learning rate.
  std::uint64_t stream_position = 0;
  // Serialized generator state of each worker after the last completed epoch.
  std::vector<std::string> rng_state;
};

inline ParameterStore init_parameters(std::size_t vocab_size, const ModelConfig& config, Rng& rng) {
  config.validate();
  ParameterStore store(config.geometry, vocab_size, config.dim, config.use_bias, config.target_bias);
  if (config.geometry == Geometry::euclidean) {
    const double half = 0.5 / static_cast<double>(config.dim);
    std::uniform_real_distribution<double> coord(-half, half);
    for (double& x : store.target) x = coord(rng);
    return store;
  }
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> radius(0.0, config.init_radius);
  const auto fill = [&](std::vector<double>& m) {
    for (std::size_t r = 0; r < vocab_size; ++r) {
      std::span<double> row(m.data() + r * config.dim, config.dim);
      double n = 0.0;
      while (n == 0.0) {
        for (double& x : row) x = gauss(rng);
        n = geometry::norm(row);
      }
      const double scale = radius(rng) / n;
      for (double& x : row) x *= scale;
    }
  };
  fill(store.target);
  fill(store.context);
  return store;
}

namespace detail {

struct ScoreParts {
  double score;
  double distance;  // poincare only
  double dscore_ddistance;
  bool saturated;
};

inline ScoreParts score_parts(std::span<const double> u, std::span<const double> v, double bias, Geometry g) {
  if (g == Geometry::euclidean) return {geometry::dot(u, v) + bias, 0.0, 0.0, false};
  const double d = geometry::poincare_distance(u, v);
  if (d > geometry::kOverflowGuard) {
    // Saturated: the value is clamped at the guard and no gradient flows through d.
    return {-geometry::h_apply(geometry::kOverflowGuard).value + bias, d, 0.0, true};
  }
  const auto h = geometry::h_apply(d);
  return {-h.value + bias, d, -h.derivative, false};
}

// log(sigmoid(x)) without overflow.
inline double log_sigmoid(double x) { return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace detail

/// Similarity score: dot(u, v) + bias (euclidean) or -cosh^2(d(u, v)) + bias (poincare).
/// Pass bias = 0 when the model has no bias term.
inline double score_pair(std::span<const double> u, std::span<const double> v, double bias, Geometry g) {
  return detail::score_parts(u, v, bias, g).score;
}

/// Local copy of every parameter one (center, context, negatives) sample touches. Context ids
/// are deduplicated; slot 0 is the positive context.
struct Sample {
  Geometry geometry = Geometry::poincare;
  std::size_t dim = 0;
  WordId center_id = 0;
  std::vector<double> center;
  double center_bias = 0.0;
  std::vector<WordId> ids;
  std::vector<double> contexts;  // ids.size() x dim
  std::vector<double> biases;    // ids.size()
  std::vector<std::size_t> negative_slots;

  std::span<const double> context(std::size_t slot) const { return {contexts.data() + slot * dim, dim}; }
  std::span<double> context(std::size_t slot) { return {contexts.data() + slot * dim, dim}; }

  void assign(WordId center_word, WordId context_word, std::span<const WordId> negatives) {
    center_id = center_word;
    ids.clear();
    negative_slots.clear();
    ids.push_back(context_word);
    for (WordId n : negatives) {
      const auto it = std::find(ids.begin(), ids.end(), n);
      negative_slots.push_back(static_cast<std::size_t>(it - ids.begin()));
      if (it == ids.end()) ids.push_back(n);
    }
    center.resize(dim);
    contexts.resize(ids.size() * dim);
    biases.assign(ids.size(), 0.0);
  }
};

/// Gradients of the sample loss, laid out like Sample.
struct SampleGradients {
  std::vector<double> center;
  double center_bias = 0.0;
  std::vector<double> contexts;
  std::vector<double> biases;
  double loss = 0.0;
  std::size_t saturated = 0;

  std::span<const double> context(std::size_t slot, std::size_t dim) const { return {contexts.data() + slot * dim, dim}; }
};

/// Loss -log s(score+) - sum log s(-score-) of a sample.
inline double sample_loss(const Sample& s) {
  const double cb = s.center_bias;
  double loss = -detail::log_sigmoid(score_pair(s.center, s.context(0), s.biases[0] + cb, s.geometry));
  for (std::size_t slot : s.negative_slots) {
    loss -= detail::log_sigmoid(-score_pair(s.center, s.context(slot), s.biases[slot] + cb, s.geometry));
  }
  return loss;
}

/// Ambient gradients of sample_loss. Throws SingularityError if a poincare term has
/// coincident points.
inline void sample_gradients(const Sample& s, SampleGradients& g) {
  const std::size_t dim = s.dim;
  g.center.assign(dim, 0.0);
  g.contexts.assign(s.ids.size() * dim, 0.0);
  g.biases.assign(s.ids.size(), 0.0);
  g.center_bias = 0.0;
  g.loss = 0.0;
  g.saturated = 0;
  std::vector<double> du(dim), dv(dim);
  const auto term = [&](std::size_t slot, bool positive) {
    const auto v = s.context(slot);
    const auto parts = detail::score_parts(s.center, v, s.biases[slot] + s.center_bias, s.geometry);
    // dL/dscore for -log s(x) is s(x) - 1; for -log s(-x) it is s(x).
    double dl_ds;
    if (positive) {
      g.loss -= detail::log_sigmoid(parts.score);
      dl_ds = detail::sigmoid(parts.score) - 1.0;
    } else {
      g.loss -= detail::log_sigmoid(-parts.score);
      dl_ds = detail::sigmoid(parts.score);
    }
    if (parts.saturated) ++g.saturated;
    g.biases[slot] += dl_ds;
    g.center_bias += dl_ds;
    double* gv = g.contexts.data() + slot * dim;
    if (s.geometry == Geometry::euclidean) {
      for (std::size_t i = 0; i < dim; ++i) {
        g.center[i] += dl_ds * v[i];
        gv[i] += dl_ds * s.center[i];
      }
      return;
    }
    if (parts.saturated) return;
    geometry::distance_gradient(s.center, v, du);
    geometry::distance_gradient(v, s.center, dv);
    const double c = dl_ds * parts.dscore_ddistance;
    for (std::size_t i = 0; i < dim; ++i) {
      g.center[i] += c * du[i];
      gv[i] += c * dv[i];
    }
  };
  term(0, true);
  for (std::size_t slot : s.negative_slots) term(slot, false);
}

/// Copies the parameters of one sample out of the store.
inline Sample gather_sample(const ParameterStore& store, WordId center, WordId context,
                            std::span<const WordId> negatives) {
  Sample s;
  s.geometry = store.geometry;
  s.dim = store.dim;
  s.assign(center, context, negatives);
  const auto c = store.target_row(center);
  std::copy(c.begin(), c.end(), s.center.begin());
  s.center_bias = store.bias_of_target(center);
  for (std::size_t slot = 0; slot < s.ids.size(); ++slot) {
    const auto row = store.context_row(s.ids[slot]);
    std::copy(row.begin(), row.end(), s.context(slot).begin());
    s.biases[slot] = store.bias_of_context(s.ids[slot]);
  }
  return s;
}

inline double sgns_loss(WordId center, WordId context, std::span<const WordId> negatives, const ParameterStore& store) {
  return sample_loss(gather_sample(store, center, context, negatives));
}

/// Gradients with respect to the store: the center's target row, each touched context row and
/// the touched biases. Untouched rows have zero gradient by construction.
struct StoreGradients {
  std::vector<double> target_row;  // gradient of the center target row
  std::vector<WordId> context_ids;
  std::vector<double> context_rows;  // context_ids.size() x dim
  std::vector<double> context_bias;  // per context_ids entry
  double target_bias = 0.0;
  double loss = 0.0;
};

inline StoreGradients sgns_gradients(WordId center, WordId context, std::span<const WordId> negatives,
                                     const ParameterStore& store) {
  const Sample s = gather_sample(store, center, context, negatives);
  SampleGradients g;
  sample_gradients(s, g);
  // Bias terms the model does not have carry no gradient.
  if (store.context_bias.empty()) std::fill(g.biases.begin(), g.biases.end(), 0.0);
  if (store.target_bias.empty()) g.center_bias = 0.0;
  return {g.center, s.ids, g.contexts, g.biases, g.center_bias, g.loss};
}

/// row <- row - lr * grad.
inline void sgd_step(std::span<double> row, std::span<const double> grad, double lr) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    const double next = row[i] - lr * grad[i];
    if (!std::isfinite(next)) throw NumericalError("non-finite SGD update");
    row[i] = next;
  }
}

/// Riemannian step: rescale by the inverse metric, then retract with the exponential map
/// (or a projected first-order step). The result satisfies norm <= 1 - ball_epsilon.
inline void rsgd_step(std::span<double> row, std::span<const double> grad, double lr, Retraction retraction,
                      double ball_epsilon) {
  const double scale = geometry::riemannian_scale(row);
  std::vector<double> step(row.size());
  for (std::size_t i = 0; i < row.size(); ++i) {
    step[i] = -lr * scale * grad[i];
    if (!std::isfinite(step[i])) throw NumericalError("non-finite RSGD update");
  }
  if (retraction == Retraction::exp_map) {
    geometry::exp_map(row, step, row, ball_epsilon);
  } else {
    for (std::size_t i = 0; i < row.size(); ++i) step[i] += row[i];
    const auto projected = geometry::project_to_ball(step, ball_epsilon);
    std::copy(projected.begin(), projected.end(), row.begin());
  }
}

/// Linearly decayed learning rate at pair t of T, floored at lr_min.
inline double learning_rate_at(std::uint64_t t, double total, double lr0, double lr_min) {
  if (total <= 0.0) return lr0;
  return std::max(lr_min, lr0 * (1.0 - static_cast<double>(t) / total));
}

struct TrainOptions {
  // Resume from this state instead of a fresh initialization.
  std::optional<ParameterStore> initial;
  std::size_t start_epoch = 0;
  std::uint64_t start_pairs = 0;
  // Worker generator states to continue from (TrainStats::rng_state of the interrupted run).
  std::vector<std::string> rng_state;
  // Called after every epoch with the store and stats so far.
  std::function<void(const ParameterStore&, const TrainStats&)> on_epoch_end;
};

struct TrainResult {
  ParameterStore store;
  TrainStats stats;
};

namespace detail {

// Row transfer between the shared store and a local sample. In shared (multi-worker) mode
// accesses are relaxed atomics so that concurrent lost updates stay well-defined.
inline void load(std::span<const double> from, std::span<double> to, bool shared) {
  if (!shared) {
    std::copy(from.begin(), from.end(), to.begin());
    return;
  }
  for (std::size_t i = 0; i < from.size(); ++i) {
    to[i] = std::atomic_ref<double>(const_cast<double&>(from[i])).load(std::memory_order_relaxed);
  }
}

inline void store_back(std::span<const double> from, std::span<double> to, bool shared) {
  if (!shared) {
    std::copy(from.begin(), from.end(), to.begin());
    return;
  }
  for (std::size_t i = 0; i < from.size(); ++i) {
    std::atomic_ref<double>(to[i]).store(from[i], std::memory_order_relaxed);
  }
}

inline double load_scalar(double& x, bool shared) {
  return shared ? std::atomic_ref<double>(x).load(std::memory_order_relaxed) : x;
}

inline void store_scalar(double& x, double v, bool shared) {
  if (shared) {
    std::atomic_ref<double>(x).store(v, std::memory_order_relaxed);
  } else {
    x = v;
  }
}

struct WorkerTally {
  std::uint64_t pairs = 0;
  std::uint64_t skipped = 0;
  std::uint64_t saturated = 0;
  double loss_sum = 0.0;
  double ema = 0.0;
  bool ema_started = false;
};

class Worker {
 public:
  Worker(ParameterStore& store, const ModelConfig& config, const NegativeTable& table, bool shared)
      : store_(store), config_(config), table_(table), shared_(shared), negatives_(config.negatives) {
    sample_.geometry = config.geometry;
    sample_.dim = config.dim;
  }

  void process(const TrainingPair& pair, double lr, Rng& rng, WorkerTally& tally) {
    sample_negatives(table_, pair.context, rng, negatives_);
    sample_.assign(pair.center, pair.context, negatives_);
    load(store_.target_row(pair.center), sample_.center, shared_);
    sample_.center_bias = store_.target_bias.empty() ? 0.0 : load_scalar(store_.target_bias[pair.center], shared_);
    for (std::size_t slot = 0; slot < sample_.ids.size(); ++slot) {
      const WordId id = sample_.ids[slot];
      load(store_.context_row(id), sample_.context(slot), shared_);
      sample_.biases[slot] = store_.context_bias.empty() ? 0.0 : load_scalar(store_.context_bias[id], shared_);
    }
    try {
      sample_gradients(sample_, grads_);
    } catch (const SingularityError&) {
      ++tally.skipped;
      return;
    }
    ++tally.pairs;
    tally.saturated += grads_.saturated;
    tally.loss_sum += grads_.loss;
    tally.ema = tally.ema_started ? 0.99 * tally.ema + 0.01 * grads_.loss : grads_.loss;
    tally.ema_started = true;
    try {
      step(sample_.center, grads_.center, lr);
      for (std::size_t slot = 0; slot < sample_.ids.size(); ++slot) {
        step(sample_.context(slot), grads_.context(slot, config_.dim), lr);
      }
    } catch (const NumericalError& e) {
      throw NumericalError(std::string(e.what()) + " at sample (center " + std::to_string(pair.center) +
                           ", context " + std::to_string(pair.context) + ")");
    }
    store_back(sample_.center, store_.target_row(pair.center), shared_);
    if (!store_.target_bias.empty()) {
      store_scalar(store_.target_bias[pair.center], sample_.center_bias - lr * grads_.center_bias, shared_);
    }
    for (std::size_t slot = 0; slot < sample_.ids.size(); ++slot) {
      const WordId id = sample_.ids[slot];
      store_back(sample_.context(slot), store_.context_row(id), shared_);
      if (!store_.context_bias.empty()) {
        store_scalar(store_.context_bias[id], sample_.biases[slot] - lr * grads_.biases[slot], shared_);
      }
    }
  }

 private:
  void step(std::span<double> row, std::span<const double> grad, double lr) {
    if (config_.geometry == Geometry::euclidean) {
      sgd_step(row, grad, lr);
    } else {
      rsgd_step(row, grad, lr, config_.retraction, config_.ball_epsilon);
    }
  }

  ParameterStore& store_;
  const ModelConfig& config_;
  const NegativeTable& table_;
  bool shared_;
  std::vector<WordId> negatives_;
  Sample sample_;
  SampleGradients grads_;
};

}  // namespace detail

/// Trains on the interleaved monolingual / cross-lingual pair stream of an encoded parallel
/// corpus. With threads == 1 the result is a deterministic function of the inputs and seed.
inline TrainResult train(const std::vector<EncodedPair>& corpus, const Vocabulary& vocab, const ModelConfig& config,
                         TrainOptions options = {}) {
  config.validate();
  if (vocab.size() < 2) throw ConfigError("training needs a vocabulary of at least 2 words");
  const PairStreamOptions stream{config.window, config.cross_window, config.subsample};
  const double per_epoch = expected_pairs_per_epoch(corpus, config.window, config.cross_window);
  if (per_epoch <= 0.0) throw ConfigError("corpus produces no training pairs");
  const double total_pairs = per_epoch * static_cast<double>(config.epochs);

  Rng init_rng(config.seed);
  TrainResult result;
  if (options.initial) {
    result.store = std::move(*options.initial);
    if (result.store.vocab_size != vocab.size() || result.store.dim != config.dim ||
        result.store.geometry != config.geometry) {
      throw ConfigError("resume state does not match the vocabulary or configuration");
    }
  } else {
    result.store = init_parameters(vocab.size(), config, init_rng);
  }
  const NegativeTable table(vocab, config.smoothing_power);
  ParameterStore& store = result.store;
  TrainStats& stats = result.stats;
  stats.epoch = options.start_epoch;
  stats.stream_position = options.start_pairs;

  const std::size_t workers = config.threads;
  const bool shared = workers > 1;
  std::atomic<std::uint64_t> position{options.start_pairs};
  std::vector<Rng> rngs;
  for (std::size_t w = 0; w < workers; ++w) {
    if (w == 0) {
      rngs.emplace_back(config.seed + 1);
    } else {
      std::seed_seq seq{config.seed, static_cast<std::uint64_t>(w)};
      rngs.emplace_back(seq);
    }
  }
  if (!options.rng_state.empty()) {
    if (options.rng_state.size() != workers) throw ConfigError("resume state was saved with a different thread count");
    for (std::size_t w = 0; w < workers; ++w) {
      std::istringstream in(options.rng_state[w]);
      in >> rngs[w];
      if (!in) throw ConfigError("malformed generator state in resume data");
    }
  }

  std::vector<detail::WorkerTally> tallies(workers);
  for (std::size_t epoch = options.start_epoch; epoch < config.epochs; ++epoch) {
    for (auto& t : tallies) t = {0, 0, 0, 0.0, t.ema, t.ema_started};
    const auto run = [&](std::size_t w) {
      detail::Worker worker(store, config, table, shared);
      Rng& rng = rngs[w];
      for (std::size_t i = w; i < corpus.size(); i += workers) {
        for_each_training_pair(corpus[i], vocab, stream, rng, [&](const TrainingPair& pair) {
          const std::uint64_t t = position.fetch_add(1, std::memory_order_relaxed);
          worker.process(pair, learning_rate_at(t, total_pairs, config.learning_rate, config.lr_min), rng,
                         tallies[w]);
        });
      }
    };
    if (!shared) {
      run(0);
    } else {
      std::vector<std::exception_ptr> errors(workers);
      {
        std::vector<std::jthread> threads;
        for (std::size_t w = 0; w < workers; ++w) {
          threads.emplace_back([&, w] {
            try {
              run(w);
            } catch (...) {
              errors[w] = std::current_exception();
            }
          });
        }
      }
      for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }
    std::uint64_t epoch_pairs = 0;
    double loss_sum = 0.0;
    for (const auto& t : tallies) {
      epoch_pairs += t.pairs;
      loss_sum += t.loss_sum;
      stats.skipped_singular += t.skipped;
      stats.saturated_terms += t.saturated;
    }
    stats.pairs_processed += epoch_pairs;
    stats.mean_loss = tallies[0].ema;
    stats.epoch_mean_loss.push_back(epoch_pairs ? loss_sum / static_cast<double>(epoch_pairs) : 0.0);
    stats.epoch = epoch + 1;
    stats.stream_position = position.load();
    stats.rng_state.clear();
    for (const auto& r : rngs) {
      std::ostringstream out;
      out << r;
      stats.rng_state.push_back(out.str());
    }
    if (options.on_epoch_end) options.on_epoch_end(store, stats);
  }
  return result;
}

}  // namespace hypw2v
