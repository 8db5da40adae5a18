#pragma once

// Parallel corpus ingestion, the shared bilingual vocabulary, skip-gram and
// index-alignment pair generation, and the negative-sampling distribution.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hypw2v/error.hpp"
#include "hypw2v/text.hpp"

namespace hypw2v {

using WordId = std::uint32_t;
inline constexpr WordId kNoWord = std::numeric_limits<WordId>::max();

/// Random engine used throughout; fixed algorithm so seeds reproduce.
using Rng = std::mt19937_64;

struct SentencePair {
  std::vector<std::string> src_tokens;
  std::vector<std::string> tgt_tokens;
};

struct ParallelCorpus {
  std::vector<SentencePair> pairs;
  std::size_t lines = 0;    // line pairs read
  std::size_t dropped = 0;  // line pairs where either side was empty
};

struct CorpusOptions {
  // Prepended to every token of the respective side, e.g. "de:" / "en:", to keep
  // identically spelled words of the two languages apart.
  std::string src_prefix;
  std::string tgt_prefix;
};

/// Reads two line-aligned streams. Pairs in which either side tokenizes to nothing are dropped
/// and counted.
inline ParallelCorpus read_parallel_corpus(std::istream& src, std::istream& tgt,
                                           const CorpusOptions& options = {}) {
  ParallelCorpus corpus;
  std::string src_line, tgt_line;
  std::size_t line_no = 0;
  while (true) {
    const bool has_src = static_cast<bool>(std::getline(src, src_line));
    const bool has_tgt = static_cast<bool>(std::getline(tgt, tgt_line));
    if (!has_src && !has_tgt) break;
    if (has_src != has_tgt) {
      std::size_t src_count = line_no + (has_src ? 1 : 0);
      std::size_t tgt_count = line_no + (has_tgt ? 1 : 0);
      std::string rest;
      while (std::getline(has_src ? src : tgt, rest)) ++(has_src ? src_count : tgt_count);
      throw IngestionError("parallel corpus line-count mismatch: source has " +
                           std::to_string(src_count) + " lines, target has " +
                           std::to_string(tgt_count));
    }
    ++line_no;
    SentencePair pair{text::tokenize_line(src_line, line_no), text::tokenize_line(tgt_line, line_no)};
    if (pair.src_tokens.empty() || pair.tgt_tokens.empty()) {
      ++corpus.dropped;
      continue;
    }
    if (!options.src_prefix.empty()) {
      for (auto& t : pair.src_tokens) t.insert(0, options.src_prefix);
    }
    if (!options.tgt_prefix.empty()) {
      for (auto& t : pair.tgt_tokens) t.insert(0, options.tgt_prefix);
    }
    corpus.pairs.push_back(std::move(pair));
  }
  corpus.lines = line_no;
  return corpus;
}

inline ParallelCorpus load_parallel_corpus(const std::filesystem::path& src_path,
                                           const std::filesystem::path& tgt_path,
                                           const CorpusOptions& options = {}) {
  std::ifstream src(src_path);
  if (!src) throw IngestionError("cannot read corpus file " + src_path.string());
  std::ifstream tgt(tgt_path);
  if (!tgt) throw IngestionError("cannot read corpus file " + tgt_path.string());
  return read_parallel_corpus(src, tgt, options);
}

namespace detail {

struct StringHash {
  using is_transparent = void;
  std::size_t operator()(std::string_view s) const noexcept { return std::hash<std::string_view>{}(s); }
};

}  // namespace detail

/// Bijection between surface forms and ids 0..V-1.
class Lexicon {
 public:
  Lexicon() = default;

  explicit Lexicon(std::vector<std::string> words) : words_(std::move(words)) {
    ids_.reserve(words_.size());
    for (std::size_t i = 0; i < words_.size(); ++i) {
      if (words_[i].empty()) throw ConfigError("empty word at id " + std::to_string(i));
      if (!ids_.emplace(words_[i], static_cast<WordId>(i)).second) {
        throw ConfigError("duplicate word '" + words_[i] + "'");
      }
    }
  }

  std::optional<WordId> find(std::string_view word) const {
    const auto it = ids_.find(word);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  bool contains(std::string_view word) const { return ids_.find(word) != ids_.end(); }
  const std::string& word(WordId id) const { return words_.at(id); }
  const std::vector<std::string>& words() const { return words_; }
  std::size_t size() const { return words_.size(); }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, WordId, detail::StringHash, std::equal_to<>> ids_;
};

/// Merged bilingual vocabulary with raw corpus counts. Ids are assigned by descending count,
/// ties broken lexicographically.
class Vocabulary : public Lexicon {
 public:
  Vocabulary() = default;

  /// Keeps entries with count >= min_count.
  static Vocabulary from_counts(std::vector<std::pair<std::string, std::uint64_t>> entries,
                                std::uint64_t min_count) {
    if (min_count < 1) throw ConfigError("min_count must be >= 1");
    std::erase_if(entries, [&](const auto& e) { return e.second < min_count; });
    if (entries.empty()) throw ConfigError("vocabulary is empty after applying min_count");
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    std::vector<std::string> words;
    Vocabulary vocab;
    words.reserve(entries.size());
    vocab.counts_.reserve(entries.size());
    for (auto& [w, c] : entries) {
      words.push_back(std::move(w));
      vocab.counts_.push_back(c);
      vocab.total_tokens_ += c;
    }
    static_cast<Lexicon&>(vocab) = Lexicon(std::move(words));
    vocab.min_count_ = min_count;
    return vocab;
  }

  std::uint64_t count(WordId id) const { return counts_.at(id); }
  const std::vector<std::uint64_t>& counts() const { return counts_; }
  std::uint64_t total_tokens() const { return total_tokens_; }
  std::uint64_t min_count() const { return min_count_; }

 private:
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_tokens_ = 0;
  std::uint64_t min_count_ = 1;
};

/// One vocabulary over the tokens of both sides.
inline Vocabulary build_vocabulary(const ParallelCorpus& corpus, std::uint64_t min_count) {
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto& pair : corpus.pairs) {
    for (const auto& t : pair.src_tokens) ++counts[t];
    for (const auto& t : pair.tgt_tokens) ++counts[t];
  }
  return Vocabulary::from_counts({counts.begin(), counts.end()}, min_count);
}

/// Writes "word<TAB>count" lines in id order (descending count).
inline void write_vocabulary(const Vocabulary& vocab, std::ostream& out) {
  for (WordId id = 0; id < vocab.size(); ++id) out << vocab.word(id) << '\t' << vocab.count(id) << '\n';
}

inline Vocabulary read_vocabulary(std::istream& in, std::uint64_t min_count = 1) {
  std::vector<std::pair<std::string, std::uint64_t>> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw ParseError("vocabulary line " + std::to_string(line_no) + ": expected word<TAB>count", line_no);
    }
    const std::string count_field = line.substr(tab + 1);
    std::uint64_t count = 0;
    try {
      std::size_t used = 0;
      count = std::stoull(count_field, &used);
      if (used != count_field.size() || count == 0) throw std::invalid_argument("count");
    } catch (const std::exception&) {
      throw ParseError("vocabulary line " + std::to_string(line_no) + ": bad count '" + count_field + "'",
                       line_no);
    }
    entries.emplace_back(line.substr(0, tab), count);
  }
  return Vocabulary::from_counts(std::move(entries), min_count);
}

enum class PairKind : std::uint8_t { monolingual, cross_lingual };

struct TrainingPair {
  WordId center;
  WordId context;
  PairKind kind;
  friend bool operator==(const TrainingPair&, const TrainingPair&) = default;
};

/// Sentence pair mapped to ids; out-of-vocabulary tokens hold kNoWord at their position.
struct EncodedPair {
  std::vector<WordId> src;
  std::vector<WordId> tgt;
};

inline std::vector<WordId> encode_tokens(const std::vector<std::string>& tokens, const Lexicon& lexicon) {
  std::vector<WordId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(lexicon.find(t).value_or(kNoWord));
  return ids;
}

inline std::vector<EncodedPair> encode_corpus(const ParallelCorpus& corpus, const Lexicon& lexicon) {
  std::vector<EncodedPair> out;
  out.reserve(corpus.pairs.size());
  for (const auto& p : corpus.pairs) {
    out.push_back({encode_tokens(p.src_tokens, lexicon), encode_tokens(p.tgt_tokens, lexicon)});
  }
  return out;
}

/// Skip-gram enumeration: for every position i a radius b = draw_b() is drawn and
/// (ids[i], ids[j]) is emitted for each j != i with |i - j| <= b.
template <class DrawRadius, class Emit>
void for_each_skipgram(std::span<const WordId> ids, DrawRadius&& draw_b, Emit&& emit) {
  const auto n = static_cast<std::ptrdiff_t>(ids.size());
  if (n < 2) return;
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto b = static_cast<std::ptrdiff_t>(draw_b());
    const auto lo = std::max<std::ptrdiff_t>(0, i - b);
    const auto hi = std::min<std::ptrdiff_t>(n - 1, i + b);
    for (std::ptrdiff_t j = lo; j <= hi; ++j) {
      if (j != i) emit(TrainingPair{ids[i], ids[j], PairKind::monolingual});
    }
  }
}

/// Dynamic-window skip-gram pairs, b uniform in [1, window].
inline std::vector<TrainingPair> skipgram_pairs(std::span<const WordId> ids, int window, Rng& rng) {
  if (window < 1) throw ConfigError("window must be >= 1");
  std::vector<TrainingPair> out;
  std::uniform_int_distribution<int> radius(1, window);
  for_each_skipgram(ids, [&] { return radius(rng); }, [&](const TrainingPair& p) { out.push_back(p); });
  return out;
}

/// Index alignment: the i-th source token is paired with the i-th target token, in both
/// directions, for i < min(lengths). Positions holding kNoWord on either side are skipped.
template <class Emit>
void for_each_aligned(std::span<const WordId> src, std::span<const WordId> tgt, Emit&& emit) {
  const std::size_t n = std::min(src.size(), tgt.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (src[i] == kNoWord || tgt[i] == kNoWord) continue;
    emit(TrainingPair{src[i], tgt[i], PairKind::cross_lingual});
    emit(TrainingPair{tgt[i], src[i], PairKind::cross_lingual});
  }
}

inline std::vector<TrainingPair> index_align_pairs(const SentencePair& pair, const Lexicon& lexicon) {
  const auto src = encode_tokens(pair.src_tokens, lexicon);
  const auto tgt = encode_tokens(pair.tgt_tokens, lexicon);
  std::vector<TrainingPair> out;
  for_each_aligned(src, tgt, [&](const TrainingPair& p) { out.push_back(p); });
  return out;
}

/// Noise distribution P(id) proportional to count^power.
class NegativeTable {
 public:
  NegativeTable(const Vocabulary& vocab, double smoothing_power) {
    if (!(smoothing_power > 0.0 && smoothing_power <= 1.0)) {
      throw ConfigError("smoothing_power must lie in (0, 1]");
    }
    probabilities_.resize(vocab.size());
    double total = 0.0;
    for (WordId id = 0; id < vocab.size(); ++id) {
      probabilities_[id] = std::pow(static_cast<double>(vocab.count(id)), smoothing_power);
      total += probabilities_[id];
    }
    cumulative_.resize(vocab.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < probabilities_.size(); ++i) {
      probabilities_[i] /= total;
      acc += probabilities_[i];
      cumulative_[i] = acc;
    }
    cumulative_.back() = 1.0;
  }

  const std::vector<double>& probabilities() const { return probabilities_; }
  std::size_t size() const { return probabilities_.size(); }

  WordId sample(Rng& rng) const {
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), size() - 1);
    return static_cast<WordId>(idx);
  }

 private:
  std::vector<double> probabilities_;
  std::vector<double> cumulative_;
};

inline NegativeTable build_negative_table(const Vocabulary& vocab, double smoothing_power) {
  return NegativeTable(vocab, smoothing_power);
}

/// Fills out with draws from the table, redrawing any draw equal to exclude.
inline void sample_negatives(const NegativeTable& table, WordId exclude, Rng& rng, std::span<WordId> out) {
  if (table.size() < 2) throw ConfigError("negative sampling needs a vocabulary of at least 2 words");
  for (auto& slot : out) {
    WordId id;
    do {
      id = table.sample(rng);
    } while (id == exclude);
    slot = id;
  }
}

inline std::vector<WordId> sample_negatives(const NegativeTable& table, std::size_t k, WordId exclude, Rng& rng) {
  if (k < 1) throw ConfigError("k must be >= 1");
  std::vector<WordId> out(k);
  sample_negatives(table, exclude, rng, out);
  return out;
}

/// Index-aligned windowed cross-lingual pairs: for every in-vocabulary position i a radius b is
/// drawn and src[i] is paired with tgt[j] for every |i - j| <= b (j = i included); then the same
/// for tgt[i] against src. Positions holding kNoWord are skipped.
template <class DrawRadius, class Emit>
void for_each_cross_window(std::span<const WordId> src, std::span<const WordId> tgt, DrawRadius&& draw_b,
                           Emit&& emit) {
  const auto one_side = [&](std::span<const WordId> from, std::span<const WordId> to) {
    const auto n = static_cast<std::ptrdiff_t>(to.size());
    for (std::size_t i = 0; i < from.size(); ++i) {
      if (from[i] == kNoWord) continue;
      const auto b = static_cast<std::ptrdiff_t>(draw_b());
      const auto c = static_cast<std::ptrdiff_t>(i);
      for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, c - b); j <= std::min(n - 1, c + b); ++j) {
        if (to[j] != kNoWord) emit(TrainingPair{from[i], to[j], PairKind::cross_lingual});
      }
    }
  };
  one_side(src, tgt);
  one_side(tgt, src);
}

struct PairStreamOptions {
  int window = 5;
  // Pair each word with the window around its index in the other sentence instead of only the
  // word at the same index.
  bool cross_window = false;
  // Frequent-word subsampling threshold; 0 disables it.
  double subsample = 0.0;
};

/// Keep probability of the canonical word2vec subsampling rule.
inline double keep_probability(std::uint64_t count, std::uint64_t total, double threshold) {
  if (threshold <= 0.0) return 1.0;
  const double scaled = threshold * static_cast<double>(total);
  const double c = static_cast<double>(count);
  return std::min(1.0, (std::sqrt(c / scaled) + 1.0) * scaled / c);
}

/// Emits the training stream of one sentence pair: source skip-grams, target skip-grams, then
/// index-aligned cross-lingual pairs. Out-of-vocabulary (and subsampled) tokens are removed
/// before windowing.
template <class Emit>
void for_each_training_pair(const EncodedPair& pair, const Vocabulary& vocab, const PairStreamOptions& options,
                            Rng& rng, Emit&& emit) {
  std::uniform_int_distribution<int> radius(1, options.window);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto filter = [&](const std::vector<WordId>& ids) {
    std::vector<WordId> kept(ids.size(), kNoWord);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] == kNoWord) continue;
      if (options.subsample > 0.0 &&
          unit(rng) >= keep_probability(vocab.count(ids[i]), vocab.total_tokens(), options.subsample)) {
        continue;
      }
      kept[i] = ids[i];
    }
    return kept;
  };
  const auto src = filter(pair.src);
  const auto tgt = filter(pair.tgt);
  std::vector<WordId> compact;
  for (const auto* side : {&src, &tgt}) {
    compact.clear();
    for (WordId id : *side) {
      if (id != kNoWord) compact.push_back(id);
    }
    for_each_skipgram(compact, [&] { return radius(rng); }, emit);
  }
  if (options.cross_window) {
    for_each_cross_window(src, tgt, [&] { return radius(rng); }, emit);
  } else {
    for_each_aligned(src, tgt, emit);
  }
}

/// Expected number of pairs one pass over the corpus produces (exact without subsampling).
inline double expected_pairs_per_epoch(const std::vector<EncodedPair>& corpus, int window,
                                       bool cross_window = false) {
  double total = 0.0;
  const double w = window;
  const auto mono = [&](const std::vector<WordId>& ids) {
    const auto n = static_cast<std::ptrdiff_t>(std::count_if(ids.begin(), ids.end(), [](WordId id) { return id != kNoWord; }));
    double e = 0.0;
    for (std::ptrdiff_t m = 1; m <= std::min<std::ptrdiff_t>(window, n - 1); ++m) {
      e += 2.0 * static_cast<double>(n - m) * (w - static_cast<double>(m) + 1.0) / w;
    }
    return e;
  };
  for (const auto& p : corpus) {
    total += mono(p.src) + mono(p.tgt);
    if (cross_window) {
      const auto cross = [&](const std::vector<WordId>& from, const std::vector<WordId>& to) {
        double e = 0.0;
        for (std::size_t i = 0; i < from.size(); ++i) {
          if (from[i] == kNoWord) continue;
          for (std::size_t j = 0; j < to.size(); ++j) {
            const auto m = static_cast<double>(i > j ? i - j : j - i);
            if (to[j] != kNoWord && m <= w) e += (w - std::max(m, 1.0) + 1.0) / w;
          }
        }
        return e;
      };
      total += cross(p.src, p.tgt) + cross(p.tgt, p.src);
      continue;
    }
    const std::size_t n = std::min(p.src.size(), p.tgt.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (p.src[i] != kNoWord && p.tgt[i] != kNoWord) total += 2.0;
    }
  }
  return total;
}

}  // namespace hypw2v
