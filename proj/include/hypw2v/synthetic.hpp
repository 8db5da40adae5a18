#pragma once

// Small generated parallel corpora with known structure, used by the test suites and the
// make_toy_data tool.

#include <algorithm>
#include <cstddef>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hypw2v/corpus.hpp"

namespace hypw2v::synthetic {

struct ToyCorpus {
  std::vector<std::string> src_lines;
  std::vector<std::string> tgt_lines;
  // Source word i translates to target word i.
  std::vector<std::string> src_words;
  std::vector<std::string> tgt_words;

  ParallelCorpus parse() const {
    std::istringstream src(join(src_lines)), tgt(join(tgt_lines));
    return read_parallel_corpus(src, tgt);
  }

  static std::string join(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) out += l + '\n';
    return out;
  }
};

inline std::string parent_word(const std::string& lang, std::size_t p) { return lang + "_gen" + std::to_string(p); }
inline std::string child_word(const std::string& lang, std::size_t p, std::size_t c) {
  return lang + "_spec" + std::to_string(p) + "_" + std::to_string(c);
}

/// Two-level hierarchy. A share of the sentences are "general": six parent tokens taken
/// round-robin, so parents co-occur with one another broadly. The rest belong to one group and hold
/// two tokens of the group's parent and two of its children, so a child only ever meets its own
/// parent and siblings. Children are also taken round-robin, so all parents share one count and
/// all children another; with the defaults a parent is ten times as frequent as a child.
/// Both sides carry the same sentence with distinct surface forms ("en_..." / "de_...").
inline ToyCorpus hierarchy_corpus(std::size_t sentences = 200, std::size_t parents = 5,
                                  std::size_t children_per_parent = 5, std::uint64_t seed = 7,
                                  double general_share = 0.25) {
  ToyCorpus toy;
  Rng rng(seed);
  for (std::size_t p = 0; p < parents; ++p) {
    toy.src_words.push_back(parent_word("en", p));
    toy.tgt_words.push_back(parent_word("de", p));
    for (std::size_t c = 0; c < children_per_parent; ++c) {
      toy.src_words.push_back(child_word("en", p, c));
      toy.tgt_words.push_back(child_word("de", p, c));
    }
  }
  const auto general = static_cast<std::size_t>(general_share * static_cast<double>(sentences));
  for (std::size_t s = 0; s < sentences; ++s) {
    // (group, child index or npos for the parent) per token.
    constexpr std::size_t kParent = static_cast<std::size_t>(-1);
    std::vector<std::pair<std::size_t, std::size_t>> slots;
    if (s < general) {
      for (std::size_t k = 0; k < 6; ++k) slots.emplace_back((6 * s + k) % parents, kParent);
    } else {
      const std::size_t g = (s - general) % parents;
      const std::size_t round = (s - general) / parents;
      slots = {{g, kParent},
               {g, kParent},
               {g, (2 * round) % children_per_parent},
               {g, (2 * round + 1) % children_per_parent}};
    }
    std::shuffle(slots.begin(), slots.end(), rng);
    std::string src, tgt;
    for (const auto& [g, c] : slots) {
      const std::string en = c == kParent ? parent_word("en", g) : child_word("en", g, c);
      const std::string de = c == kParent ? parent_word("de", g) : child_word("de", g, c);
      src += (src.empty() ? "" : " ") + en;
      tgt += (tgt.empty() ? "" : " ") + de;
    }
    toy.src_lines.push_back(src);
    toy.tgt_lines.push_back(tgt);
  }
  return toy;
}

/// `types` words per language with exact 1:1 translations. Each sentence is a walk on a ring of
/// word types (the next word is 1..max_step positions further), so every word has its own
/// neighborhood profile. The target side renders the walk word for word; with probability
/// swap_prob each adjacent pair of target words is swapped, mimicking word-order differences.
inline ToyCorpus translation_corpus(std::size_t sentences = 500, std::size_t types = 20, std::uint64_t seed = 11,
                                    double swap_prob = 0.0, std::size_t max_step = 1,
                                    std::size_t min_len = 3, std::size_t max_len = 3) {
  ToyCorpus toy;
  Rng rng(seed);
  for (std::size_t i = 0; i < types; ++i) {
    toy.src_words.push_back("en_w" + std::to_string(i));
    toy.tgt_words.push_back("de_w" + std::to_string(i));
  }
  std::uniform_int_distribution<std::size_t> start(0, types - 1);
  std::uniform_int_distribution<std::size_t> step(1, max_step);
  std::uniform_int_distribution<std::size_t> length(min_len, max_len);
  std::bernoulli_distribution swap(swap_prob);
  for (std::size_t s = 0; s < sentences; ++s) {
    const std::size_t n = length(rng);
    std::vector<std::size_t> walk{start(rng)};
    while (walk.size() < n) walk.push_back((walk.back() + step(rng)) % types);
    std::vector<std::size_t> order = walk;
    for (std::size_t k = 0; k + 1 < order.size(); ++k) {
      if (swap(rng)) std::swap(order[k], order[k + 1]);
    }
    std::string src, tgt;
    for (std::size_t k = 0; k < n; ++k) {
      src += (src.empty() ? "" : " ") + toy.src_words[walk[k]];
      tgt += (tgt.empty() ? "" : " ") + toy.tgt_words[order[k]];
    }
    toy.src_lines.push_back(src);
    toy.tgt_lines.push_back(tgt);
  }
  return toy;
}

/// Graded is-a ratings over the hierarchy_corpus vocabulary in the HyperLex column layout:
/// child-parent pairs rate high, the reverse direction and cross-group pairs rate low. Two
/// out-of-vocabulary rows (chemistry/science, chemistry/knife) exercise the OOV rule.
inline std::vector<std::string> hyperlex_lines(std::size_t parents = 5, std::size_t children_per_parent = 5) {
  std::vector<std::string> lines{"WORD1 WORD2 POS TYPE AVG_SCORE AVG_SCORE_0_10 STD"};
  const auto row = [&](const std::string& u, const std::string& v, const char* type, double score) {
    char buf[96];
    std::snprintf(buf, sizeof buf, " N %s %.2f %.2f 0.50", type, score, score * 10.0 / 6.0);
    lines.push_back(u + " " + v + buf);
  };
  for (std::size_t p = 0; p < parents; ++p) {
    for (std::size_t c = 0; c < children_per_parent; c += 2) {
      row(child_word("en", p, c), parent_word("en", p), "hyp-1", 5.5);
      row(parent_word("en", p), child_word("en", p, c), "r-hyp-1", 1.0);
      row(child_word("en", p, c), parent_word("en", (p + 1) % parents), "no-rel", 0.3);
    }
    row(child_word("de", p, 1), parent_word("en", p), "hyp-1", 5.0);
  }
  row("chemistry", "science", "hyp-1", 6.0);
  row("chemistry", "knife", "no-rel", 0.5);
  return lines;
}

/// Cross-lingual analogies over the translation_corpus vocabulary ("en_wi is to de_wi as en_wj
/// is to de_wj"), grouped under a section header, plus one query with an unknown word.
inline std::vector<std::string> analogy_lines(std::size_t types = 20) {
  std::vector<std::string> lines{": translation"};
  for (std::size_t i = 0; i < types; ++i) {
    const std::size_t j = (i + types / 2) % types;
    lines.push_back("en_w" + std::to_string(i) + " de_w" + std::to_string(i) + " en_w" + std::to_string(j) +
                    " de_w" + std::to_string(j));
  }
  lines.push_back(": unknown");
  lines.push_back("prince princess prinz prinzessin");
  return lines;
}

}  // namespace hypw2v::synthetic
