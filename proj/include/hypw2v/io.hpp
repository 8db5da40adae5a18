#pragma once

// Text persistence: word2vec-style embedding files with a "key = value" metadata sidecar,
// training checkpoints, and the benchmark dataset parsers.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "hypw2v/corpus.hpp"
#include "hypw2v/embedding.hpp"
#include "hypw2v/error.hpp"
#include "hypw2v/eval.hpp"
#include "hypw2v/model.hpp"
#include "hypw2v/text.hpp"

namespace hypw2v::io {

/// Ordered key/value pairs; insertion order is the on-disk order.
class Metadata {
 public:
  void set(std::string key, std::string value) {
    for (auto& [k, v] : entries_) {
      if (k == key) {
        v = std::move(value);
        return;
      }
    }
    entries_.emplace_back(std::move(key), std::move(value));
  }

  std::optional<std::string> get(std::string_view key) const {
    for (const auto& [k, v] : entries_) {
      if (k == key) return v;
    }
    return std::nullopt;
  }

  std::string require(std::string_view key) const {
    auto v = get(key);
    if (!v) throw ParseError("metadata is missing key '" + std::string(key) + "'");
    return *v;
  }

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }
  friend bool operator==(const Metadata&, const Metadata&) = default;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

inline std::filesystem::path sidecar_path(const std::filesystem::path& p) { return p.string() + ".meta"; }

/// 17 significant digits: parsing the text gives back the identical double.
inline std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_metadata(const Metadata& meta, std::ostream& out) {
  for (const auto& [k, v] : meta.entries()) out << k << " = " << v << '\n';
}

inline Metadata read_metadata(std::istream& in) {
  Metadata meta;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos || eq == 0) {
      throw ParseError("metadata line " + std::to_string(line_no) + ": expected 'key = value'", line_no);
    }
    meta.set(line.substr(0, eq), line.substr(eq + 3));
  }
  return meta;
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

inline std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ParseError("cannot read " + p.string());
  return in;
}

inline std::vector<std::string_view> fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <class T>
bool parse_number(std::string_view s, T& value) {
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, value);
  return res.ec == std::errc() && res.ptr == end;
}

inline std::string at_line(const std::filesystem::path& p, std::size_t line) {
  return p.string() + ":" + std::to_string(line) + ": ";
}

}  // namespace detail

/// Writes "V dim" followed by one "word c1 ... c_dim" line per row.
inline void write_embeddings(const EmbeddingView& view, const Lexicon& lexicon, std::ostream& out) {
  if (view.size() != lexicon.size()) throw Error("embedding table and lexicon differ in size");
  out << view.size() << ' ' << view.dim << '\n';
  for (WordId id = 0; id < view.size(); ++id) {
    out << lexicon.word(id);
    for (double x : view.row(id)) out << ' ' << format_real(x);
    out << '\n';
  }
}

/// Saves the table at path and the metadata at path + ".meta". geometry and dim are always
/// recorded from the table itself.
inline void save_embeddings(const EmbeddingView& view, const Lexicon& lexicon, Metadata meta,
                            const std::filesystem::path& path) {
  meta.set("geometry", std::string(to_string(view.geometry)));
  meta.set("dim", std::to_string(view.dim));
  {
    auto out = detail::open_out(path);
    write_embeddings(view, lexicon, out);
    if (!out) throw Error("failed writing " + path.string());
  }
  auto side = detail::open_out(sidecar_path(path));
  write_metadata(meta, side);
  if (!side) throw Error("failed writing " + sidecar_path(path).string());
}

struct LoadedEmbeddings {
  Lexicon lexicon;
  Geometry geometry = Geometry::euclidean;
  std::size_t dim = 0;
  std::vector<double> data;
  Metadata metadata;

  EmbeddingView view() const { return {geometry, dim, data}; }
};

/// Reads a table in the write_embeddings format. In poincare mode every row must lie strictly
/// inside the unit ball.
inline LoadedEmbeddings read_embeddings(std::istream& in, Geometry geometry, const std::filesystem::path& name) {
  LoadedEmbeddings result;
  result.geometry = geometry;
  std::string line;
  if (!std::getline(in, line)) throw ParseError(detail::at_line(name, 1) + "missing 'V dim' header", 1);
  const auto header = detail::fields(line);
  std::size_t rows = 0, dim = 0;
  if (header.size() != 2 || !detail::parse_number(header[0], rows) || !detail::parse_number(header[1], dim) ||
      rows == 0 || dim == 0) {
    throw ParseError(detail::at_line(name, 1) + "malformed header, expected 'V dim'", 1);
  }
  result.dim = dim;
  result.data.reserve(rows * dim);
  std::vector<std::string> words;
  words.reserve(rows);
  std::unordered_set<std::string> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (words.size() == rows) {
      if (detail::fields(line).empty()) continue;
      throw ParseError(detail::at_line(name, line_no) + "more rows than the header's " + std::to_string(rows),
                       line_no);
    }
    const auto f = detail::fields(line);
    if (f.size() != dim + 1) {
      throw ParseError(detail::at_line(name, line_no) + "expected a word and " + std::to_string(dim) +
                           " coordinates, found " + std::to_string(f.size()) + " fields",
                       line_no);
    }
    const std::size_t first = result.data.size();
    for (std::size_t i = 1; i <= dim; ++i) {
      double x = 0.0;
      if (!detail::parse_number(f[i], x) || !std::isfinite(x)) {
        throw ParseError(detail::at_line(name, line_no) + "bad coordinate '" + std::string(f[i]) + "'", line_no);
      }
      result.data.push_back(x);
    }
    if (geometry == Geometry::poincare) {
      const double n = geometry::norm(std::span<const double>(result.data.data() + first, dim));
      if (!(n < 1.0)) {
        throw ParseError(detail::at_line(name, line_no) + "row for '" + std::string(f[0]) + "' has norm " +
                             format_real(n) + ", outside the poincare ball",
                         line_no);
      }
    }
    if (!seen.emplace(f[0]).second) {
      throw ParseError(detail::at_line(name, line_no) + "duplicate word '" + std::string(f[0]) + "'", line_no);
    }
    words.emplace_back(f[0]);
  }
  if (words.size() < rows) {
    throw ParseError(detail::at_line(name, line_no + 1) + "header declares " + std::to_string(rows) +
                         " rows but only " + std::to_string(words.size()) + " are present",
                     line_no + 1);
  }
  result.lexicon = Lexicon(std::move(words));
  return result;
}

/// Loads an embedding file and its sidecar. The sidecar must exist and name the geometry and
/// a dim equal to the header's.
inline LoadedEmbeddings load_embeddings(const std::filesystem::path& path) {
  const auto side = sidecar_path(path);
  if (!std::filesystem::exists(side)) throw ParseError("missing metadata sidecar " + side.string());
  auto side_in = detail::open_in(side);
  Metadata meta = read_metadata(side_in);
  const auto g = parse_geometry(meta.require("geometry"));
  if (!g) throw ParseError(side.string() + ": unknown geometry '" + meta.require("geometry") + "'");
  auto in = detail::open_in(path);
  LoadedEmbeddings result = read_embeddings(in, *g, path);
  if (meta.require("dim") != std::to_string(result.dim)) {
    throw ParseError(side.string() + ": dim " + meta.require("dim") + " does not match the header's " +
                     std::to_string(result.dim));
  }
  result.metadata = std::move(meta);
  return result;
}

// Checkpoints: the target table at path (plus sidecar with optimizer state), the context table
// at path + ".context" and, when present, biases at path + ".bias" as a V x 2 table
// (context bias, target bias).

inline void save_checkpoint(const ParameterStore& store, const Lexicon& lexicon, Metadata meta,
                            const TrainStats& stats, const std::filesystem::path& path) {
  meta.set("checkpoint_epoch", std::to_string(stats.epoch));
  meta.set("checkpoint_pairs", std::to_string(stats.stream_position));
  meta.set("checkpoint_workers", std::to_string(stats.rng_state.size()));
  for (std::size_t w = 0; w < stats.rng_state.size(); ++w) {
    meta.set("checkpoint_rng_" + std::to_string(w), stats.rng_state[w]);
  }
  meta.set("has_context_bias", store.context_bias.empty() ? "false" : "true");
  meta.set("has_target_bias", store.target_bias.empty() ? "false" : "true");
  save_embeddings(store.targets(), lexicon, meta, path);
  {
    auto out = detail::open_out(path.string() + ".context");
    write_embeddings(store.contexts(), lexicon, out);
  }
  if (!store.context_bias.empty() || !store.target_bias.empty()) {
    std::vector<double> biases(store.vocab_size * 2, 0.0);
    for (std::size_t i = 0; i < store.vocab_size; ++i) {
      biases[2 * i] = store.bias_of_context(static_cast<WordId>(i));
      biases[2 * i + 1] = store.bias_of_target(static_cast<WordId>(i));
    }
    auto out = detail::open_out(path.string() + ".bias");
    write_embeddings({Geometry::euclidean, 2, biases}, lexicon, out);
  }
}

struct Checkpoint {
  ParameterStore store;
  Lexicon lexicon;
  Metadata metadata;
  std::size_t epoch = 0;
  std::uint64_t pairs = 0;
  std::vector<std::string> rng_state;
};

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  auto targets = load_embeddings(path);
  Checkpoint ck;
  ck.metadata = targets.metadata;
  if (!detail::parse_number(std::string_view(ck.metadata.require("checkpoint_epoch")), ck.epoch) ||
      !detail::parse_number(std::string_view(ck.metadata.require("checkpoint_pairs")), ck.pairs)) {
    throw ParseError(path.string() + ": malformed checkpoint state");
  }
  std::size_t workers = 0;
  if (!detail::parse_number(std::string_view(ck.metadata.require("checkpoint_workers")), workers)) {
    throw ParseError(path.string() + ": malformed checkpoint state");
  }
  for (std::size_t w = 0; w < workers; ++w) {
    ck.rng_state.push_back(ck.metadata.require("checkpoint_rng_" + std::to_string(w)));
  }
  const bool cb = ck.metadata.require("has_context_bias") == "true";
  const bool tb = ck.metadata.require("has_target_bias") == "true";
  auto ctx_in = detail::open_in(path.string() + ".context");
  auto contexts = read_embeddings(ctx_in, targets.geometry, path.string() + ".context");
  if (contexts.lexicon.words() != targets.lexicon.words() || contexts.dim != targets.dim) {
    throw ParseError(path.string() + ".context does not match the target table");
  }
  ck.store = ParameterStore(targets.geometry, targets.lexicon.size(), targets.dim, cb, tb);
  ck.store.target = std::move(targets.data);
  ck.store.context = std::move(contexts.data);
  if (cb || tb) {
    auto bias_in = detail::open_in(path.string() + ".bias");
    auto biases = read_embeddings(bias_in, Geometry::euclidean, path.string() + ".bias");
    if (biases.lexicon.words() != targets.lexicon.words() || biases.dim != 2) {
      throw ParseError(path.string() + ".bias does not match the target table");
    }
    for (std::size_t i = 0; i < ck.store.vocab_size; ++i) {
      if (cb) ck.store.context_bias[i] = biases.data[2 * i];
      if (tb) ck.store.target_bias[i] = biases.data[2 * i + 1];
    }
  }
  ck.lexicon = std::move(targets.lexicon);
  return ck;
}

/// HyperLex-style table: a header row of column names (WORD1, WORD2, score columns...) and
/// whitespace-separated data rows. Words are lowercased like corpus tokens.
inline std::vector<eval::HyperLexRecord> read_hyperlex(std::istream& in, const std::string& score_column,
                                                       const std::string& name = "hyperlex") {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++line_no;
    header = text::split(line, false, line_no);
  }
  if (header.empty()) throw ParseError(name + ": missing header line", line_no);
  const auto column = [&](const std::string& col) {
    const auto it = std::find(header.begin(), header.end(), col);
    if (it == header.end()) {
      std::string available;
      for (const auto& h : header) available += (available.empty() ? "" : ", ") + h;
      throw ParseError(name + ": no column '" + col + "'; available columns: " + available, line_no);
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c1 = column("WORD1"), c2 = column("WORD2"), cs = column(score_column);
  std::vector<eval::HyperLexRecord> records;
  while (std::getline(in, line)) {
    ++line_no;
    const auto f = text::split(line, false, line_no);
    if (f.empty()) continue;
    if (f.size() != header.size()) {
      throw ParseError(name + ":" + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                           " fields, found " + std::to_string(f.size()),
                       line_no);
    }
    double score = 0.0;
    if (!detail::parse_number(std::string_view(f[cs]), score) || !std::isfinite(score)) {
      throw ParseError(name + ":" + std::to_string(line_no) + ": non-numeric score '" + f[cs] + "'", line_no);
    }
    records.push_back({text::tokenize_line(f[c1]).at(0), text::tokenize_line(f[c2]).at(0), score});
  }
  return records;
}

inline std::vector<eval::HyperLexRecord> parse_hyperlex_file(const std::filesystem::path& path,
                                                             const std::string& score_column) {
  auto in = detail::open_in(path);
  return read_hyperlex(in, score_column, path.string());
}

/// Four whitespace-separated words per line; lines starting with ':' are section headers.
inline std::vector<eval::AnalogyQuery> read_analogies(std::istream& in, const std::string& name = "analogy") {
  std::vector<eval::AnalogyQuery> queries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto f = text::tokenize_line(line, line_no);
    if (f.empty() || f[0].starts_with(':')) continue;
    if (f.size() != 4) {
      throw ParseError(name + ":" + std::to_string(line_no) + ": expected 4 words, found " +
                           std::to_string(f.size()),
                       line_no);
    }
    queries.push_back({f[0], f[1], f[2], f[3]});
  }
  return queries;
}

inline std::vector<eval::AnalogyQuery> parse_analogy_file(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  return read_analogies(in, path.string());
}

}  // namespace hypw2v::io
