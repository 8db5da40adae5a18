#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "hypw2v/corpus.hpp"
#include "hypw2v/error.hpp"

namespace hypw2v {

enum class Geometry { euclidean, poincare };

inline std::string_view to_string(Geometry g) { return g == Geometry::poincare ? "poincare" : "euclidean"; }

inline std::optional<Geometry> parse_geometry(std::string_view s) {
  if (s == "poincare") return Geometry::poincare;
  if (s == "euclidean") return Geometry::euclidean;
  return std::nullopt;
}

/// Read-only V x dim row-major matrix of word vectors tagged with its geometry.
struct EmbeddingView {
  Geometry geometry = Geometry::euclidean;
  std::size_t dim = 0;
  std::span<const double> data;

  std::size_t size() const { return dim == 0 ? 0 : data.size() / dim; }
  std::span<const double> row(WordId id) const { return data.subspan(std::size_t{id} * dim, dim); }
};

}  // namespace hypw2v
