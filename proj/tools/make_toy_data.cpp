// Writes the synthetic corpora and evaluation sets used by the acceptance suite:
//   <dir>/hierarchy.{en,de}, <dir>/translation.{en,de}, <dir>/hyperlex.txt, <dir>/analogy.txt

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hypw2v/synthetic.hpp"

namespace {

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  for (const auto& l : lines) out << l << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate toy parallel corpora and evaluation files", "make_toy_data"};
  std::string dir = "toy";
  std::uint64_t seed = 0;
  app.add_option("--dir", dir, "output directory")->capture_default_str();
  auto* seed_opt = app.add_option("--seed", seed, "override the generator seeds");
  CLI11_PARSE(app, argc, argv);

  try {
    std::filesystem::create_directories(dir);
    const std::filesystem::path root(dir);
    const auto hierarchy = seed_opt->count() ? hypw2v::synthetic::hierarchy_corpus(200, 5, 5, seed)
                                             : hypw2v::synthetic::hierarchy_corpus();
    const auto translation = seed_opt->count() ? hypw2v::synthetic::translation_corpus(500, 20, seed)
                                               : hypw2v::synthetic::translation_corpus();
    write_lines(root / "hierarchy.en", hierarchy.src_lines);
    write_lines(root / "hierarchy.de", hierarchy.tgt_lines);
    write_lines(root / "translation.en", translation.src_lines);
    write_lines(root / "translation.de", translation.tgt_lines);
    write_lines(root / "hyperlex.txt", hypw2v::synthetic::hyperlex_lines());
    write_lines(root / "analogy.txt", hypw2v::synthetic::analogy_lines());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  std::cout << "wrote toy data to " << dir << '\n';
  return 0;
}
