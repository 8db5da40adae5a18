#pragma once

// Command-line front end. run_command returns 0 on success, 1 on runtime failure and 2 on
// usage errors (unknown flags, invalid option values).

#include <algorithm>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hypw2v/corpus.hpp"
#include "hypw2v/error.hpp"
#include "hypw2v/eval.hpp"
#include "hypw2v/io.hpp"
#include "hypw2v/model.hpp"

namespace hypw2v::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct TrainArgs {
  std::string src_corpus, tgt_corpus, out, resume;
  std::string geometry = "poincare";
  std::size_t dim = 100;
  bool bias = false;
  bool target_bias = false;
  std::size_t epochs = 5;
  double lr = 0.0;
  double lr_min = 0.0;
  int window = 5;
  std::uint64_t min_count = 100;
  std::size_t negatives = 5;
  std::size_t threads = 1;
  std::uint64_t seed = 1;
  std::string retraction = "exp";
  double alpha = eval::kDefaultAlpha;
  double subsample = 0.0;
  bool cross_window = false;
  bool lang_tags = false;
  std::string src_lang = "de";
  std::string tgt_lang = "en";
  double smoothing = 0.75;
  double init_radius = 1e-3;
  double ball_epsilon = geometry::kBallEpsilon;
  std::size_t checkpoint_every = 0;
};

/// Sidecar metadata describing a training run; every default is written out explicitly.
inline io::Metadata run_metadata(const TrainArgs& a, const ModelConfig& c, const Vocabulary& vocab,
                                 const ParallelCorpus& corpus) {
  io::Metadata m;
  m.set("geometry", std::string(to_string(c.geometry)));
  m.set("dim", std::to_string(c.dim));
  m.set("use_bias", c.use_bias ? "true" : "false");
  m.set("target_bias", c.target_bias ? "true" : "false");
  m.set("h_function", c.geometry == Geometry::poincare ? "cosh2" : "none");
  m.set("min_count", std::to_string(a.min_count));
  m.set("window", std::to_string(c.window));
  m.set("cross_window", c.cross_window ? "true" : "false");
  m.set("negatives", std::to_string(c.negatives));
  m.set("smoothing_power", io::format_real(c.smoothing_power));
  m.set("subsample", io::format_real(c.subsample));
  m.set("learning_rate", io::format_real(c.learning_rate));
  m.set("lr_min", io::format_real(c.lr_min));
  m.set("epochs", std::to_string(c.epochs));
  m.set("seed", std::to_string(c.seed));
  m.set("threads", std::to_string(c.threads));
  m.set("retraction", std::string(to_string(c.retraction)));
  m.set("init_radius", io::format_real(c.init_radius));
  m.set("ball_epsilon", io::format_real(c.ball_epsilon));
  m.set("alpha", io::format_real(a.alpha));
  m.set("src_corpus", a.src_corpus);
  m.set("tgt_corpus", a.tgt_corpus);
  m.set("src_tag", a.lang_tags ? a.src_lang + ":" : "");
  m.set("tgt_tag", a.lang_tags ? a.tgt_lang + ":" : "");
  m.set("sentence_pairs", std::to_string(corpus.pairs.size()));
  m.set("dropped_pairs", std::to_string(corpus.dropped));
  m.set("vocab_size", std::to_string(vocab.size()));
  m.set("total_tokens", std::to_string(vocab.total_tokens()));
  return m;
}

inline ModelConfig model_config(const TrainArgs& a, bool lr_given, bool lr_min_given) {
  const auto g = parse_geometry(a.geometry);
  if (!g) throw ConfigError("unknown geometry " + a.geometry);
  ModelConfig c = ModelConfig::defaults_for(*g);
  c.dim = a.dim;
  c.use_bias = a.bias;
  c.target_bias = a.target_bias;
  c.negatives = a.negatives;
  if (lr_given) c.learning_rate = a.lr;
  c.lr_min = lr_min_given ? a.lr_min : 1e-4 * c.learning_rate;
  c.epochs = a.epochs;
  c.seed = a.seed;
  c.ball_epsilon = a.ball_epsilon;
  c.retraction = a.retraction == "exp" ? Retraction::exp_map : Retraction::first_order;
  c.init_radius = a.init_radius;
  c.window = a.window;
  c.smoothing_power = a.smoothing;
  c.subsample = a.subsample;
  c.cross_window = a.cross_window;
  c.threads = a.threads;
  c.validate();
  return c;
}

inline CorpusOptions corpus_options(bool lang_tags, const std::string& src_lang, const std::string& tgt_lang) {
  if (!lang_tags) return {};
  return {src_lang + ":", tgt_lang + ":"};
}

inline std::filesystem::path vocab_path(const std::filesystem::path& embeddings) {
  return embeddings.string() + ".vocab";
}

inline void run_train(const TrainArgs& a, bool lr_given, bool lr_min_given, std::ostream& out) {
  const ModelConfig config = model_config(a, lr_given, lr_min_given);
  const ParallelCorpus corpus =
      load_parallel_corpus(a.src_corpus, a.tgt_corpus, corpus_options(a.lang_tags, a.src_lang, a.tgt_lang));
  if (corpus.pairs.empty()) throw IngestionError("corpus has no non-empty sentence pairs");
  const Vocabulary vocab = build_vocabulary(corpus, a.min_count);
  const auto encoded = encode_corpus(corpus, vocab);
  io::Metadata meta = run_metadata(a, config, vocab, corpus);
  out << "corpus: " << corpus.pairs.size() << " sentence pairs (" << corpus.dropped << " dropped), vocabulary "
      << vocab.size() << " words, " << vocab.total_tokens() << " tokens\n";

  TrainOptions options;
  if (!a.resume.empty()) {
    io::Checkpoint ck = io::load_checkpoint(a.resume);
    if (ck.lexicon.words() != vocab.words()) throw ConfigError("checkpoint vocabulary does not match the corpus");
    options.initial = std::move(ck.store);
    options.start_epoch = ck.epoch;
    options.start_pairs = ck.pairs;
    options.rng_state = std::move(ck.rng_state);
    meta.set("resumed_from", a.resume);
  }
  if (a.checkpoint_every > 0) {
    options.on_epoch_end = [&](const ParameterStore& store, const TrainStats& stats) {
      if (stats.epoch % a.checkpoint_every == 0) io::save_checkpoint(store, vocab, meta, stats, a.out + ".ckpt");
    };
  }
  const TrainResult result = train(encoded, vocab, config, std::move(options));
  const TrainStats& s = result.stats;
  for (std::size_t e = 0; e < s.epoch_mean_loss.size(); ++e) {
    out << "epoch " << e + 1 << ": mean loss " << s.epoch_mean_loss[e] << '\n';
  }
  out << "pairs processed " << s.pairs_processed << ", skipped singular " << s.skipped_singular
      << ", saturated terms " << s.saturated_terms << '\n';
  io::save_embeddings(result.store.targets(), vocab, meta, a.out);
  std::ofstream vout(vocab_path(a.out), std::ios::binary);
  write_vocabulary(vocab, vout);
  if (!vout) throw Error("failed writing " + vocab_path(a.out).string());
  out << "wrote " << a.out << '\n';
}

inline std::string model_fields(const io::LoadedEmbeddings& emb, const std::string& path) {
  return " embeddings=" + path + " geometry=" + std::string(to_string(emb.geometry)) + " dim=" +
         std::to_string(emb.dim);
}

inline void print_report(const eval::EvalReport& report, const io::LoadedEmbeddings& emb, const std::string& path,
                         std::ostream& out) {
  out << report.to_text() << '\n';
  out << report.to_record() << model_fields(emb, path) << '\n';
}

inline void print_neighbors(const std::vector<eval::Neighbor>& ns, const io::LoadedEmbeddings& emb,
                            std::ostream& out) {
  for (const auto& n : ns) {
    out << emb.lexicon.word(n.id) << '\t' << n.distance << '\t' << geometry::norm(emb.view().row(n.id)) << '\n';
  }
}

/// Parses args (without the program name) and runs the selected subcommand.
inline int run_command(std::vector<std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Cross-lingual word embeddings in the Poincare ball and Euclidean space", "hypw2v"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "train embeddings on a line-aligned parallel corpus");
  train_cmd->add_option("--src-corpus", ta.src_corpus, "source-language corpus, one sentence per line")->required();
  train_cmd->add_option("--tgt-corpus", ta.tgt_corpus, "target-language corpus, line-aligned with the source")
      ->required();
  train_cmd->add_option("--out", ta.out, "output embedding file")->required();
  train_cmd->add_option("--geometry", ta.geometry)->check(CLI::IsMember({"poincare", "euclidean"}))
      ->capture_default_str();
  train_cmd->add_option("--dim", ta.dim)->capture_default_str();
  train_cmd->add_flag("--bias", ta.bias, "scalar bias per context word");
  train_cmd->add_flag("--target-bias", ta.target_bias, "additional scalar bias per target word");
  train_cmd->add_option("--epochs", ta.epochs)->capture_default_str();
  auto* lr_opt = train_cmd->add_option("--lr", ta.lr, "initial learning rate (0.05 poincare, 0.025 euclidean)");
  auto* lr_min_opt = train_cmd->add_option("--lr-min", ta.lr_min, "final learning rate (1e-4 x initial)");
  train_cmd->add_option("--window", ta.window)->capture_default_str();
  train_cmd->add_option("--min-count", ta.min_count)->capture_default_str();
  train_cmd->add_option("--negatives", ta.negatives)->capture_default_str();
  train_cmd->add_option("--threads", ta.threads)->capture_default_str();
  train_cmd->add_option("--seed", ta.seed)->capture_default_str();
  train_cmd->add_option("--retraction", ta.retraction)->check(CLI::IsMember({"exp", "first-order"}))
      ->capture_default_str();
  train_cmd->add_option("--alpha", ta.alpha, "is-a weight recorded for later evaluation")->capture_default_str();
  train_cmd->add_option("--subsample", ta.subsample, "frequent-word subsampling threshold, 0 = off")
      ->capture_default_str();
  train_cmd->add_flag("--cross-window", ta.cross_window, "pair words with the window around their index in the other language");
  train_cmd->add_flag("--lang-tags", ta.lang_tags, "prefix tokens with '<lang>:' so both languages stay apart");
  train_cmd->add_option("--src-lang", ta.src_lang)->capture_default_str();
  train_cmd->add_option("--tgt-lang", ta.tgt_lang)->capture_default_str();
  train_cmd->add_option("--smoothing", ta.smoothing, "negative sampling exponent")->capture_default_str();
  train_cmd->add_option("--init-radius", ta.init_radius)->capture_default_str();
  train_cmd->add_option("--ball-epsilon", ta.ball_epsilon)->capture_default_str();
  train_cmd->add_option("--checkpoint-every", ta.checkpoint_every, "write <out>.ckpt every N epochs, 0 = never")
      ->capture_default_str();
  train_cmd->add_option("--resume", ta.resume, "checkpoint to continue from");

  std::string embeddings, dataset, score_column = "AVG_SCORE", word, vocab_file, metric = "cosine", out_file;
  double alpha = eval::kDefaultAlpha;
  std::size_t k = 5;

  auto* hyperlex_cmd = app.add_subcommand("eval-hyperlex", "Spearman correlation of is-a scores with graded ratings");
  hyperlex_cmd->add_option("--embeddings", embeddings)->required();
  hyperlex_cmd->add_option("--dataset", dataset)->required();
  hyperlex_cmd->add_option("--score-column", score_column)->capture_default_str();
  hyperlex_cmd->add_option("--alpha", alpha)->capture_default_str();

  auto* analogy_cmd = app.add_subcommand("eval-analogy", "3CosAdd analogy accuracy");
  analogy_cmd->add_option("--embeddings", embeddings)->required();
  analogy_cmd->add_option("--dataset", dataset)->required();

  auto* children_cmd = app.add_subcommand("query-children", "nearest neighbors with a larger norm than the query");
  children_cmd->add_option("--embeddings", embeddings)->required();
  children_cmd->add_option("--word", word)->required();
  children_cmd->add_option("--k", k)->capture_default_str();

  auto* neighbors_cmd = app.add_subcommand("query-neighbors", "nearest neighbors of a word");
  neighbors_cmd->add_option("--embeddings", embeddings)->required();
  neighbors_cmd->add_option("--word", word)->required();
  neighbors_cmd->add_option("--k", k)->capture_default_str();
  neighbors_cmd->add_option("--metric", metric)->check(CLI::IsMember({"cosine", "poincare"}))->capture_default_str();

  auto* normfreq_cmd = app.add_subcommand("report-norm-freq", "Spearman correlation of 1/frequency with norm");
  normfreq_cmd->add_option("--embeddings", embeddings)->required();
  normfreq_cmd->add_option("--vocab", vocab_file, "word<TAB>count file (default <embeddings>.vocab)");

  std::string dv_src, dv_tgt, dv_src_lang = "de", dv_tgt_lang = "en";
  std::uint64_t dv_min_count = 100;
  bool dv_tags = false;
  auto* dump_cmd = app.add_subcommand("dump-vocab", "print the shared vocabulary as word<TAB>count");
  dump_cmd->add_option("--src-corpus", dv_src)->required();
  dump_cmd->add_option("--tgt-corpus", dv_tgt)->required();
  dump_cmd->add_option("--min-count", dv_min_count)->capture_default_str();
  dump_cmd->add_flag("--lang-tags", dv_tags);
  dump_cmd->add_option("--src-lang", dv_src_lang)->capture_default_str();
  dump_cmd->add_option("--tgt-lang", dv_tgt_lang)->capture_default_str();
  dump_cmd->add_option("--out", out_file, "write to a file instead of stdout");

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*train_cmd) {
      run_train(ta, lr_opt->count() > 0, lr_min_opt->count() > 0, out);
    } else if (*hyperlex_cmd) {
      const auto emb = io::load_embeddings(embeddings);
      const auto records = io::parse_hyperlex_file(dataset, score_column);
      print_report(eval::eval_hyperlex(records, emb.view(), emb.lexicon, alpha), emb, embeddings, out);
    } else if (*analogy_cmd) {
      const auto emb = io::load_embeddings(embeddings);
      const auto queries = io::parse_analogy_file(dataset);
      print_report(eval::eval_analogy(queries, emb.view(), emb.lexicon), emb, embeddings, out);
    } else if (*children_cmd) {
      const auto emb = io::load_embeddings(embeddings);
      print_neighbors(eval::closest_children(text::tokenize_line(word).at(0), k, emb.view(), emb.lexicon), emb, out);
    } else if (*neighbors_cmd) {
      const auto emb = io::load_embeddings(embeddings);
      print_neighbors(
          eval::nearest_neighbors(text::tokenize_line(word).at(0), k, emb.view(), emb.lexicon, metric == "cosine"),
          emb, out);
    } else if (*normfreq_cmd) {
      const auto emb = io::load_embeddings(embeddings);
      const auto path = vocab_file.empty() ? vocab_path(embeddings) : std::filesystem::path(vocab_file);
      std::ifstream in(path);
      if (!in) throw Error("cannot read vocabulary file " + path.string());
      const Vocabulary vocab = read_vocabulary(in);
      if (vocab.words() != emb.lexicon.words()) throw Error("vocabulary file does not match the embedding file");
      const double rho = eval::norm_frequency_correlation(emb.view(), vocab);
      out << "norm-frequency spearman: " << rho << " over " << vocab.size() << " words\n";
      out << "task=norm_frequency metric=" << io::format_real(rho) << " evaluated=" << vocab.size()
          << " skipped_oov=0" << model_fields(emb, embeddings) << '\n';
    } else if (*dump_cmd) {
      const auto corpus = load_parallel_corpus(dv_src, dv_tgt, corpus_options(dv_tags, dv_src_lang, dv_tgt_lang));
      const Vocabulary vocab = build_vocabulary(corpus, dv_min_count);
      if (out_file.empty()) {
        write_vocabulary(vocab, out);
      } else {
        std::ofstream f(out_file, std::ios::binary);
        write_vocabulary(vocab, f);
        if (!f) throw Error("failed writing " + out_file);
      }
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace hypw2v::cli
