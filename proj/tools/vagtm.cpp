// Command-line front end: train models, print topic top words, score
// coherence against a reference corpus, and emit topic correlation matrices.
//
// Exit codes: 0 success, 1 bad flags or unreadable/invalid files,
// 2 training diverged (non-finite loss).

#include <cstdio>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vagtm/checkpoint.hpp"
#include "vagtm/coherence.hpp"
#include "vagtm/corpus.hpp"
#include "vagtm/trainer.hpp"

namespace {

using namespace vagtm;

std::string fixed6(Scalar value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  return buf;
}

struct TrainOptions {
  std::string corpus_path;
  std::string embeddings_path;
  std::string out_path;
  std::string model = "vagtm";
  std::string prior = "laplace";
  std::string covariance = "diagonal";
  TrainConfig config;
  Index min_df = 1;
  Scalar max_df_fraction = 1.0;
};

int run_train(const TrainOptions& options) {
  TrainConfig config = options.config;
  config.model_kind =
      options.model == "vagtm-ip" ? ModelKind::vagtm_ip : ModelKind::vagtm;
  config.prior = options.prior == "standard" ? PriorKind::standard_normal
                                             : PriorKind::laplace_dirichlet;
  config.covariance = options.covariance == "spherical"
                          ? Covariance::spherical
                          : Covariance::diagonal;
  config.validate();

  Corpus corpus =
      load_corpus(options.corpus_path, options.min_df, options.max_df_fraction);
  EmbeddingLoadResult loaded =
      load_embeddings(options.embeddings_path, corpus.vocab);
  if (loaded.n_fallback > 0) {
    std::cerr << loaded.n_fallback
              << " vocabulary words missing from the embedding file; "
                 "deterministic fallback vectors assigned\n";
  }
  ModelCheckpoint checkpoint =
      train(corpus, loaded.embeddings, config, [](Index epoch, Scalar elbo) {
        std::cout << "epoch " << epoch << " elbo " << fixed6(elbo) << "\n";
      });
  write_checkpoint(checkpoint, options.out_path);
  return 0;
}

int run_topics(const std::string& model_path, Index top_n) {
  ModelCheckpoint checkpoint = read_checkpoint(model_path);
  TopicWordMatrix phi =
      topic_word_matrix(checkpoint.topics, checkpoint.decoder_embeddings());
  for (const auto& topic : top_words(phi, checkpoint.vocab, top_n)) {
    for (std::size_t i = 0; i < topic.words.size(); ++i) {
      if (i > 0) std::cout << '\t';
      std::cout << topic.words[i];
    }
    std::cout << '\n';
  }
  return 0;
}

std::vector<TopicTopWords> read_topics_file(const std::string& path) {
  std::vector<TopicTopWords> topics;
  for (auto& tokens : read_token_lines(path)) {
    topics.push_back(TopicTopWords{std::move(tokens)});
  }
  if (topics.empty()) {
    throw std::runtime_error("topics file has no topics: " + path);
  }
  return topics;
}

int run_coherence(const std::string& topics_path, const std::string& ref_path,
                  const std::string& metric, Index window,
                  Scalar proportion) {
  const std::vector<TopicTopWords> topics = read_topics_file(topics_path);
  const auto reference = read_token_lines(ref_path);

  std::set<std::string> counting_vocab;
  for (const auto& topic : topics) {
    counting_vocab.insert(topic.words.begin(), topic.words.end());
  }
  if (window <= 0) window = default_window(metric);
  CooccurrenceCounts counts =
      count_cooccurrences(reference, counting_vocab, window);

  Scalar (*score)(const TopicTopWords&, const CooccurrenceCounts&) = nullptr;
  if (metric == "npmi") score = npmi_coherence;
  else if (metric == "uci") score = uci_coherence;
  else if (metric == "cp") score = cp_coherence;
  else if (metric == "ca") score = ca_coherence;
  else throw std::runtime_error("unknown coherence metric: " + metric);

  std::vector<Scalar> scores;
  scores.reserve(topics.size());
  for (std::size_t k = 0; k < topics.size(); ++k) {
    scores.push_back(score(topics[k], counts));
    std::cout << k << '\t' << metric << '\t' << fixed6(scores.back()) << '\n';
  }
  std::cout << "aggregate\t" << fixed6(aggregate_at_proportion(scores, proportion))
            << '\n';
  return 0;
}

int run_correlate(const std::string& model_path) {
  ModelCheckpoint checkpoint = read_checkpoint(model_path);
  Matrix corr = topic_correlation(checkpoint.topics);
  for (Index i = 0; i < corr.rows(); ++i) {
    for (Index j = 0; j < corr.cols(); ++j) {
      if (j > 0) std::cout << '\t';
      std::cout << fixed6(corr(i, j));
    }
    std::cout << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian topic models over word embeddings"};
  app.require_subcommand(1);

  TrainOptions train_options;
  CLI::App* cmd_train = app.add_subcommand("train", "train a model");
  cmd_train->add_option("--corpus", train_options.corpus_path,
                        "corpus file, one document per line")->required();
  cmd_train->add_option("--embeddings", train_options.embeddings_path,
                        "embedding file: word f1 ... fD")->required();
  cmd_train->add_option("--out", train_options.out_path,
                        "checkpoint output path")->required();
  cmd_train->add_option("--model", train_options.model)
      ->check(CLI::IsMember({"vagtm", "vagtm-ip"}));
  cmd_train->add_option("--topics", train_options.config.n_topics);
  cmd_train->add_option("--epochs", train_options.config.epochs);
  cmd_train->add_option("--batch-size", train_options.config.batch_size);
  cmd_train->add_option("--lr", train_options.config.learning_rate);
  cmd_train->add_option("--hidden", train_options.config.hidden_dim);
  cmd_train->add_option("--coupling-layers",
                        train_options.config.coupling_layers);
  cmd_train->add_option("--alpha", train_options.config.alpha);
  cmd_train->add_option("--prior", train_options.prior)
      ->check(CLI::IsMember({"laplace", "standard"}));
  cmd_train->add_option("--cov", train_options.covariance)
      ->check(CLI::IsMember({"diagonal", "spherical"}));
  cmd_train->add_option("--seed", train_options.config.seed);
  cmd_train->add_option("--min-df", train_options.min_df);
  cmd_train->add_option("--max-df", train_options.max_df_fraction);

  std::string topics_model;
  Index top_n = 10;
  CLI::App* cmd_topics =
      app.add_subcommand("topics", "print top words per topic as TSV");
  cmd_topics->add_option("--model", topics_model)->required();
  cmd_topics->add_option("--top-n", top_n);

  std::string coherence_topics, coherence_ref, coherence_metric = "npmi";
  Index coherence_window = 0;  // 0: metric default
  Scalar coherence_proportion = 1.0;
  CLI::App* cmd_coherence = app.add_subcommand(
      "coherence", "score topics against a reference corpus");
  cmd_coherence->add_option("--topics-file", coherence_topics)->required();
  cmd_coherence->add_option("--ref-corpus", coherence_ref)->required();
  cmd_coherence->add_option("--metric", coherence_metric)
      ->check(CLI::IsMember({"npmi", "uci", "cp", "ca"}));
  cmd_coherence->add_option("--window", coherence_window);
  cmd_coherence->add_option("--proportion", coherence_proportion);

  std::string correlate_model;
  CLI::App* cmd_correlate =
      app.add_subcommand("correlate", "print the K x K topic correlation TSV");
  cmd_correlate->add_option("--model", correlate_model)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*cmd_train) return run_train(train_options);
    if (*cmd_topics) return run_topics(topics_model, top_n);
    if (*cmd_coherence) {
      return run_coherence(coherence_topics, coherence_ref, coherence_metric,
                           coherence_window, coherence_proportion);
    }
    if (*cmd_correlate) return run_correlate(correlate_model);
  } catch (const TrainingDivergence& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
