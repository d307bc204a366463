#pragma once

#include <string>
#include <utility>
#include <vector>

#include "vagtm/types.hpp"

namespace vagtm {

// A pruned bag-of-words corpus. The vocabulary is sorted lexicographically,
// which makes save/load round trips stable.
struct Corpus {
  std::vector<std::string> vocab;
  // per document: (word index, raw count), sorted by index, counts >= 1
  std::vector<std::vector<std::pair<Index, Scalar>>> docs;
  std::vector<Index> doc_freq;  // per word, over the retained documents

  Index n_docs() const { return static_cast<Index>(docs.size()); }
  Index vocab_size() const { return static_cast<Index>(vocab.size()); }
};

struct TfidfVector {
  Vector values;  // length V, entries tf * ln(n_docs / doc_freq)
  Index doc_index = 0;
};

struct EmbeddingMatrix {
  Matrix vectors;  // V x D, one row per vocabulary word
  Index dim() const { return vectors.cols(); }
};

// Splits on whitespace and lowercases (ASCII).
std::vector<std::string> tokenize_line(const std::string& line);

// One document per line. Lines with no tokens are ignored.
std::vector<std::vector<std::string>> read_token_lines(
    const std::string& path);

// Builds a corpus from tokenized documents: words are kept iff their
// document frequency lies in [min_df, max_df_fraction * n_docs]; documents
// emptied by the pruning are dropped. Throws if nothing survives.
Corpus corpus_from_documents(
    const std::vector<std::vector<std::string>>& documents, Index min_df,
    Scalar max_df_fraction);

Corpus load_corpus(const std::string& path, Index min_df,
                   Scalar max_df_fraction);

// One line per document, tokens repeated by count, in vocabulary order.
// load_corpus(save_corpus(c), 1, 1.0) reproduces c exactly.
void save_corpus(const Corpus& corpus, const std::string& path);

// Raw term frequency times ln(n_docs / doc_freq); no normalization.
TfidfVector tfidf_vector(const Corpus& corpus, Index doc_index);

struct EmbeddingLoadResult {
  EmbeddingMatrix embeddings;
  Index n_fallback = 0;  // vocabulary words absent from the file
};

// Text format `word f1 f2 ... fD`, constant D; an optional first line
// `COUNT DIM` (two integers) is skipped. Duplicate words: last one wins.
// Vocabulary words missing from the file get a deterministic pseudo-random
// vector from N(0, 0.1^2 I), seeded by a hash of the word.
EmbeddingLoadResult load_embeddings(const std::string& path,
                                    const std::vector<std::string>& vocab);

Vector fallback_embedding(const std::string& word, Index dim);

}  // namespace vagtm
