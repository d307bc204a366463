#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "vagtm/decoder.hpp"
#include "vagtm/types.hpp"

namespace vagtm {

// Boolean sliding-window statistics over a reference corpus: every token
// position opens a window of `window_size` tokens (truncated at the document
// end), and a word or unordered pair is counted at most once per window.
class CooccurrenceCounts {
 public:
  CooccurrenceCounts(Index window_size, std::uint64_t n_windows,
                     std::vector<std::string> words,
                     std::vector<std::uint64_t> word_counts,
                     std::unordered_map<std::uint64_t, std::uint64_t>
                         pair_counts);

  Index window_size() const { return window_size_; }
  std::uint64_t n_windows() const { return n_windows_; }

  std::uint64_t word_count(const std::string& word) const;
  std::uint64_t pair_count(const std::string& a, const std::string& b) const;
  Scalar word_probability(const std::string& word) const;
  Scalar pair_probability(const std::string& a, const std::string& b) const;

 private:
  Index window_size_;
  std::uint64_t n_windows_;
  std::unordered_map<std::string, std::size_t> word_ids_;
  std::vector<std::uint64_t> word_counts_;
  std::unordered_map<std::uint64_t, std::uint64_t> pair_counts_;
};

CooccurrenceCounts count_cooccurrences(
    const std::vector<std::vector<std::string>>& reference_docs,
    const std::set<std::string>& vocab, Index window);

struct TopicTopWords {
  std::vector<std::string> words;
};

inline constexpr Scalar kCoherenceEps = 1e-12;

// Mean pairwise NPMI over unordered word pairs; pairs with a zero marginal
// score 0 and results are clamped to [-1, 1].
Scalar npmi_coherence(const TopicTopWords& topic,
                      const CooccurrenceCounts& counts);

// Mean pairwise PMI.
Scalar uci_coherence(const TopicTopWords& topic,
                     const CooccurrenceCounts& counts);

// Mean Fitelson confirmation over all ordered pairs (i != j):
// (P(i|j) - P(i|not j)) / (P(i|j) + P(i|not j)); undefined terms score 0.
Scalar cp_coherence(const TopicTopWords& topic,
                    const CooccurrenceCounts& counts);

// Mean pairwise cosine similarity between per-word NPMI context vectors
// taken over the topic's own word set.
Scalar ca_coherence(const TopicTopWords& topic,
                    const CooccurrenceCounts& counts);

// Conventional window sizes: NPMI/UCI 10, C_P 70, C_A 5.
Index default_window(const std::string& metric);

// Mean of the top ceil(proportion * n) scores.
Scalar aggregate_at_proportion(std::vector<Scalar> scores, Scalar proportion);

// Cosine similarities between topic mean vectors; rows of `means` are topics.
Matrix topic_correlation(const Matrix& means);
Matrix topic_correlation(const TopicGaussians& topics);

// Per topic: the n words with the largest log phi, ties broken by ascending
// vocabulary index.
std::vector<TopicTopWords> top_words(const TopicWordMatrix& phi,
                                     const std::vector<std::string>& vocab,
                                     Index n);

}  // namespace vagtm
