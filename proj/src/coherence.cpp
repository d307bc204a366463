#include "vagtm/coherence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace vagtm {

namespace {

std::uint64_t pair_key(std::size_t a, std::size_t b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
}

}  // namespace

CooccurrenceCounts::CooccurrenceCounts(
    Index window_size, std::uint64_t n_windows,
    std::vector<std::string> words, std::vector<std::uint64_t> word_counts,
    std::unordered_map<std::uint64_t, std::uint64_t> pair_counts)
    : window_size_(window_size),
      n_windows_(n_windows),
      word_counts_(std::move(word_counts)),
      pair_counts_(std::move(pair_counts)) {
  for (std::size_t i = 0; i < words.size(); ++i) {
    word_ids_[words[i]] = i;
  }
}

std::uint64_t CooccurrenceCounts::word_count(const std::string& word) const {
  auto it = word_ids_.find(word);
  return it == word_ids_.end() ? 0 : word_counts_[it->second];
}

std::uint64_t CooccurrenceCounts::pair_count(const std::string& a,
                                             const std::string& b) const {
  auto ia = word_ids_.find(a);
  auto ib = word_ids_.find(b);
  if (ia == word_ids_.end() || ib == word_ids_.end()) return 0;
  if (ia->second == ib->second) return word_counts_[ia->second];
  auto it = pair_counts_.find(pair_key(ia->second, ib->second));
  return it == pair_counts_.end() ? 0 : it->second;
}

Scalar CooccurrenceCounts::word_probability(const std::string& word) const {
  return static_cast<Scalar>(word_count(word)) /
         static_cast<Scalar>(n_windows_);
}

Scalar CooccurrenceCounts::pair_probability(const std::string& a,
                                            const std::string& b) const {
  return static_cast<Scalar>(pair_count(a, b)) /
         static_cast<Scalar>(n_windows_);
}

CooccurrenceCounts count_cooccurrences(
    const std::vector<std::vector<std::string>>& reference_docs,
    const std::set<std::string>& vocab, Index window) {
  if (window < 1) throw std::invalid_argument("count_cooccurrences: window must be >= 1");
  if (reference_docs.empty()) {
    throw std::invalid_argument("count_cooccurrences: empty reference corpus");
  }
  std::vector<std::string> words(vocab.begin(), vocab.end());
  std::unordered_map<std::string, std::size_t> ids;
  for (std::size_t i = 0; i < words.size(); ++i) ids[words[i]] = i;

  std::vector<std::uint64_t> word_counts(words.size(), 0);
  std::unordered_map<std::uint64_t, std::uint64_t> pair_counts;
  std::uint64_t n_windows = 0;

  std::vector<std::int64_t> doc_ids;
  std::vector<std::size_t> in_window;
  for (const auto& doc : reference_docs) {
    doc_ids.clear();
    doc_ids.reserve(doc.size());
    for (const auto& token : doc) {
      auto it = ids.find(token);
      doc_ids.push_back(it == ids.end() ? -1
                                        : static_cast<std::int64_t>(it->second));
    }
    const auto len = static_cast<std::int64_t>(doc_ids.size());
    for (std::int64_t pos = 0; pos < len; ++pos) {
      ++n_windows;
      const std::int64_t end = std::min(pos + window, len);
      in_window.clear();
      for (std::int64_t q = pos; q < end; ++q) {
        if (doc_ids[q] >= 0) in_window.push_back(doc_ids[q]);
      }
      if (in_window.empty()) continue;
      std::sort(in_window.begin(), in_window.end());
      in_window.erase(std::unique(in_window.begin(), in_window.end()),
                      in_window.end());
      for (std::size_t i = 0; i < in_window.size(); ++i) {
        ++word_counts[in_window[i]];
        for (std::size_t j = i + 1; j < in_window.size(); ++j) {
          ++pair_counts[pair_key(in_window[i], in_window[j])];
        }
      }
    }
  }
  return CooccurrenceCounts(window, n_windows, std::move(words),
                            std::move(word_counts), std::move(pair_counts));
}

namespace {

// NPMI(a, b) with the shared eps/zero-marginal/clamp conventions.
Scalar npmi_pair(const std::string& a, const std::string& b,
                 const CooccurrenceCounts& counts) {
  const Scalar pa = counts.word_probability(a);
  const Scalar pb = counts.word_probability(b);
  if (pa == 0.0 || pb == 0.0) return 0.0;
  const Scalar pab = counts.pair_probability(a, b) + kCoherenceEps;
  const Scalar value = std::log(pab / (pa * pb)) / -std::log(pab);
  return std::clamp(value, -1.0, 1.0);
}

void require_topic(const TopicTopWords& topic) {
  if (topic.words.empty()) {
    throw std::invalid_argument("coherence: empty topic");
  }
}

}  // namespace

Scalar npmi_coherence(const TopicTopWords& topic,
                      const CooccurrenceCounts& counts) {
  require_topic(topic);
  const std::size_t n = topic.words.size();
  if (n < 2) return 0.0;
  Scalar total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      total += npmi_pair(topic.words[i], topic.words[j], counts);
      ++pairs;
    }
  }
  return total / static_cast<Scalar>(pairs);
}

Scalar uci_coherence(const TopicTopWords& topic,
                     const CooccurrenceCounts& counts) {
  require_topic(topic);
  const std::size_t n = topic.words.size();
  if (n < 2) return 0.0;
  Scalar total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const Scalar pa = counts.word_probability(topic.words[i]);
      const Scalar pb = counts.word_probability(topic.words[j]);
      if (pa > 0.0 && pb > 0.0) {
        const Scalar pab =
            counts.pair_probability(topic.words[i], topic.words[j]) +
            kCoherenceEps;
        total += std::log(pab / (pa * pb));
      }
      ++pairs;
    }
  }
  return total / static_cast<Scalar>(pairs);
}

Scalar cp_coherence(const TopicTopWords& topic,
                    const CooccurrenceCounts& counts) {
  require_topic(topic);
  const std::size_t n = topic.words.size();
  if (n < 2) return 0.0;
  Scalar total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      ++pairs;
      const Scalar pj = counts.word_probability(topic.words[j]);
      if (pj == 0.0 || pj == 1.0) continue;  // conditionals undefined
      const Scalar pi = counts.word_probability(topic.words[i]);
      const Scalar pij =
          counts.pair_probability(topic.words[i], topic.words[j]);
      const Scalar given = pij / pj;
      const Scalar given_not = (pi - pij) / (1.0 - pj);
      const Scalar denom = given + given_not;
      if (denom == 0.0) continue;
      total += (given - given_not) / denom;
    }
  }
  return total / static_cast<Scalar>(pairs);
}

Scalar ca_coherence(const TopicTopWords& topic,
                    const CooccurrenceCounts& counts) {
  require_topic(topic);
  const std::size_t n = topic.words.size();
  if (n < 2) return 0.0;
  // context vector of word i over the topic's own word set
  std::vector<Vector> context(n, Vector::Zero(static_cast<Index>(n)));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t u = 0; u < n; ++u) {
      context[i][static_cast<Index>(u)] =
          npmi_pair(topic.words[i], topic.words[u], counts);
    }
  }
  Scalar total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      ++pairs;
      const Scalar na = context[i].norm();
      const Scalar nb = context[j].norm();
      if (na == 0.0 || nb == 0.0) continue;
      total += context[i].dot(context[j]) / (na * nb);
    }
  }
  return total / static_cast<Scalar>(pairs);
}

Index default_window(const std::string& metric) {
  if (metric == "cp") return 70;
  if (metric == "ca") return 5;
  if (metric == "npmi" || metric == "uci") return 10;
  throw std::invalid_argument("unknown coherence metric: " + metric);
}

Scalar aggregate_at_proportion(std::vector<Scalar> scores,
                               Scalar proportion) {
  if (scores.empty()) {
    throw std::invalid_argument("aggregate_at_proportion: empty scores");
  }
  if (proportion <= 0.0 || proportion > 1.0) {
    throw std::invalid_argument(
        "aggregate_at_proportion: proportion must be in (0, 1]");
  }
  std::sort(scores.begin(), scores.end(), std::greater<>());
  const Scalar exact = proportion * static_cast<Scalar>(scores.size());
  // guard against 0.1 * 30 = 3.0000000000000004 tipping the ceiling
  auto take = static_cast<std::size_t>(std::ceil(exact - 1e-9));
  take = std::clamp<std::size_t>(take, 1, scores.size());
  const Scalar total =
      std::accumulate(scores.begin(), scores.begin() + take, 0.0);
  return total / static_cast<Scalar>(take);
}

Matrix topic_correlation(const Matrix& means) {
  const Index k = means.rows();
  if (k < 1) throw std::invalid_argument("topic_correlation: no topics");
  Vector norms(k);
  for (Index i = 0; i < k; ++i) {
    norms[i] = means.row(i).norm();
    if (norms[i] == 0.0) {
      throw std::invalid_argument("topic_correlation: zero-norm topic mean");
    }
  }
  Matrix result(k, k);
  for (Index i = 0; i < k; ++i) {
    result(i, i) = 1.0;
    for (Index j = i + 1; j < k; ++j) {
      const Scalar c = means.row(i).dot(means.row(j)) / (norms[i] * norms[j]);
      result(i, j) = c;
      result(j, i) = c;
    }
  }
  return result;
}

Matrix topic_correlation(const TopicGaussians& topics) {
  return topic_correlation(topics.means_matrix());
}

std::vector<TopicTopWords> top_words(const TopicWordMatrix& phi,
                                     const std::vector<std::string>& vocab,
                                     Index n) {
  if (static_cast<Index>(vocab.size()) != phi.vocab_size()) {
    throw std::invalid_argument("top_words: vocabulary size mismatch");
  }
  if (n < 1 || n > phi.vocab_size()) {
    throw std::invalid_argument("top_words: n out of range");
  }
  std::vector<TopicTopWords> result;
  result.reserve(phi.n_topics());
  std::vector<Index> idx(vocab.size());
  for (Index k = 0; k < phi.n_topics(); ++k) {
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&phi, k](Index a, Index b) {
      return phi.log_phi(k, a) > phi.log_phi(k, b);
    });
    TopicTopWords topic;
    topic.words.reserve(n);
    for (Index i = 0; i < n; ++i) topic.words.push_back(vocab[idx[i]]);
    result.push_back(std::move(topic));
  }
  return result;
}

}  // namespace vagtm
