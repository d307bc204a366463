#pragma once

#include <vector>

#include "vagtm/autodiff.hpp"
#include "vagtm/corpus.hpp"
#include "vagtm/rng.hpp"
#include "vagtm/types.hpp"

namespace vagtm {

inline constexpr Scalar kLogVarMin = -8.0;
inline constexpr Scalar kLogVarMax = 8.0;
inline constexpr Scalar kProbFloor = 1e-10;

enum class Covariance { diagonal, spherical };

// Per-topic Gaussians over the embedding space: a mean vector and a
// log-parameterized diagonal covariance per topic. In spherical mode one
// log-variance is shared across the dimensions of a topic.
struct TopicGaussians {
  std::vector<ad::Parameter> means;     // K entries, D x 1
  std::vector<ad::Parameter> log_vars;  // K entries, D x 1 or 1 x 1
  Covariance covariance = Covariance::diagonal;
  Index dim = 0;

  TopicGaussians() = default;
  TopicGaussians(Index n_topics, Index dim,
                 Covariance covariance = Covariance::diagonal);

  Index n_topics() const { return static_cast<Index>(means.size()); }

  // Means set to the embeddings of K distinct words, log-variances zero.
  void init_from_embeddings(const EmbeddingMatrix& embeddings, Rng& rng);

  // The effective D-vector of log-variances for topic k (expands spherical).
  Vector log_var_vector(Index k) const;
  Matrix means_matrix() const;  // K x D
  std::vector<ad::Parameter*> parameters();

  // Keeps log-variances inside [kLogVarMin, kLogVarMax] after an update.
  void project_log_vars();
};

struct TopicWordMatrix {
  Matrix log_phi;  // K x V, rows are log-probabilities over the vocabulary
  Index n_topics() const { return log_phi.rows(); }
  Index vocab_size() const { return log_phi.cols(); }
};

// log N(w; mean, diag(exp(log_var)))
Scalar log_density(const Vector& w, const Vector& mean,
                   const Vector& log_var);

// x - logsumexp(x); the shift-invariant log-space normalizer behind phi.
Vector log_normalize(const Vector& log_weights);

// Row k is the topic-k distribution over the vocabulary: densities at the
// word embeddings, normalized over the vocabulary in log space.
TopicWordMatrix topic_word_matrix(const TopicGaussians& topics,
                                  const EmbeddingMatrix& embeddings);

// p_rec[v] = sum_k phi[k][v] * theta[k]
Vector reconstruct_distribution(const TopicWordMatrix& phi,
                                const Vector& theta);

// sum_v x[v] * ln(max(p_rec[v], 1e-10))
Scalar reconstruction_loglik(const Vector& x, const Vector& p_rec);

// --- graph builders -------------------------------------------------------

// Log densities of every row of `embeddings` (n x D) under one Gaussian.
ad::Node row_log_densities(ad::Tape& tape, ad::Node embeddings, ad::Node mean,
                           ad::Node log_var);

// The clamped log-variance node for topic k, expanded to D x 1.
ad::Node log_var_node(ad::Tape& tape, TopicGaussians& topics, Index k);

// V x K matrix of log phi values (column k is topic k), built from an
// embedding node so a flow-transformed embedding matrix plugs in directly.
ad::Node log_phi_node(ad::Tape& tape, TopicGaussians& topics,
                      ad::Node embeddings);

}  // namespace vagtm
