#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vagtm/corpus.hpp"
#include "vagtm/decoder.hpp"
#include "vagtm/encoder.hpp"
#include "vagtm/flow.hpp"
#include "vagtm/types.hpp"

namespace vagtm {

enum class ModelKind { vagtm, vagtm_ip };
enum class PriorKind { laplace_dirichlet, standard_normal };

struct PriorParams {
  Vector mu0;   // K
  Vector var0;  // K, strictly positive
  PriorKind kind = PriorKind::standard_normal;
};

// Gaussian approximation of a symmetric Dirichlet(alpha) in softmax basis:
// mu0 = 0, var0 = (K - 1) / (alpha * K) per coordinate.
PriorParams laplace_prior(Scalar alpha, Index n_topics);

PriorParams standard_normal_prior(Index n_topics);

// Closed-form KL(q || p) between diagonal Gaussians.
Scalar kl_divergence(const PosteriorGaussian& posterior,
                     const PriorParams& prior);

struct TrainConfig {
  ModelKind model_kind = ModelKind::vagtm;
  Index n_topics = 20;
  Index hidden_dim = 100;
  Index coupling_layers = 4;
  Scalar alpha = 0.0;  // <= 0 means the default 1/K
  Index epochs = 50;
  Index batch_size = 256;
  Scalar learning_rate = 1e-3;
  std::uint64_t seed = 1;
  Covariance covariance = Covariance::diagonal;
  PriorKind prior = PriorKind::laplace_dirichlet;

  Scalar effective_alpha() const;
  void validate() const;  // throws std::invalid_argument
};

// Everything train() produces: the config it ran with, all parameters
// (including batch-norm running statistics), the vocabulary, the frozen
// embedding matrix, and the per-epoch mean ELBO log.
struct ModelCheckpoint {
  TrainConfig config;
  std::vector<std::string> vocab;
  Matrix embeddings;  // V x D, frozen input
  EncoderParams encoder;
  TopicGaussians topics;
  std::optional<FlowParams> flow;  // present for vagtm-ip only
  std::vector<Scalar> elbo_log;

  ModelCheckpoint(const TrainConfig& config, Index vocab_size,
                  Index embedding_dim);

  std::vector<ad::Parameter*> parameters();

  // The embedding matrix as seen by the decoder: flow-projected for
  // vagtm-ip, raw otherwise.
  EmbeddingMatrix decoder_embeddings() const;
};

struct ElboTerms {
  ad::Node elbo;            // 1x1, mean over the batch
  ad::Node reconstruction;  // 1x1, summed over the batch
  ad::Node kl;              // 1x1, summed over the batch
};

// The per-batch objective. `batch` is V x B tf-idf columns, `eps` is K x B
// reparameterization noise. Differentiable w.r.t. every model parameter.
ElboTerms elbo(ad::Tape& tape, const Matrix& batch, const Matrix& eps,
               EncoderParams& encoder, TopicGaussians& topics,
               FlowParams* flow, const Matrix& embeddings,
               const PriorParams& prior, ad::Mode mode);

// Thrown when a training loss stops being finite; names the term.
class TrainingDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AdamOptimizer {
 public:
  explicit AdamOptimizer(std::vector<ad::Parameter*> params,
                         Scalar learning_rate = 1e-3, Scalar beta1 = 0.9,
                         Scalar beta2 = 0.999, Scalar epsilon = 1e-8);
  // One descent step along the stored gradients, then zeroes them.
  void step();

 private:
  std::vector<ad::Parameter*> params_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  Scalar learning_rate_, beta1_, beta2_, epsilon_;
  long t_ = 0;
};

using EpochCallback = std::function<void(Index epoch, Scalar mean_elbo)>;

// Seeded, deterministic training: Adam on -ELBO over shuffled mini-batches.
// Remainder batches of size 1 are skipped (batch norm needs >= 2).
ModelCheckpoint train(const Corpus& corpus, const EmbeddingMatrix& embeddings,
                      const TrainConfig& config,
                      const EpochCallback& on_epoch = nullptr);

}  // namespace vagtm
