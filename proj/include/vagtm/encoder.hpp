#pragma once

#include <utility>
#include <vector>

#include "vagtm/autodiff.hpp"
#include "vagtm/decoder.hpp"
#include "vagtm/rng.hpp"
#include "vagtm/types.hpp"

namespace vagtm {

// The inference network: tf-idf vector -> two softplus layers -> two
// batch-normalized affine heads giving the posterior mean and log-variance.
struct EncoderParams {
  Index vocab_size = 0;  // V
  Index hidden_dim = 0;  // H
  Index n_topics = 0;    // K
  ad::Parameter w_s1, b_s1;        // H x V, H x 1
  ad::Parameter w_s2, b_s2;        // H x H, H x 1
  ad::Parameter w_mu, b_mu;        // K x H, K x 1
  ad::Parameter w_sigma, b_sigma;  // K x H, K x 1
  ad::BatchNorm bn_mu;
  ad::BatchNorm bn_sigma;

  EncoderParams(Index vocab_size, Index hidden_dim, Index n_topics);

  // Weights ~ N(0, 2/fan_in), biases zero.
  void init(Rng& rng);
  // The trainable set; excludes the frozen head biases.
  std::vector<ad::Parameter*> parameters();
};

struct PosteriorGaussian {
  Vector mu;       // K
  Vector log_var;  // K, clamped to [kLogVarMin, kLogVarMax]
};

struct TopicDistribution {
  Vector theta;  // K, on the simplex
};

struct EncoderNodes {
  ad::Node mu;       // K x B
  ad::Node log_var;  // K x B, clamped
};

// Graph builder over a V x B batch node.
EncoderNodes encode_nodes(ad::Tape& tape, ad::Node batch,
                          EncoderParams& params, ad::Mode mode);

// Plain batched forward returning (mu, log_var), each K x B.
std::pair<Matrix, Matrix> encode_batch(const Matrix& batch,
                                       EncoderParams& params, ad::Mode mode);

// Single document. Train mode is rejected by the batch-norm contract
// (batch size 1); use the batched form during training.
PosteriorGaussian encode(const Vector& x, EncoderParams& params,
                         ad::Mode mode = ad::Mode::eval);

// z = mu + eps .* sigma, theta = softmax(z)
TopicDistribution sample_theta(const PosteriorGaussian& posterior,
                               const Vector& eps);

// Graph version for K x B matrices of posterior parameters and noise.
ad::Node sample_theta_node(ad::Tape& tape, const EncoderNodes& posterior,
                           ad::Node eps);

}  // namespace vagtm
