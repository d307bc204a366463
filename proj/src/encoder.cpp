#include "vagtm/encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace vagtm {

EncoderParams::EncoderParams(Index vocab_size_in, Index hidden_dim_in,
                             Index n_topics_in)
    : vocab_size(vocab_size_in),
      hidden_dim(hidden_dim_in),
      n_topics(n_topics_in),
      w_s1("encoder.w_s1", Matrix::Zero(hidden_dim_in, vocab_size_in)),
      b_s1("encoder.b_s1", Matrix::Zero(hidden_dim_in, 1)),
      w_s2("encoder.w_s2", Matrix::Zero(hidden_dim_in, hidden_dim_in)),
      b_s2("encoder.b_s2", Matrix::Zero(hidden_dim_in, 1)),
      // the head biases are frozen at zero: batch normalization centers
      // them away, so BN's beta is the only effective shift
      w_mu("encoder.w_mu", Matrix::Zero(n_topics_in, hidden_dim_in)),
      b_mu("encoder.b_mu", Matrix::Zero(n_topics_in, 1), false),
      w_sigma("encoder.w_sigma", Matrix::Zero(n_topics_in, hidden_dim_in)),
      b_sigma("encoder.b_sigma", Matrix::Zero(n_topics_in, 1), false),
      bn_mu("encoder.bn_mu", n_topics_in),
      bn_sigma("encoder.bn_sigma", n_topics_in) {
  if (vocab_size < 1 || hidden_dim < 1 || n_topics < 1) {
    throw std::invalid_argument("EncoderParams: dimensions must be positive");
  }
}

void EncoderParams::init(Rng& rng) {
  auto fill = [&rng](Matrix& m) {
    const Scalar std_dev = std::sqrt(2.0 / static_cast<Scalar>(m.cols()));
    for (Index j = 0; j < m.cols(); ++j) {
      for (Index i = 0; i < m.rows(); ++i) m(i, j) = std_dev * rng.normal();
    }
  };
  fill(w_s1.value());
  fill(w_s2.value());
  fill(w_mu.value());
  fill(w_sigma.value());
  b_s1.value().setZero();
  b_s2.value().setZero();
  b_mu.value().setZero();
  b_sigma.value().setZero();
  bn_mu.gamma.value().setOnes();
  bn_mu.beta.value().setZero();
  bn_mu.running_mean.setZero();
  bn_mu.running_var.setOnes();
  bn_sigma.gamma.value().setOnes();
  bn_sigma.beta.value().setZero();
  bn_sigma.running_mean.setZero();
  bn_sigma.running_var.setOnes();
}

std::vector<ad::Parameter*> EncoderParams::parameters() {
  return {&w_s1,        &b_s1,       &w_s2,           &b_s2,
          &w_mu,        &w_sigma,    &bn_mu.gamma,    &bn_mu.beta,
          &bn_sigma.gamma, &bn_sigma.beta};
}

EncoderNodes encode_nodes(ad::Tape& tape, ad::Node batch,
                          EncoderParams& params, ad::Mode mode) {
  if (batch.rows() != params.vocab_size) {
    throw std::invalid_argument("encode: input length != vocabulary size");
  }
  ad::Node a1 = ad::softplus(ad::affine(tape.parameter(params.w_s1), batch,
                                        tape.parameter(params.b_s1)));
  ad::Node a2 = ad::softplus(ad::affine(tape.parameter(params.w_s2), a1,
                                        tape.parameter(params.b_s2)));
  ad::Node mu = ad::batchnorm(ad::affine(tape.parameter(params.w_mu), a2,
                                         tape.parameter(params.b_mu)),
                              params.bn_mu, mode);
  ad::Node log_var = ad::clamp(
      ad::batchnorm(ad::affine(tape.parameter(params.w_sigma), a2,
                               tape.parameter(params.b_sigma)),
                    params.bn_sigma, mode),
      kLogVarMin, kLogVarMax);
  return {mu, log_var};
}

std::pair<Matrix, Matrix> encode_batch(const Matrix& batch,
                                       EncoderParams& params, ad::Mode mode) {
  ad::Tape tape;
  EncoderNodes nodes = encode_nodes(tape, tape.constant(batch), params, mode);
  return {nodes.mu.value(), nodes.log_var.value()};
}

PosteriorGaussian encode(const Vector& x, EncoderParams& params,
                         ad::Mode mode) {
  auto [mu, log_var] = encode_batch(x, params, mode);
  return {mu.col(0), log_var.col(0)};
}

TopicDistribution sample_theta(const PosteriorGaussian& posterior,
                               const Vector& eps) {
  if (eps.size() != posterior.mu.size()) {
    throw std::invalid_argument("sample_theta: noise length mismatch");
  }
  Vector z = posterior.mu.array() +
             eps.array() * (0.5 * posterior.log_var.array()).exp();
  return {log_normalize(z).array().exp().matrix()};
}

ad::Node sample_theta_node(ad::Tape& tape, const EncoderNodes& posterior,
                           ad::Node eps) {
  ad::Node sigma = ad::exp(ad::scale(posterior.log_var, 0.5));
  ad::Node z = ad::add(posterior.mu, ad::mul(eps, sigma));
  return ad::colwise_softmax(z);
}

}  // namespace vagtm
