#include "vagtm/decoder.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace vagtm {

namespace {
constexpr Scalar kLn2Pi = 1.8378770664093454836;  // ln(2*pi)
}

TopicGaussians::TopicGaussians(Index n_topics, Index dim_in,
                               Covariance covariance_in) {
  covariance = covariance_in;
  dim = dim_in;
  const Index lv_rows = covariance == Covariance::spherical ? 1 : dim;
  means.reserve(n_topics);
  log_vars.reserve(n_topics);
  for (Index k = 0; k < n_topics; ++k) {
    means.emplace_back("topic" + std::to_string(k) + ".mean",
                       Matrix::Zero(dim, 1));
    log_vars.emplace_back("topic" + std::to_string(k) + ".log_var",
                          Matrix::Zero(lv_rows, 1));
  }
}

void TopicGaussians::init_from_embeddings(const EmbeddingMatrix& embeddings,
                                          Rng& rng) {
  if (embeddings.dim() != dim) {
    throw std::invalid_argument("init_from_embeddings: dimension mismatch");
  }
  const auto k = static_cast<std::size_t>(n_topics());
  const auto v = static_cast<std::size_t>(embeddings.vectors.rows());
  if (v < k) {
    throw std::invalid_argument(
        "init_from_embeddings: fewer words than topics");
  }
  auto picks = rng.sample_without_replacement(v, k);
  for (std::size_t i = 0; i < k; ++i) {
    means[i].value() =
        embeddings.vectors.row(static_cast<Index>(picks[i])).transpose();
    log_vars[i].value().setZero();
  }
}

Vector TopicGaussians::log_var_vector(Index k) const {
  const Matrix& raw = log_vars[k].value();
  if (covariance == Covariance::spherical) {
    return Vector::Constant(dim, raw(0, 0));
  }
  return raw.col(0);
}

Matrix TopicGaussians::means_matrix() const {
  Matrix m(n_topics(), dim);
  for (Index k = 0; k < n_topics(); ++k) {
    m.row(k) = means[k].value().col(0).transpose();
  }
  return m;
}

std::vector<ad::Parameter*> TopicGaussians::parameters() {
  std::vector<ad::Parameter*> out;
  for (auto& p : means) out.push_back(&p);
  for (auto& p : log_vars) out.push_back(&p);
  return out;
}

void TopicGaussians::project_log_vars() {
  for (auto& p : log_vars) {
    p.value() = p.value().array().max(kLogVarMin).min(kLogVarMax);
  }
}

Scalar log_density(const Vector& w, const Vector& mean,
                   const Vector& log_var) {
  if (w.size() != mean.size() || w.size() != log_var.size()) {
    throw std::invalid_argument("log_density: dimension mismatch");
  }
  const auto diff = (w - mean).array();
  const Scalar quad = (diff.square() * (-log_var.array()).exp()).sum();
  return -0.5 * (static_cast<Scalar>(w.size()) * kLn2Pi + log_var.sum() +
                 quad);
}

Vector log_normalize(const Vector& log_weights) {
  const Scalar peak = log_weights.maxCoeff();
  const Scalar lse =
      peak + std::log((log_weights.array() - peak).exp().sum());
  return log_weights.array() - lse;
}

TopicWordMatrix topic_word_matrix(const TopicGaussians& topics,
                                  const EmbeddingMatrix& embeddings) {
  if (embeddings.dim() != topics.dim) {
    throw std::invalid_argument("topic_word_matrix: dimension mismatch");
  }
  const Index n_words = embeddings.vectors.rows();
  TopicWordMatrix result;
  result.log_phi.resize(topics.n_topics(), n_words);
  for (Index k = 0; k < topics.n_topics(); ++k) {
    const Vector mean = topics.means[k].value().col(0);
    const Vector log_var = topics.log_var_vector(k);
    const Vector inv_var = (-log_var.array()).exp();
    const Scalar constant =
        static_cast<Scalar>(topics.dim) * kLn2Pi + log_var.sum();
    auto centered =
        embeddings.vectors.rowwise() - mean.transpose();
    Vector quad =
        (centered.array().square().rowwise() * inv_var.transpose().array())
            .rowwise()
            .sum();
    Vector log_dens = -0.5 * (quad.array() + constant);
    result.log_phi.row(k) = log_normalize(log_dens).transpose();
  }
  return result;
}

Vector reconstruct_distribution(const TopicWordMatrix& phi,
                                const Vector& theta) {
  if (phi.n_topics() != theta.size()) {
    throw std::invalid_argument(
        "reconstruct_distribution: topic count mismatch");
  }
  return phi.log_phi.array().exp().matrix().transpose() * theta;
}

Scalar reconstruction_loglik(const Vector& x, const Vector& p_rec) {
  if (x.size() != p_rec.size()) {
    throw std::invalid_argument("reconstruction_loglik: length mismatch");
  }
  return (x.array() * p_rec.array().max(kProbFloor).log()).sum();
}

ad::Node row_log_densities(ad::Tape& tape, ad::Node embeddings, ad::Node mean,
                           ad::Node log_var) {
  if (embeddings.cols() != mean.rows() || mean.rows() != log_var.rows()) {
    ad::shape_error("row_log_densities", embeddings.value(), mean.value());
  }
  const Index d = mean.rows();
  ad::Node centered = ad::rowwise_add(embeddings, ad::scale(mean, -1.0));
  ad::Node weighted = ad::rowwise_mul(ad::mul(centered, centered),
                                      ad::exp(ad::scale(log_var, -1.0)));
  ad::Node quad = ad::rowwise_sum(weighted);
  ad::Node constant =
      ad::add_const(ad::sum(log_var), static_cast<Scalar>(d) * kLn2Pi);
  return ad::scale(ad::add_scalar(quad, constant), -0.5);
}

ad::Node log_var_node(ad::Tape& tape, TopicGaussians& topics, Index k) {
  ad::Node raw = tape.parameter(topics.log_vars[k]);
  ad::Node clamped = ad::clamp(raw, kLogVarMin, kLogVarMax);
  if (topics.covariance == Covariance::spherical) {
    return ad::matmul(tape.constant(Matrix::Ones(topics.dim, 1)), clamped);
  }
  return clamped;
}

ad::Node log_phi_node(ad::Tape& tape, TopicGaussians& topics,
                      ad::Node embeddings) {
  std::vector<ad::Node> columns;
  columns.reserve(topics.n_topics());
  for (Index k = 0; k < topics.n_topics(); ++k) {
    ad::Node mean = tape.parameter(topics.means[k]);
    ad::Node log_var = log_var_node(tape, topics, k);
    ad::Node dens = row_log_densities(tape, embeddings, mean, log_var);
    ad::Node normalizer = ad::scale(ad::logsumexp(dens), -1.0);
    columns.push_back(ad::add_scalar(dens, normalizer));
  }
  return ad::hcat(columns);
}

}  // namespace vagtm
