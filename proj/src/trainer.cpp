#include "vagtm/trainer.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace vagtm {

PriorParams laplace_prior(Scalar alpha, Index n_topics) {
  if (alpha <= 0.0) throw std::invalid_argument("laplace_prior: alpha must be > 0");
  if (n_topics < 2) throw std::invalid_argument("laplace_prior: need K >= 2");
  const Scalar k = static_cast<Scalar>(n_topics);
  PriorParams prior;
  prior.kind = PriorKind::laplace_dirichlet;
  prior.mu0 = Vector::Zero(n_topics);
  prior.var0 = Vector::Constant(n_topics, (k - 1.0) / (alpha * k));
  return prior;
}

PriorParams standard_normal_prior(Index n_topics) {
  PriorParams prior;
  prior.kind = PriorKind::standard_normal;
  prior.mu0 = Vector::Zero(n_topics);
  prior.var0 = Vector::Ones(n_topics);
  return prior;
}

Scalar kl_divergence(const PosteriorGaussian& posterior,
                     const PriorParams& prior) {
  if (posterior.mu.size() != prior.mu0.size()) {
    throw std::invalid_argument("kl_divergence: dimension mismatch");
  }
  const auto var = posterior.log_var.array().exp();
  const auto var0 = prior.var0.array();
  const auto diff = (posterior.mu - prior.mu0).array();
  return 0.5 * (var / var0 + diff.square() / var0 - 1.0 + var0.log() -
                posterior.log_var.array())
                   .sum();
}

Scalar TrainConfig::effective_alpha() const {
  return alpha > 0.0 ? alpha : 1.0 / static_cast<Scalar>(n_topics);
}

void TrainConfig::validate() const {
  if (n_topics < 1) throw std::invalid_argument("config: topics must be >= 1");
  if (hidden_dim < 1) throw std::invalid_argument("config: hidden must be >= 1");
  if (batch_size < 2) throw std::invalid_argument("config: batch size must be >= 2");
  if (learning_rate <= 0.0) throw std::invalid_argument("config: learning rate must be > 0");
  if (epochs < 0) throw std::invalid_argument("config: epochs must be >= 0");
  if (model_kind == ModelKind::vagtm_ip && coupling_layers < 2) {
    throw std::invalid_argument("config: vagtm-ip needs >= 2 coupling layers");
  }
}

ModelCheckpoint::ModelCheckpoint(const TrainConfig& config_in,
                                 Index vocab_size, Index embedding_dim)
    : config(config_in),
      encoder(vocab_size, config_in.hidden_dim, config_in.n_topics),
      topics(config_in.n_topics, embedding_dim, config_in.covariance) {
  if (config.model_kind == ModelKind::vagtm_ip) {
    flow.emplace(embedding_dim, config.coupling_layers);
  }
}

std::vector<ad::Parameter*> ModelCheckpoint::parameters() {
  std::vector<ad::Parameter*> out = encoder.parameters();
  for (auto* p : topics.parameters()) out.push_back(p);
  if (flow) {
    for (auto* p : flow->parameters()) out.push_back(p);
  }
  return out;
}

EmbeddingMatrix ModelCheckpoint::decoder_embeddings() const {
  if (flow) return {inverse_project_rows(embeddings, *flow)};
  return {embeddings};
}

ElboTerms elbo(ad::Tape& tape, const Matrix& batch, const Matrix& eps,
               EncoderParams& encoder, TopicGaussians& topics,
               FlowParams* flow, const Matrix& embeddings,
               const PriorParams& prior, ad::Mode mode) {
  const Index batch_size = batch.cols();
  if (batch_size == 0) throw std::invalid_argument("elbo: empty batch");
  if (eps.rows() != encoder.n_topics || eps.cols() != batch_size) {
    throw std::invalid_argument("elbo: noise shape mismatch");
  }

  ad::Node x = tape.constant(batch);
  EncoderNodes posterior = encode_nodes(tape, x, encoder, mode);
  ad::Node theta = sample_theta_node(tape, posterior, tape.constant(eps));

  ad::Node emb = tape.constant(embeddings);
  if (flow) emb = inverse_project_node(tape, emb, *flow);
  ad::Node log_phi = log_phi_node(tape, topics, emb);  // V x K
  ad::Node p_rec = ad::matmul(ad::exp(log_phi), theta);  // V x B
  ad::Node reconstruction =
      ad::sum(ad::mul(x, ad::log(ad::clamp_min(p_rec, kProbFloor))));

  // KL(q || p) summed over topics and documents, all terms K x B
  ad::Node inv_var0 = tape.constant((1.0 / prior.var0.array()).matrix());
  ad::Node log_var0 = tape.constant(prior.var0.array().log().matrix());
  ad::Node neg_mu0 = tape.constant((-prior.mu0).eval());
  ad::Node var_ratio = ad::colwise_mul(ad::exp(posterior.log_var), inv_var0);
  ad::Node mean_diff = ad::colwise_add(posterior.mu, neg_mu0);
  ad::Node mean_term =
      ad::colwise_mul(ad::mul(mean_diff, mean_diff), inv_var0);
  ad::Node log_term =
      ad::colwise_add(ad::scale(posterior.log_var, -1.0), log_var0);
  ad::Node inner = ad::add(ad::add(var_ratio, mean_term),
                           ad::add_const(log_term, -1.0));
  ad::Node kl = ad::scale(ad::sum(inner), 0.5);

  ad::Node mean_elbo = ad::scale(ad::sub(reconstruction, kl),
                                 1.0 / static_cast<Scalar>(batch_size));
  return {mean_elbo, reconstruction, kl};
}

AdamOptimizer::AdamOptimizer(std::vector<ad::Parameter*> params,
                             Scalar learning_rate, Scalar beta1, Scalar beta2,
                             Scalar epsilon)
    : params_(std::move(params)),
      learning_rate_(learning_rate),
      beta1_(beta1),
      beta2_(beta2),
      epsilon_(epsilon) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (auto* p : params_) {
    m_.push_back(Matrix::Zero(p->value().rows(), p->value().cols()));
    v_.push_back(Matrix::Zero(p->value().rows(), p->value().cols()));
  }
}

void AdamOptimizer::step() {
  ++t_;
  const Scalar m_corr = 1.0 - std::pow(beta1_, static_cast<Scalar>(t_));
  const Scalar v_corr = 1.0 - std::pow(beta2_, static_cast<Scalar>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    ad::Parameter& p = *params_[i];
    if (!p.trainable()) continue;
    const Matrix& g = p.grad();
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
    p.value().array() -=
        learning_rate_ * (m_[i].array() / m_corr) /
        ((v_[i].array() / v_corr).sqrt() + epsilon_);
    p.zero_grad();
  }
}

namespace {

void check_finite_terms(const ElboTerms& terms, Index epoch) {
  const Scalar rec = terms.reconstruction.scalar();
  const Scalar kl = terms.kl.scalar();
  if (!std::isfinite(rec)) {
    throw TrainingDivergence("non-finite reconstruction term at epoch " +
                             std::to_string(epoch));
  }
  if (!std::isfinite(kl)) {
    throw TrainingDivergence("non-finite KL term at epoch " +
                             std::to_string(epoch));
  }
}

}  // namespace

ModelCheckpoint train(const Corpus& corpus, const EmbeddingMatrix& embeddings,
                      const TrainConfig& config,
                      const EpochCallback& on_epoch) {
  config.validate();
  const Index n_docs = corpus.n_docs();
  const Index vocab_size = corpus.vocab_size();
  if (embeddings.vectors.rows() != vocab_size) {
    throw std::invalid_argument("train: embeddings do not cover the vocabulary");
  }

  ModelCheckpoint checkpoint(config, vocab_size, embeddings.dim());
  checkpoint.vocab = corpus.vocab;
  checkpoint.embeddings = embeddings.vectors;

  Rng rng(config.seed);
  checkpoint.encoder.init(rng);
  checkpoint.topics.init_from_embeddings(embeddings, rng);
  if (checkpoint.flow) checkpoint.flow->init(rng);

  // Dirichlet-style prior needs K >= 2; fall back for a single topic.
  PriorParams prior =
      (config.prior == PriorKind::laplace_dirichlet && config.n_topics >= 2)
          ? laplace_prior(config.effective_alpha(), config.n_topics)
          : standard_normal_prior(config.n_topics);

  std::vector<TfidfVector> tfidf;
  tfidf.reserve(n_docs);
  for (Index d = 0; d < n_docs; ++d) tfidf.push_back(tfidf_vector(corpus, d));

  AdamOptimizer adam(checkpoint.parameters(), config.learning_rate);
  FlowParams* flow = checkpoint.flow ? &*checkpoint.flow : nullptr;

  std::vector<Index> order(n_docs);
  std::iota(order.begin(), order.end(), 0);

  for (Index epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    Scalar elbo_sum = 0.0;
    Index docs_seen = 0;
    for (Index begin = 0; begin < n_docs; begin += config.batch_size) {
      const Index size = std::min(config.batch_size, n_docs - begin);
      if (size < 2) continue;  // batch norm cannot train on a single document

      Matrix batch = Matrix::Zero(vocab_size, size);
      for (Index b = 0; b < size; ++b) {
        batch.col(b) = tfidf[order[begin + b]].values;
      }
      Matrix eps(config.n_topics, size);
      for (Index b = 0; b < size; ++b) {
        for (Index k = 0; k < config.n_topics; ++k) eps(k, b) = rng.normal();
      }

      ad::Tape tape;
      ElboTerms terms =
          elbo(tape, batch, eps, checkpoint.encoder, checkpoint.topics, flow,
               checkpoint.embeddings, prior, ad::Mode::train);
      check_finite_terms(terms, epoch);
      elbo_sum += terms.elbo.scalar() * static_cast<Scalar>(size);
      docs_seen += size;

      tape.backward(ad::scale(terms.elbo, -1.0));
      adam.step();
      checkpoint.topics.project_log_vars();
    }
    const Scalar mean_elbo =
        docs_seen > 0 ? elbo_sum / static_cast<Scalar>(docs_seen) : 0.0;
    checkpoint.elbo_log.push_back(mean_elbo);
    if (on_epoch) on_epoch(epoch, mean_elbo);
  }
  return checkpoint;
}

}  // namespace vagtm
