#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "vagtm/decoder.hpp"
#include "vagtm/rng.hpp"

using namespace vagtm;
namespace ad = vagtm::ad;

namespace {

Vector random_vector(Rng& rng, Index n, Scalar lo, Scalar hi) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = lo + (hi - lo) * rng.uniform();
  return v;
}

constexpr Scalar kLn2Pi = 1.8378770664093454836;

}  // namespace

TEST_CASE("log density at the mean of a standard normal") {
  Vector zero = Vector::Zero(2);
  CHECK(log_density(zero, zero, zero) ==
        doctest::Approx(-kLn2Pi).epsilon(1e-12));
}

TEST_CASE("doubling every variance at the mean costs (D/2) ln 2") {
  Rng rng(3);
  const Index dim = 5;
  Vector mean = random_vector(rng, dim, -1.0, 1.0);
  Vector log_var = Vector::Zero(dim);
  Vector doubled = Vector::Constant(dim, std::log(2.0));
  const Scalar drop =
      log_density(mean, mean, log_var) - log_density(mean, mean, doubled);
  CHECK(drop == doctest::Approx(0.5 * dim * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("density integrates to one on a 2-D grid") {
  Rng rng(17);
  Vector mean = random_vector(rng, 2, -0.5, 0.5);
  Vector log_var = random_vector(rng, 2, -0.5, 0.5);
  const Vector sigma = (0.5 * log_var.array()).exp();
  const int steps = 400;
  Scalar integral = 0.0;
  const Scalar x_lo = mean[0] - 6.0 * sigma[0], x_hi = mean[0] + 6.0 * sigma[0];
  const Scalar y_lo = mean[1] - 6.0 * sigma[1], y_hi = mean[1] + 6.0 * sigma[1];
  const Scalar dx = (x_hi - x_lo) / steps, dy = (y_hi - y_lo) / steps;
  for (int i = 0; i < steps; ++i) {
    for (int j = 0; j < steps; ++j) {
      Vector point(2);
      point << x_lo + (i + 0.5) * dx, y_lo + (j + 0.5) * dy;
      integral += std::exp(log_density(point, mean, log_var)) * dx * dy;
    }
  }
  CHECK(integral == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("log density rejects mismatched dimensions") {
  CHECK_THROWS_AS(log_density(Vector::Zero(2), Vector::Zero(3),
                              Vector::Zero(3)),
                  std::invalid_argument);
}

TEST_CASE("two equidistant words split a topic evenly") {
  TopicGaussians topics(1, 2);
  topics.means[0].value() << 0.0, 0.0;
  EmbeddingMatrix emb;
  emb.vectors.resize(2, 2);
  emb.vectors << 1.0, 0.0,
                -1.0, 0.0;
  TopicWordMatrix phi = topic_word_matrix(topics, emb);
  CHECK(std::exp(phi.log_phi(0, 0)) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(std::exp(phi.log_phi(0, 1)) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("a word at the topic mean dominates distant words") {
  // V=5, D=2, unit variance, four words at distance 6
  TopicGaussians topics(1, 2);
  topics.means[0].value() << 0.0, 0.0;
  EmbeddingMatrix emb;
  emb.vectors.resize(5, 2);
  emb.vectors << 0.0, 0.0,
                 6.0, 0.0,
                -6.0, 0.0,
                 0.0, 6.0,
                 0.0, -6.0;
  TopicWordMatrix phi = topic_word_matrix(topics, emb);
  // by hand: phi_at_mean = 1 / (1 + 4 exp(-18))
  const Scalar expected = 1.0 / (1.0 + 4.0 * std::exp(-18.0));
  CHECK(std::exp(phi.log_phi(0, 0)) ==
        doctest::Approx(expected).epsilon(1e-12));
  CHECK(std::exp(phi.log_phi(0, 0)) > 0.99);
}

TEST_CASE("every topic row is a normalized distribution") {
  Rng rng(29);
  TopicGaussians topics(4, 6);
  EmbeddingMatrix emb;
  emb.vectors.resize(40, 6);
  for (Index v = 0; v < 40; ++v) {
    emb.vectors.row(v) = random_vector(rng, 6, -3.0, 3.0).transpose();
  }
  for (Index k = 0; k < 4; ++k) {
    topics.means[k].value() = random_vector(rng, 6, -2.0, 2.0);
    topics.log_vars[k].value() = random_vector(rng, 6, -1.0, 1.0);
  }
  TopicWordMatrix phi = topic_word_matrix(topics, emb);
  for (Index k = 0; k < 4; ++k) {
    CHECK(std::abs(phi.log_phi.row(k).array().exp().sum() - 1.0) < 1e-9);
  }
}

TEST_CASE("log-space normalization is shift invariant") {
  Rng rng(31);
  for (int rep = 0; rep < 20; ++rep) {
    Vector weights = random_vector(rng, 12, -50.0, 10.0);
    const Scalar shift = -40.0 + 80.0 * rng.uniform();
    Vector base = log_normalize(weights);
    Vector shifted = log_normalize((weights.array() + shift).matrix());
    CHECK((base - shifted).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("reconstruction distribution") {
  Rng rng(37);
  TopicGaussians topics(3, 4);
  EmbeddingMatrix emb;
  emb.vectors.resize(4, 4);
  for (Index v = 0; v < 4; ++v) {
    emb.vectors.row(v) = random_vector(rng, 4, -2.0, 2.0).transpose();
  }
  for (Index k = 0; k < 3; ++k) {
    topics.means[k].value() = random_vector(rng, 4, -2.0, 2.0);
  }
  TopicWordMatrix phi = topic_word_matrix(topics, emb);

  SUBCASE("single topic returns its own word distribution") {
    TopicWordMatrix single;
    single.log_phi = phi.log_phi.topRows(1);
    Vector p = reconstruct_distribution(single, Vector::Ones(1));
    CHECK((p.transpose() - single.log_phi.row(0).array().exp().matrix())
              .cwiseAbs()
              .maxCoeff() < 1e-15);
  }

  SUBCASE("one-hot topic weights select one row") {
    Vector theta = Vector::Zero(3);
    theta[1] = 1.0;
    Vector p = reconstruct_distribution(phi, theta);
    CHECK((p.transpose() - phi.log_phi.row(1).array().exp().matrix())
              .cwiseAbs()
              .maxCoeff() < 1e-15);
  }

  SUBCASE("random mixture matches the brute-force double loop") {
    Vector theta(3);
    theta << 0.2, 0.5, 0.3;
    Vector p = reconstruct_distribution(phi, theta);
    for (Index v = 0; v < 4; ++v) {
      Scalar expected = 0.0;
      for (Index k = 0; k < 3; ++k) {
        expected += std::exp(phi.log_phi(k, v)) * theta[k];
      }
      CHECK(p[v] == doctest::Approx(expected).epsilon(1e-12));
    }
    CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-9));
  }

  SUBCASE("shape mismatch throws") {
    CHECK_THROWS_AS(reconstruct_distribution(phi, Vector::Ones(2)),
                    std::invalid_argument);
  }
}

TEST_CASE("reconstruction log likelihood") {
  SUBCASE("empty document scores zero") {
    Vector p = Vector::Constant(4, 0.25);
    CHECK(reconstruction_loglik(Vector::Zero(4), p) == 0.0);
  }
  SUBCASE("one-hot weight on a half-probability word") {
    Vector x = Vector::Zero(2);
    x[0] = 1.0;
    Vector p(2);
    p << 0.5, 0.5;
    CHECK(reconstruction_loglik(x, p) ==
          doctest::Approx(std::log(0.5)).epsilon(1e-12));
  }
  SUBCASE("random inputs match direct summation") {
    Rng rng(41);
    Vector x = random_vector(rng, 6, 0.0, 3.0);
    Vector p = random_vector(rng, 6, 1e-12, 0.4);
    Scalar expected = 0.0;
    for (Index v = 0; v < 6; ++v) {
      expected += x[v] * std::log(std::max(p[v], 1e-10));
    }
    CHECK(reconstruction_loglik(x, p) ==
          doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("monotone in any covered word's probability") {
    Vector x = Vector::Zero(3);
    x[1] = 2.0;
    Vector p(3);
    p << 0.3, 0.3, 0.4;
    Vector q(3);
    q << 0.25, 0.35, 0.4;
    CHECK(reconstruction_loglik(x, q) > reconstruction_loglik(x, p));
  }
  SUBCASE("length mismatch throws") {
    CHECK_THROWS_AS(reconstruction_loglik(Vector::Zero(2), Vector::Ones(3)),
                    std::invalid_argument);
  }
}

TEST_CASE("graph log phi agrees with the plain computation") {
  Rng rng(43);
  TopicGaussians topics(3, 5);
  EmbeddingMatrix emb;
  emb.vectors.resize(12, 5);
  for (Index v = 0; v < 12; ++v) {
    emb.vectors.row(v) = random_vector(rng, 5, -2.0, 2.0).transpose();
  }
  for (Index k = 0; k < 3; ++k) {
    topics.means[k].value() = random_vector(rng, 5, -2.0, 2.0);
    topics.log_vars[k].value() = random_vector(rng, 5, -1.0, 1.0);
  }
  TopicWordMatrix plain = topic_word_matrix(topics, emb);
  ad::Tape tape;
  ad::Node node = log_phi_node(tape, topics, tape.constant(emb.vectors));
  CHECK((node.value() - plain.log_phi.transpose()).cwiseAbs().maxCoeff() <
        1e-12);
}

TEST_CASE("spherical covariance shares one log variance per topic") {
  Rng rng(47);
  TopicGaussians topics(2, 4, Covariance::spherical);
  EmbeddingMatrix emb;
  emb.vectors.resize(6, 4);
  for (Index v = 0; v < 6; ++v) {
    emb.vectors.row(v) = random_vector(rng, 4, -2.0, 2.0).transpose();
  }
  for (Index k = 0; k < 2; ++k) {
    topics.means[k].value() = random_vector(rng, 4, -1.0, 1.0);
    topics.log_vars[k].value()(0, 0) = 0.5;
  }
  CHECK(topics.log_var_vector(0) == Vector::Constant(4, 0.5));
  TopicWordMatrix phi = topic_word_matrix(topics, emb);
  CHECK(std::abs(phi.log_phi.row(0).array().exp().sum() - 1.0) < 1e-9);
  ad::Tape tape;
  ad::Node node = log_phi_node(tape, topics, tape.constant(emb.vectors));
  CHECK((node.value() - phi.log_phi.transpose()).cwiseAbs().maxCoeff() <
        1e-12);
}

TEST_CASE("reconstruction gradients match finite differences") {
  // V=20, K=3, D=8
  Rng rng(53);
  TopicGaussians topics(3, 8);
  EmbeddingMatrix emb;
  emb.vectors.resize(20, 8);
  for (Index v = 0; v < 20; ++v) {
    emb.vectors.row(v) = random_vector(rng, 8, -2.0, 2.0).transpose();
  }
  for (Index k = 0; k < 3; ++k) {
    topics.means[k].value() = random_vector(rng, 8, -1.5, 1.5);
    topics.log_vars[k].value() = random_vector(rng, 8, -0.5, 0.5);
  }
  Vector x = random_vector(rng, 20, 0.0, 2.0);
  Vector theta(3);
  theta << 0.5, 0.2, 0.3;
  auto build = [&](ad::Tape& t) {
    ad::Node log_phi = log_phi_node(t, topics, t.constant(emb.vectors));
    ad::Node p_rec = ad::matmul(ad::exp(log_phi), t.constant(theta));
    return ad::dot(t.constant(x),
                   ad::log(ad::clamp_min(p_rec, kProbFloor)));
  };
  CHECK(ad::grad_check(build, topics.parameters(), 1e-4) < 1e-4);
}
