#include "vagtm/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace vagtm {

std::string format_double(Scalar value) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

namespace {

const char* to_string(ModelKind kind) {
  return kind == ModelKind::vagtm ? "vagtm" : "vagtm-ip";
}
const char* to_string(PriorKind kind) {
  return kind == PriorKind::laplace_dirichlet ? "laplace-dirichlet"
                                              : "standard-normal";
}
const char* to_string(Covariance cov) {
  return cov == Covariance::diagonal ? "diagonal" : "spherical";
}

void write_array(std::ostream& out, const std::string& name,
                 const Matrix& values) {
  out << name << ' ' << values.rows() << ' ' << values.cols() << '\n';
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) {
      if (j > 0) out << ' ';
      out << format_double(values(i, j));
    }
    out << '\n';
  }
}

class Parser {
 public:
  explicit Parser(std::istream& in) : in_(in) {}

  std::string line() {
    std::string text;
    if (!std::getline(in_, text)) fail("unexpected end of file");
    ++line_no_;
    return text;
  }

  void expect(const std::string& wanted) {
    const std::string got = line();
    if (got != wanted) fail("expected '" + wanted + "', got '" + got + "'");
  }

  void section(const std::string& name) {
    section_ = name;
    expect(name);
  }

  // `name rows cols` then rows lines of cols doubles
  Matrix array(const std::string& name) {
    std::istringstream header(line());
    std::string got;
    long long rows = -1, cols = -1;
    if (!(header >> got >> rows >> cols) || got != name || rows < 0 ||
        cols < 0) {
      fail("bad shape line for '" + name + "'");
    }
    Matrix values(rows, cols);
    for (long long i = 0; i < rows; ++i) {
      std::istringstream row(line());
      std::string field;
      for (long long j = 0; j < cols; ++j) {
        if (!(row >> field)) fail("short row in array '" + name + "'");
        values(i, j) = parse_double(field);
      }
      if (row >> field) fail("trailing data in array '" + name + "'");
    }
    return values;
  }

  std::string keyval(const std::string& key) {
    const std::string text = line();
    const auto space = text.find(' ');
    if (space == std::string::npos || text.substr(0, space) != key) {
      fail("expected key '" + key + "', got '" + text + "'");
    }
    return text.substr(space + 1);
  }

  Scalar keyval_double(const std::string& key) {
    return parse_double(keyval(key));
  }

  long long keyval_int(const std::string& key) {
    const std::string v = keyval(key);
    char* end = nullptr;
    const long long out = std::strtoll(v.c_str(), &end, 10);
    if (end != v.c_str() + v.size() || v.empty()) {
      fail("bad integer for key '" + key + "': '" + v + "'");
    }
    return out;
  }

  // an n x 1 array block
  Vector vector(const std::string& name, Index n) {
    Matrix values = array(name);
    if (values.rows() != n || values.cols() != 1) {
      fail("array '" + name + "' has the wrong shape");
    }
    return values.col(0);
  }

  [[noreturn]] void fail(const std::string& message) const {
    std::string where = section_.empty() ? "header" : section_;
    throw std::runtime_error("checkpoint: " + message + " (in " + where +
                             ", line " + std::to_string(line_no_) + ")");
  }

 private:
  Scalar parse_double(const std::string& text) {
    char* end = nullptr;
    const Scalar out = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size()) {
      fail("malformed decimal '" + text + "'");
    }
    return out;
  }

  std::istream& in_;
  std::string section_;
  std::size_t line_no_ = 0;
};

}  // namespace

std::string format_checkpoint(const ModelCheckpoint& checkpoint) {
  std::ostringstream out;
  const TrainConfig& cfg = checkpoint.config;
  out << "VAGTM 1\n";
  out << "[config]\n";
  out << "model " << to_string(cfg.model_kind) << '\n';
  out << "topics " << cfg.n_topics << '\n';
  out << "hidden " << cfg.hidden_dim << '\n';
  out << "coupling_layers " << cfg.coupling_layers << '\n';
  out << "alpha " << format_double(cfg.alpha) << '\n';
  out << "epochs " << cfg.epochs << '\n';
  out << "batch_size " << cfg.batch_size << '\n';
  out << "learning_rate " << format_double(cfg.learning_rate) << '\n';
  out << "seed " << cfg.seed << '\n';
  out << "covariance " << to_string(cfg.covariance) << '\n';
  out << "prior " << to_string(cfg.prior) << '\n';
  out << "embedding_dim " << checkpoint.embeddings.cols() << '\n';

  out << "[vocab]\n";
  out << "count " << checkpoint.vocab.size() << '\n';
  for (const auto& word : checkpoint.vocab) out << word << '\n';

  out << "[encoder]\n";
  const EncoderParams& enc = checkpoint.encoder;
  write_array(out, "w_s1", enc.w_s1.value());
  write_array(out, "b_s1", enc.b_s1.value());
  write_array(out, "w_s2", enc.w_s2.value());
  write_array(out, "b_s2", enc.b_s2.value());
  write_array(out, "w_mu", enc.w_mu.value());
  write_array(out, "b_mu", enc.b_mu.value());
  write_array(out, "w_sigma", enc.w_sigma.value());
  write_array(out, "b_sigma", enc.b_sigma.value());
  write_array(out, "bn_mu_gamma", enc.bn_mu.gamma.value());
  write_array(out, "bn_mu_beta", enc.bn_mu.beta.value());
  write_array(out, "bn_mu_running_mean", enc.bn_mu.running_mean);
  write_array(out, "bn_mu_running_var", enc.bn_mu.running_var);
  write_array(out, "bn_sigma_gamma", enc.bn_sigma.gamma.value());
  write_array(out, "bn_sigma_beta", enc.bn_sigma.beta.value());
  write_array(out, "bn_sigma_running_mean", enc.bn_sigma.running_mean);
  write_array(out, "bn_sigma_running_var", enc.bn_sigma.running_var);

  out << "[topics]\n";
  write_array(out, "means", checkpoint.topics.means_matrix());
  Matrix log_vars(checkpoint.topics.n_topics(),
                  checkpoint.topics.log_vars.empty()
                      ? 0
                      : checkpoint.topics.log_vars[0].value().rows());
  for (Index k = 0; k < checkpoint.topics.n_topics(); ++k) {
    log_vars.row(k) = checkpoint.topics.log_vars[k].value().col(0).transpose();
  }
  write_array(out, "log_vars", log_vars);
  write_array(out, "embeddings", checkpoint.embeddings);

  if (checkpoint.flow) {
    const FlowParams& flow = *checkpoint.flow;
    out << "[flow]\n";
    out << "layers " << flow.n_layers() << '\n';
    out << "hidden " << flow.hidden << '\n';
    for (Index l = 0; l < flow.n_layers(); ++l) {
      const CouplingLayer& layer = flow.layers[l];
      const std::string prefix = "layer" + std::to_string(l) + "_";
      write_array(out, prefix + "w_in", layer.w_in.value());
      write_array(out, prefix + "b_in", layer.b_in.value());
      write_array(out, prefix + "w_out", layer.w_out.value());
      write_array(out, prefix + "b_out", layer.b_out.value());
    }
  }

  out << "[log]\n";
  Matrix elbo(static_cast<Index>(checkpoint.elbo_log.size()), 1);
  for (Index i = 0; i < elbo.rows(); ++i) elbo(i, 0) = checkpoint.elbo_log[i];
  write_array(out, "elbo", elbo);
  return out.str();
}

ModelCheckpoint parse_checkpoint(std::istream& in) {
  Parser p(in);
  p.expect("VAGTM 1");

  p.section("[config]");
  TrainConfig cfg;
  const std::string model = p.keyval("model");
  if (model == "vagtm") {
    cfg.model_kind = ModelKind::vagtm;
  } else if (model == "vagtm-ip") {
    cfg.model_kind = ModelKind::vagtm_ip;
  } else {
    p.fail("unknown model kind '" + model + "'");
  }
  cfg.n_topics = p.keyval_int("topics");
  cfg.hidden_dim = p.keyval_int("hidden");
  cfg.coupling_layers = p.keyval_int("coupling_layers");
  cfg.alpha = p.keyval_double("alpha");
  cfg.epochs = p.keyval_int("epochs");
  cfg.batch_size = p.keyval_int("batch_size");
  cfg.learning_rate = p.keyval_double("learning_rate");
  cfg.seed = static_cast<std::uint64_t>(p.keyval_int("seed"));
  const std::string cov = p.keyval("covariance");
  if (cov == "diagonal") {
    cfg.covariance = Covariance::diagonal;
  } else if (cov == "spherical") {
    cfg.covariance = Covariance::spherical;
  } else {
    p.fail("unknown covariance '" + cov + "'");
  }
  const std::string prior = p.keyval("prior");
  if (prior == "laplace-dirichlet") {
    cfg.prior = PriorKind::laplace_dirichlet;
  } else if (prior == "standard-normal") {
    cfg.prior = PriorKind::standard_normal;
  } else {
    p.fail("unknown prior '" + prior + "'");
  }
  const Index embedding_dim = p.keyval_int("embedding_dim");

  p.section("[vocab]");
  const long long vocab_count = p.keyval_int("count");
  if (vocab_count < 1) p.fail("vocabulary must be non-empty");
  std::vector<std::string> vocab;
  vocab.reserve(vocab_count);
  for (long long i = 0; i < vocab_count; ++i) vocab.push_back(p.line());

  ModelCheckpoint checkpoint(cfg, static_cast<Index>(vocab_count),
                             embedding_dim);
  checkpoint.vocab = std::move(vocab);

  p.section("[encoder]");
  EncoderParams& enc = checkpoint.encoder;
  auto load = [&p](const std::string& name, ad::Parameter& param) {
    Matrix values = p.array(name);
    if (values.rows() != param.value().rows() ||
        values.cols() != param.value().cols()) {
      p.fail("array '" + name + "' has the wrong shape");
    }
    param.value() = std::move(values);
  };
  load("w_s1", enc.w_s1);
  load("b_s1", enc.b_s1);
  load("w_s2", enc.w_s2);
  load("b_s2", enc.b_s2);
  load("w_mu", enc.w_mu);
  load("b_mu", enc.b_mu);
  load("w_sigma", enc.w_sigma);
  load("b_sigma", enc.b_sigma);
  load("bn_mu_gamma", enc.bn_mu.gamma);
  load("bn_mu_beta", enc.bn_mu.beta);
  enc.bn_mu.running_mean = p.vector("bn_mu_running_mean", cfg.n_topics);
  enc.bn_mu.running_var = p.vector("bn_mu_running_var", cfg.n_topics);
  load("bn_sigma_gamma", enc.bn_sigma.gamma);
  load("bn_sigma_beta", enc.bn_sigma.beta);
  enc.bn_sigma.running_mean = p.vector("bn_sigma_running_mean", cfg.n_topics);
  enc.bn_sigma.running_var = p.vector("bn_sigma_running_var", cfg.n_topics);

  p.section("[topics]");
  Matrix means = p.array("means");
  Matrix log_vars = p.array("log_vars");
  if (means.rows() != cfg.n_topics || means.cols() != embedding_dim) {
    p.fail("array 'means' has the wrong shape");
  }
  const Index lv_cols =
      cfg.covariance == Covariance::spherical ? 1 : embedding_dim;
  if (log_vars.rows() != cfg.n_topics || log_vars.cols() != lv_cols) {
    p.fail("array 'log_vars' has the wrong shape");
  }
  for (Index k = 0; k < cfg.n_topics; ++k) {
    checkpoint.topics.means[k].value() = means.row(k).transpose();
    checkpoint.topics.log_vars[k].value() = log_vars.row(k).transpose();
  }
  checkpoint.embeddings = p.array("embeddings");
  if (checkpoint.embeddings.rows() != static_cast<Index>(vocab_count) ||
      checkpoint.embeddings.cols() != embedding_dim) {
    p.fail("array 'embeddings' has the wrong shape");
  }

  if (cfg.model_kind == ModelKind::vagtm_ip) {
    p.section("[flow]");
    const long long layers = p.keyval_int("layers");
    const long long hidden = p.keyval_int("hidden");
    if (layers != cfg.coupling_layers) p.fail("layer count mismatch");
    checkpoint.flow.emplace(embedding_dim, static_cast<Index>(layers),
                            static_cast<Index>(hidden));
    for (Index l = 0; l < static_cast<Index>(layers); ++l) {
      CouplingLayer& layer = checkpoint.flow->layers[l];
      const std::string prefix = "layer" + std::to_string(l) + "_";
      load(prefix + "w_in", layer.w_in);
      load(prefix + "b_in", layer.b_in);
      load(prefix + "w_out", layer.w_out);
      load(prefix + "b_out", layer.b_out);
    }
  }

  p.section("[log]");
  Matrix elbo = p.array("elbo");
  if (elbo.cols() != 1 && elbo.rows() != 0) p.fail("'elbo' must be a column");
  checkpoint.elbo_log.assign(elbo.data(), elbo.data() + elbo.rows());
  return checkpoint;
}

void write_checkpoint(const ModelCheckpoint& checkpoint,
                      const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << format_checkpoint(checkpoint);
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path);
}

ModelCheckpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  return parse_checkpoint(in);
}

}  // namespace vagtm
