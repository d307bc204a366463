#include "vagtm/flow.hpp"

#include <stdexcept>
#include <string>

#include "vagtm/decoder.hpp"

namespace vagtm {

namespace {

Vector softplus_vec(const Vector& x) {
  return x.unaryExpr([](Scalar v) {
    return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v)));
  });
}

}  // namespace

CouplingLayer::CouplingLayer(Index dim_in, bool swap, Index hidden,
                             Index layer_id) {
  dim = dim_in;
  swap_halves = swap;
  if (dim < 2) throw std::invalid_argument("CouplingLayer: dim must be >= 2");
  const std::string prefix = "flow" + std::to_string(layer_id);
  w_in = ad::Parameter(prefix + ".w_in", Matrix::Zero(hidden, input_dim()));
  b_in = ad::Parameter(prefix + ".b_in", Matrix::Zero(hidden, 1));
  w_out = ad::Parameter(prefix + ".w_out", Matrix::Zero(coupled_dim(), hidden));
  b_out = ad::Parameter(prefix + ".b_out", Matrix::Zero(coupled_dim(), 1));
}

Vector CouplingLayer::coupling_m(const Vector& x) const {
  Vector hidden = softplus_vec(w_in.value() * x + b_in.value().col(0));
  return w_out.value() * hidden + b_out.value().col(0);
}

Vector CouplingLayer::apply_forward(const Vector& x) const {
  if (x.size() != dim) {
    throw std::invalid_argument("coupling layer: dimension mismatch");
  }
  const Index s = split();
  Vector out = x;
  if (swap_halves) {
    out.head(s) += coupling_m(x.tail(dim - s));
  } else {
    out.tail(dim - s) += coupling_m(x.head(s));
  }
  return out;
}

Vector CouplingLayer::apply_inverse(const Vector& y) const {
  if (y.size() != dim) {
    throw std::invalid_argument("coupling layer: dimension mismatch");
  }
  const Index s = split();
  Vector out = y;
  if (swap_halves) {
    out.head(s) -= coupling_m(y.tail(dim - s));
  } else {
    out.tail(dim - s) -= coupling_m(y.head(s));
  }
  return out;
}

void CouplingLayer::init(Rng& rng, Scalar weight_std) {
  auto fill = [&rng, weight_std](Matrix& m) {
    for (Index j = 0; j < m.cols(); ++j) {
      for (Index i = 0; i < m.rows(); ++i) m(i, j) = weight_std * rng.normal();
    }
  };
  fill(w_in.value());
  fill(w_out.value());
  b_in.value().setZero();
  b_out.value().setZero();
}

std::vector<ad::Parameter*> CouplingLayer::parameters() {
  return {&w_in, &b_in, &w_out, &b_out};
}

FlowParams::FlowParams(Index dim_in, Index n_layers, Index hidden_in) {
  if (n_layers < 2) {
    throw std::invalid_argument("FlowParams: need at least 2 coupling layers");
  }
  dim = dim_in;
  hidden = hidden_in;
  layers.reserve(n_layers);
  for (Index l = 0; l < n_layers; ++l) {
    layers.emplace_back(dim, l % 2 == 1, hidden, l);
  }
}

void FlowParams::init(Rng& rng, Scalar weight_std) {
  for (auto& layer : layers) layer.init(rng, weight_std);
}

std::vector<ad::Parameter*> FlowParams::parameters() {
  std::vector<ad::Parameter*> out;
  for (auto& layer : layers) {
    for (auto* p : layer.parameters()) out.push_back(p);
  }
  return out;
}

Vector forward_project(const Vector& e, const FlowParams& flow) {
  if (e.size() != flow.dim) {
    throw std::invalid_argument("forward_project: dimension mismatch");
  }
  Vector current = e;
  for (const auto& layer : flow.layers) {
    current = layer.apply_forward(current);
  }
  return current;
}

Vector inverse_project(const Vector& w, const FlowParams& flow) {
  if (w.size() != flow.dim) {
    throw std::invalid_argument("inverse_project: dimension mismatch");
  }
  Vector current = w;
  for (auto it = flow.layers.rbegin(); it != flow.layers.rend(); ++it) {
    current = it->apply_inverse(current);
  }
  return current;
}

Matrix inverse_project_rows(const Matrix& rows, const FlowParams& flow) {
  if (rows.cols() != flow.dim) {
    throw std::invalid_argument("inverse_project_rows: dimension mismatch");
  }
  Matrix current = rows;
  const Index s = (flow.dim + 1) / 2;
  for (auto it = flow.layers.rbegin(); it != flow.layers.rend(); ++it) {
    const auto& layer = *it;
    const Matrix& w_in = layer.w_in.value();
    const Matrix& w_out = layer.w_out.value();
    auto pass = layer.swap_halves ? current.rightCols(flow.dim - s)
                                  : current.leftCols(s);
    Matrix hidden = (pass * w_in.transpose()).rowwise() +
                    layer.b_in.value().col(0).transpose();
    hidden = hidden.unaryExpr([](Scalar v) {
      return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v)));
    });
    Matrix shift = (hidden * w_out.transpose()).rowwise() +
                   layer.b_out.value().col(0).transpose();
    if (layer.swap_halves) {
      current.leftCols(s) -= shift;
    } else {
      current.rightCols(flow.dim - s) -= shift;
    }
  }
  return current;
}

Scalar ip_log_density(const Vector& w, const FlowParams& flow,
                      const Vector& mean, const Vector& log_var) {
  return log_density(inverse_project(w, flow), mean, log_var);
}

namespace {

// m applied to every row of x (n x d_in) -> n x d_out
ad::Node coupling_m_rows(ad::Tape& tape, CouplingLayer& layer, ad::Node x) {
  ad::Node pre = ad::rowwise_add(
      ad::matmul(x, ad::transpose(tape.parameter(layer.w_in))),
      tape.parameter(layer.b_in));
  ad::Node hidden = ad::softplus(pre);
  return ad::rowwise_add(
      ad::matmul(hidden, ad::transpose(tape.parameter(layer.w_out))),
      tape.parameter(layer.b_out));
}

}  // namespace

ad::Node inverse_project_node(ad::Tape& tape, ad::Node rows,
                              FlowParams& flow) {
  if (rows.cols() != flow.dim) {
    throw std::invalid_argument("inverse_project_node: dimension mismatch");
  }
  const Index s = (flow.dim + 1) / 2;
  ad::Node current = rows;
  for (auto it = flow.layers.rbegin(); it != flow.layers.rend(); ++it) {
    auto& layer = *it;
    ad::Node first = ad::block_cols(current, 0, s);
    ad::Node second = ad::block_cols(current, s, flow.dim - s);
    if (layer.swap_halves) {
      first = ad::sub(first, coupling_m_rows(tape, layer, second));
    } else {
      second = ad::sub(second, coupling_m_rows(tape, layer, first));
    }
    current = ad::hcat({first, second});
  }
  return current;
}

}  // namespace vagtm
