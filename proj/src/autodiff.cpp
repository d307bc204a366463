#include "vagtm/autodiff.hpp"

#include <cmath>
#include <sstream>

namespace vagtm::ad {

namespace {

std::string shape_of(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

Matrix sigmoid(const Matrix& x) {
  // stable in both tails
  return x.unaryExpr([](Scalar v) {
    if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
    const Scalar e = std::exp(v);
    return e / (1.0 + e);
  });
}

}  // namespace

[[noreturn]] void shape_error(const std::string& op, const Matrix& a,
                              const Matrix& b) {
  throw std::invalid_argument(op + ": shape mismatch (" + shape_of(a) +
                              " vs " + shape_of(b) + ")");
}

const Matrix& Node::value() const {
  if (!tape_) throw std::logic_error("Node: empty handle");
  return tape_->value_at(index_);
}

Scalar Node::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw std::invalid_argument("Node::scalar: node is not 1x1");
  }
  return v(0, 0);
}

Node Tape::make(Matrix value, bool requires_grad, PullFn pull) {
  Slot slot;
  slot.value = std::move(value);
  slot.requires_grad = requires_grad;
  slot.pull = std::move(pull);
  nodes_.push_back(std::move(slot));
  return Node(this, nodes_.size() - 1);
}

Node Tape::constant(Matrix value) {
  return make(std::move(value), false, nullptr);
}

Node Tape::parameter(Parameter& p) {
  Node n = make(p.value(), true, nullptr);
  nodes_[index_of(n)].param = &p;
  return n;
}

void Tape::backward(Node loss) {
  require(loss.valid() && &loss.tape() == this,
          "backward: loss is not a node of this tape");
  const Matrix& v = loss.value();
  require(v.rows() == 1 && v.cols() == 1, "backward: loss must be scalar");
  const std::size_t start = index_of(loss);
  if (!nodes_[start].requires_grad) return;  // constant graph, nothing to do
  accumulate(start, Matrix::Ones(1, 1));
  for (std::size_t i = start + 1; i-- > 0;) {
    Slot& slot = nodes_[i];
    if (!slot.requires_grad || slot.grad.size() == 0) continue;
    if (slot.param) {
      slot.param->grad() += slot.grad;
    } else if (slot.pull) {
      slot.pull(*this, slot.grad);
    }
    slot.grad.resize(0, 0);  // consumed; keeps repeated backward calls additive
  }
}

namespace {

// Shorthand for building a unary/binary op on the tape of its first operand.
Tape& tape_of(Node n) {
  if (!n.valid()) throw std::logic_error("op on an empty Node handle");
  return n.tape();
}

bool same_shape(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols();
}

}  // namespace

Node add(Node a, Node b) {
  Tape& t = tape_of(a);
  const Matrix &av = a.value(), &bv = b.value();
  if (!same_shape(av, bv)) shape_error("add", av, bv);
  const std::size_t ia = Tape::index_of(a), ib = Tape::index_of(b);
  bool needs = t.requires_grad_at(ia) || t.requires_grad_at(ib);
  return t.make(av + bv, needs, [ia, ib](Tape& t, const Matrix& g) {
    t.accumulate(ia, g);
    t.accumulate(ib, g);
  });
}

Node sub(Node a, Node b) {
  Tape& t = tape_of(a);
  const Matrix &av = a.value(), &bv = b.value();
  if (!same_shape(av, bv)) shape_error("sub", av, bv);
  const std::size_t ia = Tape::index_of(a), ib = Tape::index_of(b);
  bool needs = t.requires_grad_at(ia) || t.requires_grad_at(ib);
  return t.make(av - bv, needs, [ia, ib](Tape& t, const Matrix& g) {
    t.accumulate(ia, g);
    t.accumulate(ib, -g);
  });
}

Node mul(Node a, Node b) {
  Tape& t = tape_of(a);
  const Matrix &av = a.value(), &bv = b.value();
  if (!same_shape(av, bv)) shape_error("mul", av, bv);
  const std::size_t ia = Tape::index_of(a), ib = Tape::index_of(b);
  bool needs = t.requires_grad_at(ia) || t.requires_grad_at(ib);
  return t.make(av.cwiseProduct(bv), needs,
                [ia, ib](Tape& t, const Matrix& g) {
                  t.accumulate(ia, g.cwiseProduct(t.value_at(ib)));
                  t.accumulate(ib, g.cwiseProduct(t.value_at(ia)));
                });
}

Node matmul(Node a, Node b) {
  Tape& t = tape_of(a);
  const Matrix &av = a.value(), &bv = b.value();
  if (av.cols() != bv.rows()) shape_error("matmul", av, bv);
  const std::size_t ia = Tape::index_of(a), ib = Tape::index_of(b);
  bool needs = t.requires_grad_at(ia) || t.requires_grad_at(ib);
  return t.make(av * bv, needs, [ia, ib](Tape& t, const Matrix& g) {
    t.accumulate(ia, g * t.value_at(ib).transpose());
    t.accumulate(ib, t.value_at(ia).transpose() * g);
  });
}

Node transpose(Node a) {
  Tape& t = tape_of(a);
  const std::size_t ia = Tape::index_of(a);
  return t.make(a.value().transpose(), t.requires_grad_at(ia),
                [ia](Tape& t, const Matrix& g) {
                  t.accumulate(ia, g.transpose());
                });
}

Node scale(Node a, Scalar factor) {
  Tape& t = tape_of(a);
  const std::size_t ia = Tape::index_of(a);
  return t.make(a.value() * factor, t.requires_grad_at(ia),
                [ia, factor](Tape& t, const Matrix& g) {
                  t.accumulate(ia, g * factor);
                });
}

Node add_const(Node a, Scalar shift) {
  Tape& t = tape_of(a);
  const std::size_t ia = Tape::index_of(a);
  return t.make(a.value().array() + shift, t.requires_grad_at(ia),
                [ia](Tape& t, const Matrix& g) { t.accumulate(ia, g); });
}

Node pow_const(Node a, Scalar exponent) {
  Tape& t = tape_of(a);
  const std::size_t ia = Tape::index_of(a);
  Matrix v = a.value().array().pow(exponent);
  return t.make(std::move(v), t.requires_grad_at(ia),
                [ia, exponent](Tape& t, const Matrix& g) {
                  const Matrix& x = t.value_at(ia);
                  t.accumulate(
                      ia, (exponent * x.array().pow(exponent - 1) * g.array())
                              .matrix());
                });
}

Node exp(Node a) {
  Tape& t = tape_of(a);
  const std::size_t ia = Tape::index_of(a);
  Node out = t.make(a.value().array().exp(), t.requires_grad_at(ia), nullptr);
  const std::size_t io = Tape::index_of(out);
  t.set_pull(out, [ia, io](Tape& t, const Matrix& g) {
    t.accumulate(ia, g.cwiseProduct(t.value_at(io)));
  });
  return out;
}

Node log(Node a) {
  Tape& t = tape_of(a);
  const std::size_t ia = Tape::index_of(a);
  return t.make(a.value().array().log(), t.requires_grad_at(ia),
                [ia](Tape& t, const Matrix& g) {
                  t.accumulate(ia, g.cwiseQuotient(t.value_at(ia)));
                });
}

Node softplus(Node a) {
  Tape& t = tape_of(a);
  const std::size_t ia = Tape::index_of(a);
  Matrix v = a.value().unaryExpr([](Scalar x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
  });
  return t.make(std::move(v), t.requires_grad_at(ia),
                [ia](Tape& t, const Matrix& g) {
                  t.accumulate(ia, sigmoid(t.value_at(ia)).cwiseProduct(g));
                });
}

Node clamp(Node a, Scalar lo, Scalar hi) {
  Tape& t = tape_of(a);
  const std::size_t ia = Tape::index_of(a);
  Matrix v = a.value().array().max(lo).min(hi);
  return t.make(std::move(v), t.requires_grad_at(ia),
                [ia, lo, hi](Tape& t, const Matrix& g) {
                  const Matrix& x = t.value_at(ia);
                  Matrix masked =
                      (x.array() > lo && x.array() < hi)
                          .select(g, Matrix::Zero(g.rows(), g.cols()));
                  t.accumulate(ia, masked);
                });
}

Node clamp_min(Node a, Scalar lo) {
  Tape& t = tape_of(a);
  const std::size_t ia = Tape::index_of(a);
  Matrix v = a.value().array().max(lo);
  return t.make(std::move(v), t.requires_grad_at(ia),
                [ia, lo](Tape& t, const Matrix& g) {
                  const Matrix& x = t.value_at(ia);
                  Matrix masked =
                      (x.array() > lo)
                          .select(g, Matrix::Zero(g.rows(), g.cols()));
                  t.accumulate(ia, masked);
                });
}

Node sum(Node a) {
  Tape& t = tape_of(a);
  const std::size_t ia = Tape::index_of(a);
  Matrix v(1, 1);
  v(0, 0) = a.value().sum();
  return t.make(std::move(v), t.requires_grad_at(ia),
                [ia](Tape& t, const Matrix& g) {
                  const Matrix& x = t.value_at(ia);
                  t.accumulate(
                      ia, Matrix::Constant(x.rows(), x.cols(), g(0, 0)));
                });
}

Node rowwise_sum(Node a) {
  Tape& t = tape_of(a);
  const std::size_t ia = Tape::index_of(a);
  Matrix v = a.value().rowwise().sum();
  return t.make(std::move(v), t.requires_grad_at(ia),
                [ia](Tape& t, const Matrix& g) {
                  t.accumulate(ia, g.replicate(1, t.value_at(ia).cols()));
                });
}

Node colwise_sum(Node a) {
  Tape& t = tape_of(a);
  const std::size_t ia = Tape::index_of(a);
  Matrix v = a.value().colwise().sum();
  return t.make(std::move(v), t.requires_grad_at(ia),
                [ia](Tape& t, const Matrix& g) {
                  t.accumulate(ia, g.replicate(t.value_at(ia).rows(), 1));
                });
}

Node dot(Node a, Node b) {
  Tape& t = tape_of(a);
  const Matrix &av = a.value(), &bv = b.value();
  if (!same_shape(av, bv)) shape_error("dot", av, bv);
  const std::size_t ia = Tape::index_of(a), ib = Tape::index_of(b);
  bool needs = t.requires_grad_at(ia) || t.requires_grad_at(ib);
  Matrix v(1, 1);
  v(0, 0) = av.cwiseProduct(bv).sum();
  return t.make(std::move(v), needs, [ia, ib](Tape& t, const Matrix& g) {
    t.accumulate(ia, g(0, 0) * t.value_at(ib));
    t.accumulate(ib, g(0, 0) * t.value_at(ia));
  });
}

namespace {

Matrix columnwise_softmax_value(const Matrix& x) {
  Matrix y(x.rows(), x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    const Scalar m = x.col(j).maxCoeff();
    Vector e = (x.col(j).array() - m).exp();
    y.col(j) = e / e.sum();
  }
  return y;
}

}  // namespace

Node colwise_softmax(Node a) {
  Tape& t = tape_of(a);
  const std::size_t ia = Tape::index_of(a);
  Node out = t.make(columnwise_softmax_value(a.value()),
                    t.requires_grad_at(ia), nullptr);
  const std::size_t io = Tape::index_of(out);
  // dx_j = y_j .* (g_j - <g_j, y_j>)
  t.set_pull(out, [ia, io](Tape& t, const Matrix& g) {
    const Matrix& y = t.value_at(io);
    Matrix dx(y.rows(), y.cols());
    for (Index j = 0; j < y.cols(); ++j) {
      const Scalar inner = g.col(j).dot(y.col(j));
      dx.col(j) = y.col(j).cwiseProduct((g.col(j).array() - inner).matrix());
    }
    t.accumulate(ia, dx);
  });
  return out;
}

Node softmax(Node a) {
  if (a.value().cols() != 1) {
    throw std::invalid_argument("softmax: expected a column vector");
  }
  return colwise_softmax(a);
}

Node logsumexp(Node a) {
  Tape& t = tape_of(a);
  const Matrix& x = a.value();
  if (x.cols() != 1) {
    throw std::invalid_argument("logsumexp: expected a column vector");
  }
  const std::size_t ia = Tape::index_of(a);
  const Scalar m = x.maxCoeff();
  const Scalar lse = m + std::log((x.array() - m).exp().sum());
  Matrix v(1, 1);
  v(0, 0) = lse;
  return t.make(std::move(v), t.requires_grad_at(ia),
                [ia, lse](Tape& t, const Matrix& g) {
                  const Matrix& x = t.value_at(ia);
                  t.accumulate(ia,
                               (g(0, 0) * (x.array() - lse).exp()).matrix());
                });
}

Node colwise_add(Node m, Node v) {
  Tape& t = tape_of(m);
  const Matrix &mv = m.value(), &vv = v.value();
  if (vv.cols() != 1 || vv.rows() != mv.rows()) {
    shape_error("colwise_add", mv, vv);
  }
  const std::size_t im = Tape::index_of(m), iv = Tape::index_of(v);
  bool needs = t.requires_grad_at(im) || t.requires_grad_at(iv);
  Matrix out = mv;
  out.colwise() += vv.col(0);
  return t.make(std::move(out), needs, [im, iv](Tape& t, const Matrix& g) {
    t.accumulate(im, g);
    t.accumulate(iv, g.rowwise().sum());
  });
}

Node colwise_mul(Node m, Node v) {
  Tape& t = tape_of(m);
  const Matrix &mv = m.value(), &vv = v.value();
  if (vv.cols() != 1 || vv.rows() != mv.rows()) {
    shape_error("colwise_mul", mv, vv);
  }
  const std::size_t im = Tape::index_of(m), iv = Tape::index_of(v);
  bool needs = t.requires_grad_at(im) || t.requires_grad_at(iv);
  Matrix out = mv.array().colwise() * vv.col(0).array();
  return t.make(std::move(out), needs, [im, iv](Tape& t, const Matrix& g) {
    const Matrix& mval = t.value_at(im);
    const Matrix& vval = t.value_at(iv);
    t.accumulate(im, (g.array().colwise() * vval.col(0).array()).matrix());
    t.accumulate(iv, g.cwiseProduct(mval).rowwise().sum());
  });
}

Node rowwise_add(Node m, Node v) {
  Tape& t = tape_of(m);
  const Matrix &mv = m.value(), &vv = v.value();
  if (vv.cols() != 1 || vv.rows() != mv.cols()) {
    shape_error("rowwise_add", mv, vv);
  }
  const std::size_t im = Tape::index_of(m), iv = Tape::index_of(v);
  bool needs = t.requires_grad_at(im) || t.requires_grad_at(iv);
  Matrix out = mv;
  out.rowwise() += vv.col(0).transpose();
  return t.make(std::move(out), needs, [im, iv](Tape& t, const Matrix& g) {
    t.accumulate(im, g);
    t.accumulate(iv, g.colwise().sum().transpose());
  });
}

Node rowwise_mul(Node m, Node v) {
  Tape& t = tape_of(m);
  const Matrix &mv = m.value(), &vv = v.value();
  if (vv.cols() != 1 || vv.rows() != mv.cols()) {
    shape_error("rowwise_mul", mv, vv);
  }
  const std::size_t im = Tape::index_of(m), iv = Tape::index_of(v);
  bool needs = t.requires_grad_at(im) || t.requires_grad_at(iv);
  Matrix out = mv.array().rowwise() * vv.col(0).transpose().array();
  return t.make(std::move(out), needs, [im, iv](Tape& t, const Matrix& g) {
    const Matrix& mval = t.value_at(im);
    const Matrix& vval = t.value_at(iv);
    t.accumulate(im,
                 (g.array().rowwise() * vval.col(0).transpose().array())
                     .matrix());
    t.accumulate(iv, g.cwiseProduct(mval).colwise().sum().transpose());
  });
}

Node add_scalar(Node a, Node s) {
  Tape& t = tape_of(a);
  const Matrix& sv = s.value();
  if (sv.rows() != 1 || sv.cols() != 1) {
    throw std::invalid_argument("add_scalar: shift must be 1x1");
  }
  const std::size_t ia = Tape::index_of(a), is = Tape::index_of(s);
  bool needs = t.requires_grad_at(ia) || t.requires_grad_at(is);
  Matrix out = a.value().array() + sv(0, 0);
  return t.make(std::move(out), needs, [ia, is](Tape& t, const Matrix& g) {
    t.accumulate(ia, g);
    Matrix gs(1, 1);
    gs(0, 0) = g.sum();
    t.accumulate(is, gs);
  });
}

Node block_cols(Node a, Index start, Index n) {
  Tape& t = tape_of(a);
  const Matrix& av = a.value();
  if (start < 0 || n < 0 || start + n > av.cols()) {
    throw std::invalid_argument("block_cols: range out of bounds");
  }
  const std::size_t ia = Tape::index_of(a);
  return t.make(av.middleCols(start, n), t.requires_grad_at(ia),
                [ia, start, n](Tape& t, const Matrix& g) {
                  const Matrix& x = t.value_at(ia);
                  Matrix padded = Matrix::Zero(x.rows(), x.cols());
                  padded.middleCols(start, n) = g;
                  t.accumulate(ia, padded);
                });
}

Node hcat(const std::vector<Node>& parts) {
  if (parts.empty()) throw std::invalid_argument("hcat: no parts");
  Tape& t = tape_of(parts.front());
  const Index rows = parts.front().rows();
  Index cols = 0;
  bool needs = false;
  std::vector<std::size_t> indices;
  std::vector<Index> widths;
  for (Node p : parts) {
    if (p.rows() != rows) shape_error("hcat", parts.front().value(), p.value());
    indices.push_back(Tape::index_of(p));
    widths.push_back(p.cols());
    cols += p.cols();
    needs = needs || t.requires_grad_at(Tape::index_of(p));
  }
  Matrix out(rows, cols);
  Index off = 0;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.middleCols(off, widths[i]) = t.value_at(indices[i]);
    off += widths[i];
  }
  return t.make(std::move(out), needs,
                [indices, widths](Tape& t, const Matrix& g) {
                  Index off = 0;
                  for (std::size_t i = 0; i < indices.size(); ++i) {
                    t.accumulate(indices[i], g.middleCols(off, widths[i]));
                    off += widths[i];
                  }
                });
}

Node affine(Node w, Node x, Node b) { return colwise_add(matmul(w, x), b); }

Node batchnorm(Node x, BatchNorm& state, Mode mode) {
  Tape& t = tape_of(x);
  // note: node creation may reallocate the tape, so take shapes by value
  const Index rows = x.rows();
  const Index batch = x.cols();
  if (rows != state.dim()) {
    throw std::invalid_argument("batchnorm: dimension mismatch");
  }
  Node gamma = t.parameter(state.gamma);
  Node beta = t.parameter(state.beta);
  if (mode == Mode::train) {
    if (batch < 2) {
      throw std::invalid_argument("batchnorm: train mode needs batch size >= 2");
    }
    const Scalar inv_b = 1.0 / static_cast<Scalar>(batch);
    Node mean = scale(rowwise_sum(x), inv_b);
    Node centered = colwise_add(x, scale(mean, -1.0));
    Node var = scale(rowwise_sum(mul(centered, centered)), inv_b);
    state.running_mean = state.momentum * state.running_mean +
                         (1.0 - state.momentum) * mean.value().col(0);
    state.running_var = state.momentum * state.running_var +
                        (1.0 - state.momentum) * var.value().col(0);
    Node inv_std = pow_const(add_const(var, state.epsilon), -0.5);
    Node normalized = colwise_mul(centered, inv_std);
    return colwise_add(colwise_mul(normalized, gamma), beta);
  }
  Node shift = t.constant(-state.running_mean);
  Node inv_std = t.constant(
      (state.running_var.array() + state.epsilon).rsqrt().matrix());
  Node normalized = colwise_mul(colwise_add(x, shift), inv_std);
  return colwise_add(colwise_mul(normalized, gamma), beta);
}

Scalar fd_max_rel_error(const std::function<Node(Tape&)>& build,
                        const std::vector<Parameter*>& params, Scalar step) {
  if (step <= 0) throw std::invalid_argument("fd_max_rel_error: step must be > 0");
  auto evaluate = [&build]() {
    Tape tape;
    return build(tape).scalar();
  };
  Scalar worst = 0.0;
  for (Parameter* p : params) {
    Matrix& v = p->value();
    const Matrix& analytic = p->grad();
    for (Index j = 0; j < v.cols(); ++j) {
      for (Index i = 0; i < v.rows(); ++i) {
        const Scalar original = v(i, j);
        v(i, j) = original + step;
        const Scalar hi = evaluate();
        v(i, j) = original - step;
        const Scalar lo = evaluate();
        v(i, j) = original;
        const Scalar numeric = (hi - lo) / (2.0 * step);
        const Scalar a = analytic(i, j);
        const Scalar rel = std::abs(a - numeric) /
                           std::max(1e-8, std::abs(a) + std::abs(numeric));
        worst = std::max(worst, rel);
      }
    }
  }
  return worst;
}

Scalar grad_check(const std::function<Node(Tape&)>& build,
                  const std::vector<Parameter*>& params, Scalar step) {
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    Node loss = build(tape);
    tape.backward(loss);
  }
  return fd_max_rel_error(build, params, step);
}

}  // namespace vagtm::ad
