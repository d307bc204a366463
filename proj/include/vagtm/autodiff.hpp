#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "vagtm/types.hpp"

namespace vagtm::ad {

// A named dense tensor with a gradient accumulator. Parameters outlive the
// tapes that reference them; backward() adds into grad().
class Parameter {
 public:
  Parameter() = default;
  Parameter(std::string name, Matrix value, bool trainable = true)
      : name_(std::move(name)),
        value_(std::move(value)),
        grad_(Matrix::Zero(value_.rows(), value_.cols())),
        trainable_(trainable) {}

  const std::string& name() const { return name_; }
  Matrix& value() { return value_; }
  const Matrix& value() const { return value_; }
  Matrix& grad() { return grad_; }
  const Matrix& grad() const { return grad_; }
  bool trainable() const { return trainable_; }
  void zero_grad() { grad_.setZero(); }

 private:
  std::string name_;
  Matrix value_;
  Matrix grad_;
  bool trainable_ = true;
};

enum class Mode { train, eval };

class Tape;

// Handle into a Tape. Valid only while the owning tape is alive.
class Node {
 public:
  Node() = default;
  const Matrix& value() const;
  Scalar scalar() const;  // value of a 1x1 node
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  Tape& tape() const { return *tape_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Node(Tape* tape, std::size_t index) : tape_(tape), index_(index) {}
  Tape* tape_ = nullptr;
  std::size_t index_ = 0;
};

// Records a computation as it is built. Creation order is a topological
// order of the DAG, so one reverse sweep visits every node exactly once.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Node constant(Matrix value);
  Node parameter(Parameter& p);

  // Propagates d(loss)/d(node) from a 1x1 loss node and adds the results
  // into every reachable Parameter's grad(). Node-level gradient buffers are
  // consumed by the sweep, so repeated calls accumulate into parameters.
  void backward(Node loss);

  std::size_t size() const { return nodes_.size(); }

  // --- used by the op free functions ---
  using PullFn = std::function<void(Tape&, const Matrix&)>;
  Node make(Matrix value, bool requires_grad, PullFn pull);
  // for ops whose backward reads their own output (exp, softmax)
  void set_pull(Node n, PullFn pull) { nodes_[n.index_].pull = std::move(pull); }
  const Matrix& value_at(std::size_t i) const { return nodes_[i].value; }
  bool requires_grad_at(std::size_t i) const {
    return nodes_[i].requires_grad;
  }
  static std::size_t index_of(Node n) { return n.index_; }
  Node handle(std::size_t i) { return Node(this, i); }

  template <typename Expr>
  void accumulate(std::size_t i, const Expr& contribution) {
    Slot& slot = nodes_[i];
    if (!slot.requires_grad) return;
    if (slot.grad.size() == 0) {
      slot.grad = Matrix::Zero(slot.value.rows(), slot.value.cols());
    }
    slot.grad += contribution;
  }

 private:
  struct Slot {
    Matrix value;
    Matrix grad;  // empty until a child contributes
    Parameter* param = nullptr;
    bool requires_grad = false;
    PullFn pull;
  };
  std::vector<Slot> nodes_;
};

[[noreturn]] void shape_error(const std::string& op, const Matrix& a,
                              const Matrix& b);

// --- primitives ---------------------------------------------------------
// Elementwise ops require identical shapes; matmul requires inner agreement.

Node add(Node a, Node b);
Node sub(Node a, Node b);
Node mul(Node a, Node b);  // Hadamard
Node matmul(Node a, Node b);
Node transpose(Node a);
Node scale(Node a, Scalar factor);
Node add_const(Node a, Scalar shift);
Node pow_const(Node a, Scalar exponent);
Node exp(Node a);
Node log(Node a);
Node softplus(Node a);  // ln(1+e^x), computed as max(x,0)+log1p(e^-|x|)
Node clamp(Node a, Scalar lo, Scalar hi);
Node clamp_min(Node a, Scalar lo);
Node sum(Node a);          // 1x1
Node rowwise_sum(Node a);  // n x 1
Node colwise_sum(Node a);  // 1 x m
Node dot(Node a, Node b);  // 1x1, same-shape inputs
Node softmax(Node a);      // column vector, max-shifted
Node colwise_softmax(Node a);
Node logsumexp(Node a);  // column vector -> 1x1, max-shifted

// Broadcasts, named after the Eigen colwise()/rowwise() convention:
// colwise_* applies an n-vector to every column of an n x m matrix,
// rowwise_* applies an m-vector (given as m x 1) to every row.
Node colwise_add(Node m, Node v);
Node colwise_mul(Node m, Node v);
Node rowwise_add(Node m, Node v);
Node rowwise_mul(Node m, Node v);

// a + s * ones, with s a 1x1 node.
Node add_scalar(Node a, Node s);

Node block_cols(Node a, Index start, Index n);
Node hcat(const std::vector<Node>& parts);

// w * x + b with b broadcast over the columns of x.
Node affine(Node w, Node x, Node b);

// --- batch normalization -------------------------------------------------

struct BatchNorm {
  Parameter gamma;  // n x 1, init 1
  Parameter beta;   // n x 1, init 0
  Vector running_mean;
  Vector running_var;
  Scalar momentum = 0.99;
  Scalar epsilon = 1e-5;

  BatchNorm(const std::string& name, Index n)
      : gamma(name + ".gamma", Matrix::Ones(n, 1)),
        beta(name + ".beta", Matrix::Zero(n, 1)),
        running_mean(Vector::Zero(n)),
        running_var(Vector::Ones(n)) {}

  Index dim() const { return running_mean.size(); }
};

// x is n x B, normalized per row across the batch. Train mode uses batch
// statistics (biased variance) and updates the running estimates; eval mode
// uses the running estimates. Train mode requires B >= 2.
Node batchnorm(Node x, BatchNorm& state, Mode mode);

// --- gradient checking -----------------------------------------------------

// Builds the graph once, runs backward, then compares every parameter
// coordinate against central differences. Returns the max of
// |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
Scalar grad_check(const std::function<Node(Tape&)>& build,
                  const std::vector<Parameter*>& params, Scalar step);

// The finite-difference half of grad_check: compares whatever is currently
// stored in each parameter's grad() against central differences.
Scalar fd_max_rel_error(const std::function<Node(Tape&)>& build,
                        const std::vector<Parameter*>& params, Scalar step);

}  // namespace vagtm::ad
