#pragma once

#include <vector>

#include "vagtm/autodiff.hpp"
#include "vagtm/rng.hpp"
#include "vagtm/types.hpp"

namespace vagtm {

// One additive coupling layer on D-dimensional vectors. The vector is split
// at s = ceil(D/2); the pass-through half feeds a small net m whose output
// shifts the other half, so the layer is exactly invertible and its Jacobian
// determinant is 1.
struct CouplingLayer {
  ad::Parameter w_in;   // hidden x d_in
  ad::Parameter b_in;   // hidden x 1
  ad::Parameter w_out;  // d_out x hidden
  ad::Parameter b_out;  // d_out x 1
  bool swap_halves = false;  // false: shift the second half, true: the first
  Index dim = 0;

  CouplingLayer() = default;
  CouplingLayer(Index dim, bool swap_halves, Index hidden, Index layer_id);

  Index split() const { return (dim + 1) / 2; }
  Index coupled_dim() const { return swap_halves ? split() : dim - split(); }
  Index input_dim() const { return swap_halves ? dim - split() : split(); }

  // m(x) = w_out * softplus(w_in * x + b_in) + b_out
  Vector coupling_m(const Vector& x) const;

  Vector apply_forward(const Vector& x) const;  // shifted half += m
  Vector apply_inverse(const Vector& y) const;  // shifted half -= m

  void init(Rng& rng, Scalar weight_std = 0.01);
  std::vector<ad::Parameter*> parameters();
};

// A stack of L >= 2 coupling layers with alternating orientation, so two
// consecutive layers together modify every dimension.
struct FlowParams {
  std::vector<CouplingLayer> layers;
  Index dim = 0;
  Index hidden = 64;

  FlowParams() = default;
  FlowParams(Index dim, Index n_layers, Index hidden = 64);

  Index n_layers() const { return static_cast<Index>(layers.size()); }
  void init(Rng& rng, Scalar weight_std = 0.01);
  std::vector<ad::Parameter*> parameters();
};

// e -> w: layers applied in order, each in its forward sense.
Vector forward_project(const Vector& e, const FlowParams& flow);

// w -> e: layers applied in reverse order, each inverted.
Vector inverse_project(const Vector& w, const FlowParams& flow);

// Applies inverse_project to every row of a V x D matrix.
Matrix inverse_project_rows(const Matrix& rows, const FlowParams& flow);

// log N(inverse_project(w); mean, diag(exp(log_var))). The Jacobian factor
// of the change of variables is identically 1 for additive coupling and is
// therefore omitted (asserted separately in tests).
Scalar ip_log_density(const Vector& w, const FlowParams& flow,
                      const Vector& mean, const Vector& log_var);

// Graph version of inverse_project_rows; `rows` is n x D.
ad::Node inverse_project_node(ad::Tape& tape, ad::Node rows,
                              FlowParams& flow);

}  // namespace vagtm
