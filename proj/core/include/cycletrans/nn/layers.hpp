#pragma once

#include <span>
#include <string>
#include <vector>

#include "cycletrans/nn/params.hpp"
#include "cycletrans/vocabulary.hpp"

namespace cycletrans::nn {

/// Embedding table stored column-per-token (dim x vocab).
struct Embedding {
  ParamId table;
  int dim = 0;

  static Embedding create(ParamSet& params, const std::string& name, int vocab_size, int dim);

  std::vector<Vector> lookup(const ParamSet& params, std::span<const TokenId> tokens) const;
  Vector lookup(const ParamSet& params, TokenId token) const;
  void backward(std::span<const TokenId> tokens, std::span<const Vector> grads, GradSet& g) const;
  void backward(TokenId token, const Vector& grad, GradSet& g) const;
};

/// y = W x + b
struct Linear {
  ParamId weight;
  ParamId bias;

  static Linear create(ParamSet& params, const std::string& name, int in, int out);

  Vector forward(const ParamSet& params, const Vector& x) const;
  /// Accumulates dW, db; returns dL/dx.
  Vector backward(const ParamSet& params, const Vector& x, const Vector& dy, GradSet& g) const;
};

/// Forward activations of one LSTM step, kept for backpropagation.
struct LstmStep {
  Vector x, h_prev, c_prev;
  Vector i, f, o, g;
  Vector c, tanh_c, h;
};

struct LstmTrace {
  std::vector<LstmStep> steps;

  const Vector& last_h() const { return steps.back().h; }
  const Vector& last_c() const { return steps.back().c; }
};

/// Standard LSTM cell. Gate pre-activations z = W [x; h_prev] + b, with W
/// rows ordered (input, forget, output, candidate).
struct LstmLayer {
  ParamId weight;
  ParamId bias;
  int input_size = 0;
  int hidden_size = 0;

  static LstmLayer create(ParamSet& params, const std::string& name, int input_size,
                          int hidden_size);

  LstmStep step(const ParamSet& params, const Vector& x, const Vector& h_prev,
                const Vector& c_prev) const;
  LstmTrace run(const ParamSet& params, std::span<const Vector> inputs, const Vector& h0,
                const Vector& c0) const;
  LstmTrace run(const ParamSet& params, std::span<const Vector> inputs) const;

  /// Backward through one step. `dh`, `dc` are the total gradients flowing
  /// into this step's outputs; writes gradients for its inputs.
  void step_backward(const ParamSet& params, const LstmStep& s, const Vector& dh, const Vector& dc,
                     GradSet& g, Vector& dx, Vector& dh_prev, Vector& dc_prev) const;

  struct InputGrads {
    std::vector<Vector> dx;
    Vector dh0;
    Vector dc0;
  };

  /// BPTT over a whole trace. `dh_out[t]` is the loss gradient w.r.t. h_t
  /// coming from outside the recurrence (may be empty = zero), `dc_last` an
  /// extra gradient on the final cell state (may be empty).
  InputGrads backward(const ParamSet& params, const LstmTrace& trace,
                      std::span<const Vector> dh_out, GradSet& g,
                      const Vector& dc_last = Vector()) const;
};

}  // namespace cycletrans::nn
