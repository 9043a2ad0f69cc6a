#include "cycletrans/nn/layers.hpp"

#include "cycletrans/error.hpp"
#include "cycletrans/nn/ops.hpp"

namespace cycletrans::nn {

Embedding Embedding::create(ParamSet& params, const std::string& name, int vocab_size, int dim) {
  return Embedding{params.add(name, dim, vocab_size), dim};
}

Vector Embedding::lookup(const ParamSet& params, TokenId token) const {
  const auto& table_ = params[table];
  if (token < 0 || token >= table_.cols()) {
    throw ValidationError("token id " + std::to_string(token) + " outside embedding table");
  }
  return table_.col(token);
}

std::vector<Vector> Embedding::lookup(const ParamSet& params,
                                      std::span<const TokenId> tokens) const {
  std::vector<Vector> out;
  out.reserve(tokens.size());
  for (auto t : tokens) out.push_back(lookup(params, t));
  return out;
}

void Embedding::backward(TokenId token, const Vector& grad, GradSet& g) const {
  g[table].col(token) += grad;
}

void Embedding::backward(std::span<const TokenId> tokens, std::span<const Vector> grads,
                         GradSet& g) const {
  for (std::size_t t = 0; t < tokens.size(); ++t) backward(tokens[t], grads[t], g);
}

Linear Linear::create(ParamSet& params, const std::string& name, int in, int out) {
  return Linear{params.add(name + "/weight", out, in), params.add(name + "/bias", out, 1)};
}

Vector Linear::forward(const ParamSet& params, const Vector& x) const {
  return params[weight] * x + params[bias].col(0);
}

Vector Linear::backward(const ParamSet& params, const Vector& x, const Vector& dy,
                        GradSet& g) const {
  g[weight].noalias() += dy * x.transpose();
  g[bias].col(0) += dy;
  return params[weight].transpose() * dy;
}

LstmLayer LstmLayer::create(ParamSet& params, const std::string& name, int input_size,
                            int hidden_size) {
  LstmLayer layer;
  layer.weight = params.add(name + "/weight", 4 * hidden_size, input_size + hidden_size);
  layer.bias = params.add(name + "/bias", 4 * hidden_size, 1);
  layer.input_size = input_size;
  layer.hidden_size = hidden_size;
  return layer;
}

LstmStep LstmLayer::step(const ParamSet& params, const Vector& x, const Vector& h_prev,
                         const Vector& c_prev) const {
  const auto& w = params[weight];
  const Eigen::Index h = hidden_size;
  Vector z = params[bias].col(0);
  z.noalias() += w.leftCols(input_size) * x;
  z.noalias() += w.rightCols(h) * h_prev;

  LstmStep s;
  s.x = x;
  s.h_prev = h_prev;
  s.c_prev = c_prev;
  s.i = sigmoid(z.segment(0, h));
  s.f = sigmoid(z.segment(h, h));
  s.o = sigmoid(z.segment(2 * h, h));
  s.g = nn::tanh(z.segment(3 * h, h));
  s.c = s.f.cwiseProduct(c_prev) + s.i.cwiseProduct(s.g);
  s.tanh_c = nn::tanh(s.c);
  s.h = s.o.cwiseProduct(s.tanh_c);
  return s;
}

LstmTrace LstmLayer::run(const ParamSet& params, std::span<const Vector> inputs, const Vector& h0,
                         const Vector& c0) const {
  LstmTrace trace;
  trace.steps.reserve(inputs.size());
  const Vector* h = &h0;
  const Vector* c = &c0;
  for (const auto& x : inputs) {
    trace.steps.push_back(step(params, x, *h, *c));
    h = &trace.steps.back().h;
    c = &trace.steps.back().c;
  }
  return trace;
}

LstmTrace LstmLayer::run(const ParamSet& params, std::span<const Vector> inputs) const {
  const Vector zero = Vector::Zero(hidden_size);
  return run(params, inputs, zero, zero);
}

void LstmLayer::step_backward(const ParamSet& params, const LstmStep& s, const Vector& dh,
                              const Vector& dc, GradSet& g, Vector& dx, Vector& dh_prev,
                              Vector& dc_prev) const {
  const Eigen::Index h = hidden_size;
  const auto ones = Vector::Ones(h).array();
  const Vector d_o = dh.cwiseProduct(s.tanh_c);
  const Vector dct =
      dc + (dh.array() * s.o.array() * (ones - s.tanh_c.array().square())).matrix();

  Vector dz(4 * h);
  dz.segment(0, h) = (dct.array() * s.g.array() * s.i.array() * (ones - s.i.array())).matrix();
  dz.segment(h, h) = (dct.array() * s.c_prev.array() * s.f.array() * (ones - s.f.array())).matrix();
  dz.segment(2 * h, h) = (d_o.array() * s.o.array() * (ones - s.o.array())).matrix();
  dz.segment(3 * h, h) = (dct.array() * s.i.array() * (ones - s.g.array().square())).matrix();

  auto& gw = g[weight];
  gw.leftCols(input_size).noalias() += dz * s.x.transpose();
  gw.rightCols(h).noalias() += dz * s.h_prev.transpose();
  g[bias].col(0) += dz;

  const auto& w = params[weight];
  dx.noalias() = w.leftCols(input_size).transpose() * dz;
  dh_prev.noalias() = w.rightCols(h).transpose() * dz;
  dc_prev = dct.cwiseProduct(s.f);
}

LstmLayer::InputGrads LstmLayer::backward(const ParamSet& params, const LstmTrace& trace,
                                          std::span<const Vector> dh_out, GradSet& g,
                                          const Vector& dc_last) const {
  const std::size_t n = trace.steps.size();
  InputGrads out;
  out.dx.resize(n);
  Vector dh_next = Vector::Zero(hidden_size);
  Vector dc_next = dc_last.size() ? dc_last : Vector::Zero(hidden_size);
  Vector dh_prev(hidden_size);
  Vector dc_prev(hidden_size);
  for (std::size_t t = n; t-- > 0;) {
    Vector dh = dh_next;
    if (t < dh_out.size() && dh_out[t].size()) dh += dh_out[t];
    step_backward(params, trace.steps[t], dh, dc_next, g, out.dx[t], dh_prev, dc_prev);
    dh_next = dh_prev;
    dc_next = dc_prev;
  }
  out.dh0 = std::move(dh_next);
  out.dc0 = std::move(dc_next);
  return out;
}

}  // namespace cycletrans::nn
