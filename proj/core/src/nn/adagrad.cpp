#include "cycletrans/nn/adagrad.hpp"

#include <cmath>

#include "cycletrans/error.hpp"

namespace cycletrans::nn {

Adagrad::Adagrad(const ParamSet& params, double initial_accumulator) {
  accumulators_.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    accumulators_.push_back(
        Matrix::Constant(params.at(i).rows(), params.at(i).cols(), initial_accumulator));
  }
}

void Adagrad::step(ParamSet& params, const GradSet& grads, double learning_rate) {
  if (accumulators_.size() != params.size() || grads.size() != params.size()) {
    throw PreconditionError("optimizer state does not match the parameter set");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& acc = accumulators_[i];
    const auto& g = grads.at(i);
    acc.array() += g.array().square();
    params.at(i).array() -= learning_rate * g.array() / acc.array().sqrt();
  }
}

double clip_global_norm(GradSet& grads, double max_norm) {
  const double norm = grads.norm();
  if (norm > max_norm && norm > 0.0) grads.scale(max_norm / norm);
  return norm;
}

}  // namespace cycletrans::nn
