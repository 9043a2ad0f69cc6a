#include "cycletrans/nn/params.hpp"

#include <cmath>

#include "cycletrans/error.hpp"
#include "cycletrans/random.hpp"

namespace cycletrans::nn {

ParamId ParamSet::add(std::string name, Eigen::Index rows, Eigen::Index cols) {
  if (find(name)) throw ValidationError("duplicate parameter name " + name);
  names_.push_back(std::move(name));
  values_.push_back(Matrix::Zero(rows, cols));
  return ParamId{values_.size() - 1};
}

std::optional<std::size_t> ParamSet::find(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t ParamSet::scalar_count() const noexcept {
  std::size_t n = 0;
  for (const auto& v : values_) n += static_cast<std::size_t>(v.size());
  return n;
}

void ParamSet::init_uniform(double scale, Rng& rng) {
  for (auto& v : values_) {
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      for (Eigen::Index i = 0; i < v.rows(); ++i) v(i, j) = rng.uniform(-scale, scale);
    }
  }
}

bool ParamSet::all_finite() const {
  for (const auto& v : values_) {
    if (!v.allFinite()) return false;
  }
  return true;
}

GradSet::GradSet(const ParamSet& params) {
  grads_.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    grads_.push_back(Matrix::Zero(params.at(i).rows(), params.at(i).cols()));
  }
}

void GradSet::zero() {
  for (auto& g : grads_) g.setZero();
}

void GradSet::scale(double factor) {
  for (auto& g : grads_) g *= factor;
}

void GradSet::add(const GradSet& other, double factor) {
  for (std::size_t i = 0; i < grads_.size(); ++i) grads_[i] += factor * other.grads_[i];
}

double GradSet::squared_norm() const {
  double s = 0.0;
  for (const auto& g : grads_) s += g.squaredNorm();
  return s;
}

double GradSet::norm() const { return std::sqrt(squared_norm()); }

double GradSet::dot(const GradSet& other) const {
  double s = 0.0;
  for (std::size_t i = 0; i < grads_.size(); ++i) s += grads_[i].cwiseProduct(other.grads_[i]).sum();
  return s;
}

bool GradSet::all_finite() const {
  for (const auto& g : grads_) {
    if (!g.allFinite()) return false;
  }
  return true;
}

}  // namespace cycletrans::nn
