#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace cycletrans {
class Rng;
}

namespace cycletrans::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Handle to one tensor inside a ParamSet.
struct ParamId {
  std::size_t index = 0;
};

/// Named parameter tensors of one network, in registration order.
class ParamSet {
 public:
  ParamId add(std::string name, Eigen::Index rows, Eigen::Index cols);

  Matrix& operator[](ParamId id) { return values_[id.index]; }
  const Matrix& operator[](ParamId id) const { return values_[id.index]; }
  Matrix& at(std::size_t i) { return values_.at(i); }
  const Matrix& at(std::size_t i) const { return values_.at(i); }

  const std::string& name(std::size_t i) const { return names_.at(i); }
  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t size() const noexcept { return values_.size(); }
  std::size_t scalar_count() const noexcept;

  /// Every entry ~ uniform(-scale, scale).
  void init_uniform(double scale, Rng& rng);
  bool all_finite() const;

 private:
  std::vector<std::string> names_;
  std::vector<Matrix> values_;
};

/// Gradient buffers shaped like a ParamSet. Backward passes accumulate into
/// one of these instead of the model, so concurrent workers can each own one.
class GradSet {
 public:
  GradSet() = default;
  explicit GradSet(const ParamSet& params);

  Matrix& operator[](ParamId id) { return grads_[id.index]; }
  const Matrix& operator[](ParamId id) const { return grads_[id.index]; }
  Matrix& at(std::size_t i) { return grads_.at(i); }
  const Matrix& at(std::size_t i) const { return grads_.at(i); }
  std::size_t size() const noexcept { return grads_.size(); }

  void zero();
  void scale(double factor);
  /// this += factor * other
  void add(const GradSet& other, double factor = 1.0);
  double squared_norm() const;
  double norm() const;
  double dot(const GradSet& other) const;
  bool all_finite() const;

 private:
  std::vector<Matrix> grads_;
};

}  // namespace cycletrans::nn
