// Copyright 2026 The GAIN-NER Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GAIN_NUM_TENSOR_H_
#define GAIN_NUM_TENSOR_H_

#include <cstddef>
#include <span>
#include <vector>

namespace gain::num {

// Dense row-major array of doubles. Shapes used here are {} (scalar),
// {n} (vector) and {rows, cols} (matrix).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<size_t> shape, double fill = 0.0);
  Tensor(std::vector<size_t> shape, std::vector<double> values);

  static Tensor scalar(double v) { return Tensor({}, std::vector<double>{v}); }
  static Tensor matrix(size_t rows, size_t cols, double fill = 0.0) {
    return Tensor({rows, cols}, fill);
  }
  static Tensor vector(size_t n, double fill = 0.0) { return Tensor({n}, fill); }

  const std::vector<size_t>& shape() const { return shape_; }
  size_t ndim() const { return shape_.size(); }
  size_t size() const { return values_.size(); }
  bool allocated() const { return !values_.empty(); }

  // Last dimension; 1 for scalars.
  size_t cols() const { return shape_.empty() ? 1 : shape_.back(); }
  // Product of all but the last dimension.
  size_t rows() const { return cols() == 0 ? 0 : size() / cols(); }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  double& operator[](size_t i) { return values_[i]; }
  double operator[](size_t i) const { return values_[i]; }
  double& at(size_t r, size_t c) { return values_[r * cols() + c]; }
  double at(size_t r, size_t c) const { return values_[r * cols() + c]; }

  std::span<double> row(size_t r) { return {values_.data() + r * cols(), cols()}; }
  std::span<const double> row(size_t r) const {
    return {values_.data() + r * cols(), cols()};
  }

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  void fill(double v);
  Tensor& operator+=(const Tensor& other);

  bool all_finite() const;
  double sum() const;

  // Bitwise comparison of values (distinguishes -0.0 and NaN payloads).
  bool bit_equal(const Tensor& other) const;
  bool operator==(const Tensor& other) const = default;

 private:
  std::vector<size_t> shape_;
  std::vector<double> values_;
};

// Zeros with the same shape.
inline Tensor zeros_like(const Tensor& t) { return Tensor(t.shape(), 0.0); }

}  // namespace gain::num

#endif  // GAIN_NUM_TENSOR_H_
