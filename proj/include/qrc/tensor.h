// Copyright 2026 The QR Codec Authors.
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

#ifndef QRC_TENSOR_H_
#define QRC_TENSOR_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace qrc {

using Real = double;
using Shape = std::vector<int64_t>;

int64_t NumElements(const Shape& shape);
std::string ShapeToString(const Shape& shape);

// Raised when operands do not conform to a primitive's shape rule.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace internal {

struct TensorImpl {
  Shape shape;
  std::vector<Real> data;
  // Empty when no gradient has been accumulated.
  std::vector<Real> grad;
  bool requires_grad = false;
  // False for values produced by a recorded primitive.
  bool is_leaf = true;
  uint64_t id = 0;
};

}  // namespace internal

// Dense row-major array of reals. Copies share storage; use Clone() for a
// deep copy. Image-like data is laid out N x C x H x W.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<Real> values);

  static Tensor Scalar(Real value);
  static Tensor Full(Shape shape, Real value);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  int rank() const { return static_cast<int>(impl_->shape.size()); }
  int64_t dim(int axis) const;
  int64_t numel() const { return static_cast<int64_t>(impl_->data.size()); }
  uint64_t id() const { return impl_->id; }

  std::span<const Real> data() const { return impl_->data; }
  std::span<Real> mutable_data() { return impl_->data; }
  Real item() const;
  Real operator[](int64_t i) const { return impl_->data[i]; }
  // Element of a rank-4 tensor.
  Real at(int64_t n, int64_t c, int64_t h, int64_t w) const;

  bool requires_grad() const { return impl_->requires_grad; }
  // Only leaves may be marked; a leaf that does not require grad never
  // accumulates one.
  Tensor& set_requires_grad(bool value);
  bool is_leaf() const { return impl_->is_leaf; }

  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<const Real> grad() const { return impl_->grad; }
  std::span<Real> mutable_grad();
  void ZeroGrad();
  void ClearGrad() { impl_->grad.clear(); }

  // New leaf holding a copy of the values, not attached to any tape.
  Tensor Detach() const;
  Tensor Clone() const { return Detach(); }

  internal::TensorImpl* impl() const { return impl_.get(); }
  const std::shared_ptr<internal::TensorImpl>& shared_impl() const {
    return impl_;
  }

 private:
  std::shared_ptr<internal::TensorImpl> impl_;
};

// Ordered record of primitive applications. A tape becomes active for the
// current thread through a TapeScope; with no active tape every primitive
// runs in inference mode and nothing is recorded.
class Tape {
 public:
  using BackwardFn = std::function<void(std::span<const Real> grad_out)>;

  struct Entry {
    std::string_view kind;
    std::vector<uint64_t> input_ids;
    std::shared_ptr<internal::TensorImpl> output;
    BackwardFn backward;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Populates grad of every leaf reachable from `loss`. Leaf gradients
  // accumulate across calls; intermediate gradients are reset first.
  void Backward(const Tensor& loss);

  void Record(std::string_view kind, std::span<const Tensor> inputs,
              Tensor& output, BackwardFn backward);

  size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<Entry>& entries() const { return entries_; }
  void Clear() { entries_.clear(); }

  // Tape recording on this thread, or nullptr in inference mode.
  static Tape* Active();

 private:
  friend class TapeScope;
  std::vector<Entry> entries_;
};

class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

// Suspends recording for its lifetime.
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  Tape* previous_;
};

inline bool GradEnabled() { return Tape::Active() != nullptr; }

namespace internal {
// Gradient buffer of `impl`, allocated as zeros on first use.
std::span<Real> GradBuffer(TensorImpl& impl);
}  // namespace internal

}  // namespace qrc

#endif  // QRC_TENSOR_H_
