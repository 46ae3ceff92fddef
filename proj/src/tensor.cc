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

#include "qrc/tensor.h"

#include <atomic>
#include <sstream>

namespace qrc {
namespace {

thread_local Tape* active_tape = nullptr;

uint64_t NextTensorId() {
  static std::atomic<uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

}  // namespace

int64_t NumElements(const Shape& shape) {
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d < 0) throw ShapeError("negative extent in shape " + ShapeToString(shape));
    n *= d;
  }
  return n;
}

std::string ShapeToString(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape)
    : impl_(std::make_shared<internal::TensorImpl>()) {
  impl_->data.assign(NumElements(shape), 0.0);
  impl_->shape = std::move(shape);
  impl_->id = NextTensorId();
}

Tensor::Tensor(Shape shape, std::vector<Real> values)
    : impl_(std::make_shared<internal::TensorImpl>()) {
  if (NumElements(shape) != static_cast<int64_t>(values.size())) {
    throw ShapeError("shape " + ShapeToString(shape) + " does not hold " +
                     std::to_string(values.size()) + " values");
  }
  impl_->shape = std::move(shape);
  impl_->data = std::move(values);
  impl_->id = NextTensorId();
}

Tensor Tensor::Scalar(Real value) { return Tensor(Shape{}, {value}); }

Tensor Tensor::Full(Shape shape, Real value) {
  Tensor t(std::move(shape));
  std::fill(t.impl_->data.begin(), t.impl_->data.end(), value);
  return t;
}

int64_t Tensor::dim(int axis) const {
  const int r = rank();
  if (axis < 0) axis += r;
  if (axis < 0 || axis >= r) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " +
                     ShapeToString(shape()));
  }
  return impl_->shape[axis];
}

Real Tensor::item() const {
  if (numel() != 1) {
    throw ShapeError("item() on non-scalar " + ShapeToString(shape()));
  }
  return impl_->data[0];
}

Real Tensor::at(int64_t n, int64_t c, int64_t h, int64_t w) const {
  const Shape& s = impl_->shape;
  return impl_->data[((n * s[1] + c) * s[2] + h) * s[3] + w];
}

Tensor& Tensor::set_requires_grad(bool value) {
  if (!impl_->is_leaf) {
    throw std::logic_error("requires_grad can only be set on leaf tensors");
  }
  impl_->requires_grad = value;
  if (!value) impl_->grad.clear();
  return *this;
}

std::span<Real> Tensor::mutable_grad() { return internal::GradBuffer(*impl_); }

void Tensor::ZeroGrad() {
  if (!impl_->grad.empty()) {
    std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
  }
}

Tensor Tensor::Detach() const { return Tensor(impl_->shape, impl_->data); }

namespace internal {

std::span<Real> GradBuffer(TensorImpl& impl) {
  if (impl.grad.empty()) impl.grad.assign(impl.data.size(), 0.0);
  return impl.grad;
}

}  // namespace internal

Tape* Tape::Active() { return active_tape; }

void Tape::Record(std::string_view kind, std::span<const Tensor> inputs,
                  Tensor& output, BackwardFn backward) {
  Entry entry;
  entry.kind = kind;
  entry.input_ids.reserve(inputs.size());
  for (const Tensor& t : inputs) {
    if (t.defined()) entry.input_ids.push_back(t.id());
  }
  output.impl()->requires_grad = true;
  output.impl()->is_leaf = false;
  entry.output = output.shared_impl();
  entry.backward = std::move(backward);
  entries_.push_back(std::move(entry));
}

void Tape::Backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ShapeError("backward requires a scalar loss");
  }
  if (entries_.empty() || !loss.requires_grad() || loss.is_leaf()) {
    throw std::logic_error(
        "backward called on a loss that was computed in inference mode");
  }
  bool found = false;
  for (Entry& e : entries_) {
    e.output->grad.clear();
    if (e.output->id == loss.id()) found = true;
  }
  if (!found) {
    throw std::logic_error("backward: loss was not recorded on this tape");
  }
  NoGradScope no_grad;
  internal::GradBuffer(*loss.impl())[0] = 1.0;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->output->grad.empty()) continue;
    it->backward(it->output->grad);
  }
}

TapeScope::TapeScope(Tape& tape) : previous_(active_tape) {
  active_tape = &tape;
}

TapeScope::~TapeScope() { active_tape = previous_; }

NoGradScope::NoGradScope() : previous_(active_tape) { active_tape = nullptr; }

NoGradScope::~NoGradScope() { active_tape = previous_; }

}  // namespace qrc
