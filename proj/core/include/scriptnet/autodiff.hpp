// SPDX-FileCopyrightText: (c) 2026 The ScriptNet Authors
//
// SPDX-License-Identifier: Apache-2.0

// Minimal reverse-mode automatic differentiation over dense row-major tensors.
//
// A Tensor is a shared handle to an immutable value buffer plus an optional
// gradient buffer. Operations are free functions that take the Tape they
// record onto; when no input participates in differentiation (or the tape is
// not recording) nothing is recorded and the op is a plain forward
// computation.
//
// Gradients of intermediate values live inside the Tape. Leaf tensors created
// with requires_grad get their tape-local gradient added into their own grad
// buffer at the end of Tape::backward, so gradients accumulate across calls
// until zero_grad().

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "scriptnet/scalar.hpp"

namespace scriptnet::ad {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

class Tape;

class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<Scalar> data, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor filled(Shape shape, Scalar value, bool requires_grad = false);
  static Tensor scalar(Scalar value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const;

  std::span<const Scalar> data() const;
  // Only optimizers and initializers write parameter values in place.
  std::span<Scalar> mutable_data();
  Scalar item() const;

  bool requires_grad() const;
  bool has_grad() const;
  std::span<const Scalar> grad() const;
  // Allocates a zero gradient buffer on first access.
  std::span<Scalar> mutable_grad();
  void zero_grad();

  // Identity of the underlying buffer, shared by copies of this handle.
  const void* id() const { return impl_.get(); }

 private:
  friend class Tape;

  struct Impl {
    Shape shape;
    std::vector<Scalar> data;
    std::vector<Scalar> grad;
    bool requires_grad = false;
    // Nonzero when this value was produced by an op recorded on that tape.
    std::uint64_t tape = 0;
    std::size_t slot = 0;
  };

  std::shared_ptr<Impl> impl_;
};

// View handed to a backward rule. out_grad() is the gradient of the op's
// output; in_grad(i) is the accumulation buffer of input i, or an empty span
// when that input does not need a gradient.
class GradContext {
 public:
  GradContext(std::span<const Scalar> out_grad, std::vector<std::span<Scalar>> in_grads)
      : out_grad_(out_grad), in_grads_(std::move(in_grads)) {}

  std::span<const Scalar> out_grad() const { return out_grad_; }
  std::span<Scalar> in_grad(std::size_t i) const { return in_grads_[i]; }
  bool wants(std::size_t i) const { return !in_grads_[i].empty(); }

 private:
  std::span<const Scalar> out_grad_;
  std::vector<std::span<Scalar>> in_grads_;
};

using BackwardFn = std::function<void(const GradContext&)>;

class Tape {
 public:
  explicit Tape(bool recording = true);
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }

  // NaN/Inf check after every op. On by default in debug builds.
  void set_check_finite(bool enabled) { check_finite_ = enabled; }
  bool check_finite() const { return check_finite_; }

  // True when gradients must flow into `t` through ops on this tape.
  bool needs_grad(const Tensor& t) const;

  // Registers `output` as computed from `inputs`. Returns `output` linked to
  // this tape when any input needs a gradient; otherwise returns it as a
  // constant and the rule is dropped.
  Tensor record(Tensor output, const std::vector<Tensor>& inputs, BackwardFn rule);

  // Verifies finiteness of an op result when checking is enabled.
  void check(const Tensor& t, const char* op) const;

  // Reverse pass from a scalar loss. Visits nodes in exact reverse recording
  // order, then adds leaf gradients into each leaf's grad buffer.
  void backward(const Tensor& loss);

  std::size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    std::vector<std::size_t> input_slots;
    std::size_t output_slot;
    BackwardFn rule;
  };

  static constexpr std::size_t kNoSlot = static_cast<std::size_t>(-1);

  std::size_t slot_of(const Tensor& t);
  std::span<Scalar> slot_grad(std::size_t slot);

  std::uint64_t id_;
  bool recording_;
  bool check_finite_;
  std::vector<Node> nodes_;
  std::vector<std::size_t> slot_sizes_;
  std::vector<std::vector<Scalar>> slot_grads_;
  // Leaves in first-use order with their slot.
  std::vector<std::pair<Tensor, std::size_t>> leaves_;
};

enum class UnaryKind { kSigmoid, kTanh, kRelu, kNeg, kLog };
enum class BinaryKind { kAdd, kSub, kMul };

// a[m,k] * b[k,n] -> [m,n]
Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);

Tensor apply_unary(Tape& tape, UnaryKind kind, const Tensor& x);
inline Tensor sigmoid(Tape& tape, const Tensor& x) { return apply_unary(tape, UnaryKind::kSigmoid, x); }
inline Tensor tanh(Tape& tape, const Tensor& x) { return apply_unary(tape, UnaryKind::kTanh, x); }
inline Tensor relu(Tape& tape, const Tensor& x) { return apply_unary(tape, UnaryKind::kRelu, x); }
inline Tensor neg(Tape& tape, const Tensor& x) { return apply_unary(tape, UnaryKind::kNeg, x); }
inline Tensor log(Tape& tape, const Tensor& x) { return apply_unary(tape, UnaryKind::kLog, x); }

// Elementwise with equal shapes, or `b` broadcast over the leading axes of
// `a` when b's shape equals a trailing suffix of a's shape.
Tensor apply_binary(Tape& tape, BinaryKind kind, const Tensor& a, const Tensor& b);
inline Tensor add(Tape& tape, const Tensor& a, const Tensor& b) { return apply_binary(tape, BinaryKind::kAdd, a, b); }
inline Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) { return apply_binary(tape, BinaryKind::kSub, a, b); }
inline Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) { return apply_binary(tape, BinaryKind::kMul, a, b); }

Tensor scale(Tape& tape, const Tensor& x, Scalar factor);
// Sum of all elements -> [1].
Tensor sum(Tape& tape, const Tensor& x);
Tensor mean(Tape& tape, const Tensor& x);

Tensor reshape(Tape& tape, const Tensor& x, Shape shape);
// [m,n] -> [n,m]
Tensor transpose(Tape& tape, const Tensor& x);
// Rows [begin,end) of the leading axis.
Tensor slice_rows(Tape& tape, const Tensor& x, std::size_t begin, std::size_t end);
// Columns [begin,end) of a rank-2 tensor.
Tensor slice_cols(Tape& tape, const Tensor& x, std::size_t begin, std::size_t end);
// Concatenation along the leading axis; trailing shapes must agree.
Tensor concat_rows(Tape& tape, const std::vector<Tensor>& parts);
// Concatenation of rank-2 tensors along axis 1 (rank-1 parts concatenate).
Tensor concat_cols(Tape& tape, const std::vector<Tensor>& parts);

// Row lookup: table[V,E], ids -> [ids.size(), E].
Tensor gather_rows(Tape& tape, const Tensor& table, std::span<const std::uint16_t> ids);

}  // namespace scriptnet::ad
