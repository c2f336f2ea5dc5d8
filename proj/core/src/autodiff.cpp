// SPDX-FileCopyrightText: (c) 2026 The ScriptNet Authors
//
// SPDX-License-Identifier: Apache-2.0

#include "scriptnet/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "scriptnet/errors.hpp"

namespace scriptnet::ad {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

// ---------------------------------------------------------------------------
// Tensor

Tensor::Tensor(Shape shape, std::vector<Scalar> data, bool requires_grad) {
  if (shape.empty()) throw DimensionError("tensor shape must have at least one axis");
  for (std::size_t d : shape) {
    if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_string(shape));
  }
  if (shape_numel(shape) != data.size()) {
    throw DimensionError("tensor shape " + shape_string(shape) + " does not match " +
                         std::to_string(data.size()) + " values");
  }
  impl_ = std::make_shared<Impl>();
  impl_->shape = std::move(shape);
  impl_->data = std::move(data);
  impl_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return filled(std::move(shape), Scalar(0), requires_grad); }

Tensor Tensor::filled(Shape shape, Scalar value, bool requires_grad) {
  std::vector<Scalar> data(shape_numel(shape), value);
  return Tensor(std::move(shape), std::move(data), requires_grad);
}

Tensor Tensor::scalar(Scalar value, bool requires_grad) { return Tensor({1}, {value}, requires_grad); }

const Shape& Tensor::shape() const {
  if (!impl_) throw ContractError("use of undefined tensor");
  return impl_->shape;
}

std::size_t Tensor::dim(std::size_t axis) const {
  const Shape& s = shape();
  if (axis >= s.size()) throw DimensionError("axis " + std::to_string(axis) + " out of range for " + shape_string(s));
  return s[axis];
}

std::size_t Tensor::size() const { return impl_ ? impl_->data.size() : 0; }

std::span<const Scalar> Tensor::data() const {
  if (!impl_) throw ContractError("use of undefined tensor");
  return impl_->data;
}

std::span<Scalar> Tensor::mutable_data() {
  if (!impl_) throw ContractError("use of undefined tensor");
  return impl_->data;
}

Scalar Tensor::item() const {
  if (size() != 1) throw DimensionError("item() on tensor of shape " + shape_string(shape()));
  return impl_->data[0];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }
bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }

std::span<const Scalar> Tensor::grad() const {
  if (!impl_) throw ContractError("use of undefined tensor");
  return impl_->grad;
}

std::span<Scalar> Tensor::mutable_grad() {
  if (!impl_) throw ContractError("use of undefined tensor");
  if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), Scalar(0));
  return impl_->grad;
}

void Tensor::zero_grad() {
  if (impl_ && !impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), Scalar(0));
}

// ---------------------------------------------------------------------------
// Tape

namespace {
std::atomic<std::uint64_t> next_tape_id{1};
}  // namespace

Tape::Tape(bool recording)
    : id_(next_tape_id.fetch_add(1)),
      recording_(recording),
#ifdef NDEBUG
      check_finite_(false)
#else
      check_finite_(true)
#endif
{
}

bool Tape::needs_grad(const Tensor& t) const {
  if (!recording_ || !t.defined()) return false;
  if (t.impl_->tape == id_) return true;
  return t.impl_->tape == 0 && t.impl_->requires_grad;
}

std::size_t Tape::slot_of(const Tensor& t) {
  if (t.impl_->tape == id_) return t.impl_->slot;
  for (const auto& [leaf, slot] : leaves_) {
    if (leaf.id() == t.id()) return slot;
  }
  std::size_t slot = slot_sizes_.size();
  slot_sizes_.push_back(t.size());
  slot_grads_.emplace_back();
  leaves_.emplace_back(t, slot);
  return slot;
}

std::span<Scalar> Tape::slot_grad(std::size_t slot) {
  auto& g = slot_grads_[slot];
  if (g.empty()) g.assign(slot_sizes_[slot], Scalar(0));
  return g;
}

Tensor Tape::record(Tensor output, const std::vector<Tensor>& inputs, BackwardFn rule) {
  if (!recording_) return output;
  std::vector<std::size_t> slots;
  slots.reserve(inputs.size());
  bool any = false;
  for (const Tensor& in : inputs) {
    if (needs_grad(in)) {
      slots.push_back(slot_of(in));
      any = true;
    } else {
      slots.push_back(kNoSlot);
    }
  }
  if (!any) return output;
  std::size_t out_slot = slot_sizes_.size();
  slot_sizes_.push_back(output.size());
  slot_grads_.emplace_back();
  output.impl_->requires_grad = true;
  output.impl_->tape = id_;
  output.impl_->slot = out_slot;
  nodes_.push_back(Node{std::move(slots), out_slot, std::move(rule)});
  return output;
}

void Tape::check(const Tensor& t, const char* op) const {
  if (!check_finite_) return;
  for (Scalar v : t.data()) {
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite value produced by ") + op);
  }
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " +
                        (loss.defined() ? shape_string(loss.shape()) : std::string("<undefined>")));
  }
  if (nodes_.empty()) throw ContractError("backward on an empty tape");
  if (loss.impl_->tape != id_) throw ContractError("loss was not recorded on this tape");

  for (auto& g : slot_grads_) g.clear();
  slot_grad(loss.impl_->slot)[0] = Scalar(1);

  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
    const Node& node = *it;
    if (slot_grads_[node.output_slot].empty()) continue;
    std::vector<std::span<Scalar>> in_grads;
    in_grads.reserve(node.input_slots.size());
    for (std::size_t s : node.input_slots) {
      in_grads.push_back(s == kNoSlot ? std::span<Scalar>{} : slot_grad(s));
    }
    node.rule(GradContext(slot_grads_[node.output_slot], std::move(in_grads)));
  }

  for (auto& [leaf, slot] : leaves_) {
    const auto& g = slot_grads_[slot];
    if (g.empty()) continue;
    Tensor handle = leaf;
    auto dst = handle.mutable_grad();
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
  }
  for (auto& g : slot_grads_) {
    g.clear();
    g.shrink_to_fit();
  }
}

// ---------------------------------------------------------------------------
// Operations

namespace {

Tensor finish(Tape& tape, Tensor out, const std::vector<Tensor>& inputs, BackwardFn rule, const char* op) {
  tape.check(out, op);
  return tape.record(std::move(out), inputs, std::move(rule));
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_string(t.shape()));
  }
}

Scalar stable_sigmoid(Scalar x) {
  if (x >= 0) return Scalar(1) / (Scalar(1) + std::exp(-x));
  Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

}  // namespace

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) {
    throw DimensionError("matmul: inner dimensions differ, " + shape_string(a.shape()) + " x " +
                         shape_string(b.shape()));
  }
  std::vector<Scalar> c(m * n, Scalar(0));
  const Scalar* pa = a.data().data();
  const Scalar* pb = b.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    Scalar* row = c.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const Scalar av = pa[i * k + p];
      const Scalar* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
  return finish(
      tape, Tensor({m, n}, std::move(c)), {a, b},
      [a, b, m, k, n](const GradContext& ctx) {
        auto g = ctx.out_grad();
        if (ctx.wants(0)) {
          auto da = ctx.in_grad(0);
          const Scalar* pb = b.data().data();
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t p = 0; p < k; ++p) {
              Scalar acc = 0;
              for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * pb[p * n + j];
              da[i * k + p] += acc;
            }
          }
        }
        if (ctx.wants(1)) {
          auto db = ctx.in_grad(1);
          const Scalar* pa = a.data().data();
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t p = 0; p < k; ++p) {
              const Scalar av = pa[i * k + p];
              Scalar* dst = db.data() + p * n;
              const Scalar* src = g.data() + i * n;
              for (std::size_t j = 0; j < n; ++j) dst[j] += av * src[j];
            }
          }
        }
      },
      "matmul");
}

Tensor apply_unary(Tape& tape, UnaryKind kind, const Tensor& x) {
  auto in = x.data();
  std::vector<Scalar> y(in.size());
  switch (kind) {
    case UnaryKind::kSigmoid:
      for (std::size_t i = 0; i < in.size(); ++i) y[i] = stable_sigmoid(in[i]);
      break;
    case UnaryKind::kTanh:
      for (std::size_t i = 0; i < in.size(); ++i) y[i] = std::tanh(in[i]);
      break;
    case UnaryKind::kRelu:
      for (std::size_t i = 0; i < in.size(); ++i) y[i] = in[i] > 0 ? in[i] : Scalar(0);
      break;
    case UnaryKind::kNeg:
      for (std::size_t i = 0; i < in.size(); ++i) y[i] = -in[i];
      break;
    case UnaryKind::kLog:
      for (std::size_t i = 0; i < in.size(); ++i) {
        if (!(in[i] > 0)) throw DomainError("log of non-positive value " + std::to_string(in[i]));
        y[i] = std::log(in[i]);
      }
      break;
  }
  Tensor out(x.shape(), std::move(y));
  return finish(
      tape, out, {x},
      [x, out, kind](const GradContext& ctx) {
        auto g = ctx.out_grad();
        auto dx = ctx.in_grad(0);
        auto xv = x.data();
        auto yv = out.data();
        switch (kind) {
          case UnaryKind::kSigmoid:
            for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * yv[i] * (Scalar(1) - yv[i]);
            break;
          case UnaryKind::kTanh:
            for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * (Scalar(1) - yv[i] * yv[i]);
            break;
          case UnaryKind::kRelu:
            for (std::size_t i = 0; i < g.size(); ++i) dx[i] += xv[i] > 0 ? g[i] : Scalar(0);
            break;
          case UnaryKind::kNeg:
            for (std::size_t i = 0; i < g.size(); ++i) dx[i] -= g[i];
            break;
          case UnaryKind::kLog:
            for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] / xv[i];
            break;
        }
      },
      "apply_unary");
}

Tensor apply_binary(Tape& tape, BinaryKind kind, const Tensor& a, const Tensor& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  bool ok = sa == sb || b.size() == 1;
  if (!ok && sb.size() < sa.size()) ok = std::equal(sb.begin(), sb.end(), sa.end() - sb.size());
  if (!ok) {
    throw DimensionError("binary op: shapes " + shape_string(sa) + " and " + shape_string(sb) +
                         " are not broadcastable");
  }
  const std::size_t inner = b.size();
  const std::size_t outer = a.size() / inner;
  auto av = a.data();
  auto bv = b.data();
  std::vector<Scalar> c(a.size());
  for (std::size_t o = 0; o < outer; ++o) {
    const std::size_t base = o * inner;
    switch (kind) {
      case BinaryKind::kAdd:
        for (std::size_t j = 0; j < inner; ++j) c[base + j] = av[base + j] + bv[j];
        break;
      case BinaryKind::kSub:
        for (std::size_t j = 0; j < inner; ++j) c[base + j] = av[base + j] - bv[j];
        break;
      case BinaryKind::kMul:
        for (std::size_t j = 0; j < inner; ++j) c[base + j] = av[base + j] * bv[j];
        break;
    }
  }
  return finish(
      tape, Tensor(sa, std::move(c)), {a, b},
      [a, b, kind, inner, outer](const GradContext& ctx) {
        auto g = ctx.out_grad();
        auto av = a.data();
        auto bv = b.data();
        if (ctx.wants(0)) {
          auto da = ctx.in_grad(0);
          for (std::size_t o = 0; o < outer; ++o) {
            const std::size_t base = o * inner;
            for (std::size_t j = 0; j < inner; ++j) {
              const Scalar gi = g[base + j];
              da[base + j] += kind == BinaryKind::kMul ? gi * bv[j] : gi;
            }
          }
        }
        if (ctx.wants(1)) {
          auto db = ctx.in_grad(1);
          for (std::size_t o = 0; o < outer; ++o) {
            const std::size_t base = o * inner;
            for (std::size_t j = 0; j < inner; ++j) {
              const Scalar gi = g[base + j];
              switch (kind) {
                case BinaryKind::kAdd: db[j] += gi; break;
                case BinaryKind::kSub: db[j] -= gi; break;
                case BinaryKind::kMul: db[j] += gi * av[base + j]; break;
              }
            }
          }
        }
      },
      "apply_binary");
}

Tensor scale(Tape& tape, const Tensor& x, Scalar factor) {
  auto in = x.data();
  std::vector<Scalar> y(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) y[i] = in[i] * factor;
  return finish(
      tape, Tensor(x.shape(), std::move(y)), {x},
      [factor](const GradContext& ctx) {
        auto g = ctx.out_grad();
        auto dx = ctx.in_grad(0);
        for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i] * factor;
      },
      "scale");
}

Tensor sum(Tape& tape, const Tensor& x) {
  Scalar acc = 0;
  for (Scalar v : x.data()) acc += v;
  return finish(
      tape, Tensor::scalar(acc), {x},
      [](const GradContext& ctx) {
        const Scalar g = ctx.out_grad()[0];
        for (Scalar& d : ctx.in_grad(0)) d += g;
      },
      "sum");
}

Tensor mean(Tape& tape, const Tensor& x) {
  return scale(tape, sum(tape, x), Scalar(1) / static_cast<Scalar>(x.size()));
}

Tensor reshape(Tape& tape, const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.size()) {
    throw DimensionError("reshape: cannot view " + shape_string(x.shape()) + " as " + shape_string(shape));
  }
  auto in = x.data();
  return finish(
      tape, Tensor(std::move(shape), std::vector<Scalar>(in.begin(), in.end())), {x},
      [](const GradContext& ctx) {
        auto g = ctx.out_grad();
        auto dx = ctx.in_grad(0);
        for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
      },
      "reshape");
}

Tensor transpose(Tape& tape, const Tensor& x) {
  require_rank(x, 2, "transpose");
  const std::size_t m = x.dim(0), n = x.dim(1);
  auto in = x.data();
  std::vector<Scalar> y(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) y[j * m + i] = in[i * n + j];
  return finish(
      tape, Tensor({n, m}, std::move(y)), {x},
      [m, n](const GradContext& ctx) {
        auto g = ctx.out_grad();
        auto dx = ctx.in_grad(0);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) dx[i * n + j] += g[j * m + i];
      },
      "transpose");
}

Tensor slice_rows(Tape& tape, const Tensor& x, std::size_t begin, std::size_t end) {
  const std::size_t rows = x.dim(0);
  if (begin >= end || end > rows) {
    throw DimensionError("slice_rows: range [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") invalid for " + shape_string(x.shape()));
  }
  const std::size_t row_size = x.size() / rows;
  Shape shape = x.shape();
  shape[0] = end - begin;
  auto in = x.data().subspan(begin * row_size, (end - begin) * row_size);
  const std::size_t offset = begin * row_size;
  return finish(
      tape, Tensor(std::move(shape), std::vector<Scalar>(in.begin(), in.end())), {x},
      [offset](const GradContext& ctx) {
        auto g = ctx.out_grad();
        auto dx = ctx.in_grad(0).subspan(offset, g.size());
        for (std::size_t i = 0; i < g.size(); ++i) dx[i] += g[i];
      },
      "slice_rows");
}

Tensor slice_cols(Tape& tape, const Tensor& x, std::size_t begin, std::size_t end) {
  require_rank(x, 2, "slice_cols");
  const std::size_t m = x.dim(0), n = x.dim(1);
  if (begin >= end || end > n) {
    throw DimensionError("slice_cols: range [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") invalid for " + shape_string(x.shape()));
  }
  const std::size_t w = end - begin;
  auto in = x.data();
  std::vector<Scalar> y(m * w);
  for (std::size_t i = 0; i < m; ++i)
    std::copy_n(in.data() + i * n + begin, w, y.data() + i * w);
  return finish(
      tape, Tensor({m, w}, std::move(y)), {x},
      [m, n, w, begin](const GradContext& ctx) {
        auto g = ctx.out_grad();
        auto dx = ctx.in_grad(0);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < w; ++j) dx[i * n + begin + j] += g[i * w + j];
      },
      "slice_cols");
}

Tensor concat_rows(Tape& tape, const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  Shape shape = parts[0].shape();
  std::size_t rows = 0;
  for (const Tensor& p : parts) {
    const Shape& s = p.shape();
    if (s.size() != shape.size() || !std::equal(s.begin() + 1, s.end(), shape.begin() + 1)) {
      throw DimensionError("concat_rows: trailing shapes differ, " + shape_string(shape) + " vs " +
                           shape_string(s));
    }
    rows += s[0];
  }
  shape[0] = rows;
  std::vector<Scalar> y;
  y.reserve(shape_numel(shape));
  std::vector<std::size_t> offsets;
  offsets.reserve(parts.size());
  for (const Tensor& p : parts) {
    offsets.push_back(y.size());
    y.insert(y.end(), p.data().begin(), p.data().end());
  }
  return finish(
      tape, Tensor(std::move(shape), std::move(y)), parts,
      [offsets](const GradContext& ctx) {
        auto g = ctx.out_grad();
        for (std::size_t k = 0; k < offsets.size(); ++k) {
          if (!ctx.wants(k)) continue;
          auto dx = ctx.in_grad(k);
          for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g[offsets[k] + i];
        }
      },
      "concat_rows");
}

Tensor concat_cols(Tape& tape, const std::vector<Tensor>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const bool flat = parts[0].rank() == 1;
  const std::size_t m = flat ? 1 : parts[0].dim(0);
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const Tensor& p : parts) {
    if (p.rank() != (flat ? 1u : 2u) || (!flat && p.dim(0) != m)) {
      throw DimensionError("concat_cols: incompatible part " + shape_string(p.shape()) + " for " +
                           shape_string(parts[0].shape()));
    }
    widths.push_back(flat ? p.dim(0) : p.dim(1));
    total += widths.back();
  }
  std::vector<Scalar> y(m * total);
  std::size_t col = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    auto in = parts[k].data();
    for (std::size_t i = 0; i < m; ++i)
      std::copy_n(in.data() + i * widths[k], widths[k], y.data() + i * total + col);
    col += widths[k];
  }
  Shape shape = flat ? Shape{total} : Shape{m, total};
  return finish(
      tape, Tensor(std::move(shape), std::move(y)), parts,
      [m, total, widths](const GradContext& ctx) {
        auto g = ctx.out_grad();
        std::size_t col = 0;
        for (std::size_t k = 0; k < widths.size(); ++k) {
          if (ctx.wants(k)) {
            auto dx = ctx.in_grad(k);
            for (std::size_t i = 0; i < m; ++i)
              for (std::size_t j = 0; j < widths[k]; ++j) dx[i * widths[k] + j] += g[i * total + col + j];
          }
          col += widths[k];
        }
      },
      "concat_cols");
}

Tensor gather_rows(Tape& tape, const Tensor& table, std::span<const std::uint16_t> ids) {
  require_rank(table, 2, "gather_rows");
  const std::size_t vocab = table.dim(0), width = table.dim(1);
  if (ids.empty()) throw DimensionError("gather_rows: empty id list");
  auto tv = table.data();
  std::vector<Scalar> y(ids.size() * width);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= vocab) {
      throw IndexError("token id " + std::to_string(ids[i]) + " out of range for vocabulary of " +
                       std::to_string(vocab));
    }
    std::copy_n(tv.data() + ids[i] * width, width, y.data() + i * width);
  }
  std::vector<std::uint16_t> kept(ids.begin(), ids.end());
  return finish(
      tape, Tensor({ids.size(), width}, std::move(y)), {table},
      [kept = std::move(kept), width](const GradContext& ctx) {
        auto g = ctx.out_grad();
        auto dt = ctx.in_grad(0);
        for (std::size_t i = 0; i < kept.size(); ++i) {
          Scalar* dst = dt.data() + kept[i] * width;
          const Scalar* src = g.data() + i * width;
          for (std::size_t j = 0; j < width; ++j) dst[j] += src[j];
        }
      },
      "gather_rows");
}

}  // namespace scriptnet::ad
