#include "sdmvae/tensor.hpp"

#include <cmath>
#include <cstring>
#include <string>
#include <utility>

#include "sdmvae/errors.hpp"
#include "sdmvae/kernels.hpp"

namespace sdmvae {

namespace {

thread_local Tape* g_active_tape = nullptr;

using detail::TensorImpl;
using Impl = std::shared_ptr<TensorImpl>;

std::string shape_str(const TensorImpl& t) {
  return std::to_string(t.rows) + "x" + std::to_string(t.cols);
}

std::string shape_str(const Tensor& t) { return shape_str(*t.impl()); }

Impl make_impl(std::size_t rows, std::size_t cols) {
  auto impl = std::make_shared<TensorImpl>();
  impl->rows = rows;
  impl->cols = cols;
  impl->data.resize(rows * cols);
  return impl;
}

bool tracked(const Impl& t) { return t->requires_grad || t->on_path; }

// Accumulate `values` into the gradient of `dst` if anything downstream
// needs it.
void acc_grad(const Impl& dst, const double* values) {
  if (!tracked(dst)) return;
  dst->ensure_grad();
  kernels::active().axpy(dst->grad.data(), 1.0, values, dst->size());
}

std::vector<double> transposed(const double* src, std::size_t rows, std::size_t cols) {
  std::vector<double> out(rows * cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) out[j * rows + i] = src[i * cols + j];
  return out;
}

void check_domain_positive(const char* op, const TensorImpl& t, bool allow_zero) {
  const double* d = t.data.data();
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (d[i] < 0.0 || (!allow_zero && d[i] == 0.0)) {
      throw DomainError(std::string(op) + ": operand not strictly positive at index " +
                        std::to_string(i) + " (value " + std::to_string(d[i]) + ")");
    }
  }
}

}  // namespace

Tensor wrap_result(Impl impl) { return Tensor(std::move(impl)); }

// ---------------------------------------------------------------------------
// Tensor

Tensor Tensor::zeros(std::size_t rows, std::size_t cols) {
  return wrap_result(make_impl(rows, cols));
}

Tensor Tensor::constant(std::size_t rows, std::size_t cols, double value) {
  auto impl = make_impl(rows, cols);
  std::fill(impl->data.begin(), impl->data.end(), value);
  return wrap_result(std::move(impl));
}

Tensor Tensor::from_values(std::size_t rows, std::size_t cols, std::vector<double> values) {
  if (values.size() != rows * cols) {
    throw ShapeError("from_values: " + std::to_string(values.size()) + " values for shape " +
                     std::to_string(rows) + "x" + std::to_string(cols));
  }
  auto impl = make_impl(rows, cols);
  impl->data = std::move(values);
  return wrap_result(std::move(impl));
}

Tensor Tensor::scalar(double value) { return constant(1, 1, value); }

Tensor Tensor::param(std::size_t rows, std::size_t cols, std::vector<double> values) {
  Tensor t = from_values(rows, cols, std::move(values));
  t.impl_->requires_grad = true;
  t.impl_->ensure_grad();
  return t;
}

double Tensor::value() const {
  if (size() != 1) throw ContractError("value(): tensor is " + shape_str(*this) + ", not 1x1");
  return impl_->data[0];
}

std::span<const double> Tensor::grad() const {
  const_cast<TensorImpl*>(impl_.get())->ensure_grad();
  return impl_->grad;
}

double* Tensor::mutable_grad() {
  impl_->ensure_grad();
  return impl_->grad.data();
}

void Tensor::zero_grad() {
  impl_->ensure_grad();
  std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

Tensor Tensor::clone() const {
  auto impl = make_impl(rows(), cols());
  impl->data = impl_->data;
  impl->requires_grad = impl_->requires_grad;
  if (impl->requires_grad) impl->ensure_grad();
  return wrap_result(std::move(impl));
}

Tensor Tensor::detached() const {
  auto impl = make_impl(rows(), cols());
  impl->data = impl_->data;
  return wrap_result(std::move(impl));
}

// ---------------------------------------------------------------------------
// Tape

Tape::Tape() {
  if (g_active_tape != nullptr) {
    throw ContractError("Tape: a tape is already active on this thread");
  }
  g_active_tape = this;
}

Tape::~Tape() { g_active_tape = nullptr; }

Tape* Tape::active() { return g_active_tape; }

void Tape::record(Impl out, std::function<void()> pull) {
  g_active_tape->nodes_.push_back(Node{std::move(out), std::move(pull)});
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ContractError("backward: loss must be 1x1, got " +
                        (loss.defined() ? shape_str(loss) : std::string("undefined")));
  }
  const Impl& li = loss.impl();
  if (!li->on_path) return;  // constant loss: nothing reachable

  // Reset intermediate adjoints; leaf gradients keep accumulating.
  std::size_t start = nodes_.size();
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    TensorImpl& out = *nodes_[i].out;
    out.ensure_grad();
    std::fill(out.grad.begin(), out.grad.end(), 0.0);
    if (nodes_[i].out == li) start = i + 1;
  }
  li->grad[0] = 1.0;
  for (std::size_t i = start; i-- > 0;) nodes_[i].pull();
}

// ---------------------------------------------------------------------------
// Op plumbing

namespace {

// Finishes an op: marks the output as differentiable and records the pull
// closure when a tape is active and an input needs gradients.
Tensor finish(Impl out, bool any_tracked, std::function<void()> pull) {
  if (Tape::active() != nullptr && any_tracked) {
    out->on_path = true;
    Tape::record(out, std::move(pull));
  }
  return wrap_result(std::move(out));
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shapes " + shape_str(a) + " and " + shape_str(b) +
                     " do not match");
  }
}

enum class Bin { add, sub, mul, div };

double apply_bin(Bin op, double x, double y) {
  switch (op) {
    case Bin::add: return x + y;
    case Bin::sub: return x - y;
    case Bin::mul: return x * y;
    default: return x / y;
  }
}

const char* bin_name(Bin op) {
  switch (op) {
    case Bin::add: return "add";
    case Bin::sub: return "sub";
    case Bin::mul: return "mul";
    default: return "div";
  }
}

// Shared implementation of the element-wise binary ops, including the 1x1
// broadcast on either side.
Tensor binary_op(Bin op, const Tensor& a, const Tensor& b) {
  const bool a_scalar = a.size() == 1 && b.size() != 1;
  const bool b_scalar = b.size() == 1 && a.size() != 1;
  if (!a_scalar && !b_scalar) require_same_shape(bin_name(op), a, b);

  const Tensor& big = a_scalar ? b : a;
  const std::size_t n = big.size();
  const auto& K = kernels::active();

  if (op == Bin::div) {
    const TensorImpl& den = *b.impl();
    for (std::size_t i = 0; i < den.size(); ++i) {
      if (den.data[i] == 0.0) {
        throw DomainError("div: zero denominator at index " + std::to_string(i));
      }
    }
  }

  auto out = make_impl(big.rows(), big.cols());
  if (a_scalar || b_scalar) {
    const double s = (a_scalar ? a : b).value();
    const double* v = big.data();
    double* d = out->data.data();
    if (a_scalar) {
      for (std::size_t i = 0; i < n; ++i) d[i] = apply_bin(op, s, v[i]);
    } else if (op == Bin::add) {
      K.offset(d, v, s, n);
    } else if (op == Bin::mul) {
      K.scale(d, v, s, n);
    } else {
      for (std::size_t i = 0; i < n; ++i) d[i] = apply_bin(op, v[i], s);
    }
  } else {
    switch (op) {
      case Bin::add: K.add(out->data.data(), a.data(), b.data(), n); break;
      case Bin::sub: K.sub(out->data.data(), a.data(), b.data(), n); break;
      case Bin::mul: K.mul(out->data.data(), a.data(), b.data(), n); break;
      case Bin::div: K.div(out->data.data(), a.data(), b.data(), n); break;
    }
  }

  Impl ai = a.impl(), bi = b.impl(), oi = out;
  const bool need = tracked(ai) || tracked(bi);
  return finish(out, need, [op, ai, bi, oi, a_scalar, b_scalar] {
    const auto& K = kernels::active();
    const std::size_t n = oi->size();
    const double* g = oi->grad.data();
    std::vector<double> scratch(n);

    auto pull_side = [&](const Impl& side, const Impl& other, bool is_a) {
      if (!tracked(side)) return;
      side->ensure_grad();
      const bool side_scalar = (is_a ? a_scalar : b_scalar);
      // d(out)/d(side) per element
      switch (op) {
        case Bin::add:
          std::memcpy(scratch.data(), g, n * sizeof(double));
          break;
        case Bin::sub:
          if (is_a) std::memcpy(scratch.data(), g, n * sizeof(double));
          else K.scale(scratch.data(), g, -1.0, n);
          break;
        case Bin::mul: {
          if (other->size() == 1) K.scale(scratch.data(), g, other->data[0], n);
          else K.mul(scratch.data(), g, other->data.data(), n);
          break;
        }
        case Bin::div: {
          if (is_a) {
            // g / b
            if (bi->size() == 1) K.scale(scratch.data(), g, 1.0 / bi->data[0], n);
            else K.div(scratch.data(), g, bi->data.data(), n);
          } else {
            // -g * out / b
            K.mul(scratch.data(), g, oi->data.data(), n);
            if (bi->size() == 1) K.scale(scratch.data(), scratch.data(), -1.0 / bi->data[0], n);
            else {
              K.div(scratch.data(), scratch.data(), bi->data.data(), n);
              K.scale(scratch.data(), scratch.data(), -1.0, n);
            }
          }
          break;
        }
      }
      if (side_scalar) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += scratch[i];
        side->grad[0] += total;
      } else {
        K.axpy(side->grad.data(), 1.0, scratch.data(), n);
      }
    };

    pull_side(ai, bi, true);
    pull_side(bi, ai, false);
  });
}

// Shared implementation of the unary maps. The derivative is expressed in
// terms of the input x and output y.
template <class Fwd, class Bwd>
Tensor unary_op(const Tensor& a, Fwd fwd, Bwd bwd) {
  auto out = make_impl(a.rows(), a.cols());
  const double* x = a.data();
  double* y = out->data.data();
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) y[i] = fwd(x[i]);

  Impl ai = a.impl(), oi = out;
  return finish(out, tracked(ai), [ai, oi, bwd] {
    if (!tracked(ai)) return;
    ai->ensure_grad();
    const std::size_t n = oi->size();
    const double* g = oi->grad.data();
    const double* x = ai->data.data();
    const double* y = oi->data.data();
    double* dst = ai->grad.data();
    for (std::size_t i = 0; i < n; ++i) dst[i] += g[i] * bwd(x[i], y[i]);
  });
}

}  // namespace

// ---------------------------------------------------------------------------
// Ops

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions disagree: " + shape_str(a) + " * " + shape_str(b));
  }
  const std::size_t p = a.rows(), q = a.cols(), r = b.cols();
  auto out = make_impl(p, r);
  kernels::active().matmul(out->data.data(), a.data(), b.data(), p, q, r);

  Impl ai = a.impl(), bi = b.impl(), oi = out;
  const bool need = tracked(ai) || tracked(bi);
  return finish(out, need, [ai, bi, oi, p, q, r] {
    const auto& K = kernels::active();
    const double* g = oi->grad.data();
    if (tracked(ai)) {
      ai->ensure_grad();
      // dA += G * B^T
      std::vector<double> bt = transposed(bi->data.data(), q, r);
      K.matmul_acc(ai->grad.data(), g, bt.data(), p, r, q);
    }
    if (tracked(bi)) {
      bi->ensure_grad();
      // dB += A^T * G
      std::vector<double> at = transposed(ai->data.data(), p, q);
      K.matmul_acc(bi->grad.data(), at.data(), g, q, p, r);
    }
  });
}

Tensor transpose(const Tensor& a) {
  const std::size_t rows = a.rows(), cols = a.cols();
  auto out = make_impl(cols, rows);
  out->data = transposed(a.data(), rows, cols);

  Impl ai = a.impl(), oi = out;
  return finish(out, tracked(ai), [ai, oi, rows, cols] {
    if (!tracked(ai)) return;
    std::vector<double> gt = transposed(oi->grad.data(), cols, rows);
    acc_grad(ai, gt.data());
  });
}

Tensor add(const Tensor& a, const Tensor& b) { return binary_op(Bin::add, a, b); }
Tensor sub(const Tensor& a, const Tensor& b) { return binary_op(Bin::sub, a, b); }
Tensor mul(const Tensor& a, const Tensor& b) { return binary_op(Bin::mul, a, b); }
Tensor div(const Tensor& a, const Tensor& b) { return binary_op(Bin::div, a, b); }

Tensor add_scalar(const Tensor& a, double s) {
  auto out = make_impl(a.rows(), a.cols());
  kernels::active().offset(out->data.data(), a.data(), s, a.size());
  Impl ai = a.impl(), oi = out;
  return finish(out, tracked(ai), [ai, oi] {
    if (tracked(ai)) acc_grad(ai, oi->grad.data());
  });
}

Tensor mul_scalar(const Tensor& a, double s) {
  auto out = make_impl(a.rows(), a.cols());
  kernels::active().scale(out->data.data(), a.data(), s, a.size());
  Impl ai = a.impl(), oi = out;
  return finish(out, tracked(ai), [ai, oi, s] {
    if (!tracked(ai)) return;
    ai->ensure_grad();
    kernels::active().axpy(ai->grad.data(), s, oi->grad.data(), oi->size());
  });
}

Tensor tanh(const Tensor& a) {
  return unary_op(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor exp(const Tensor& a) {
  return unary_op(
      a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  check_domain_positive("log", *a.impl(), /*allow_zero=*/false);
  return unary_op(
      a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor square(const Tensor& a) {
  return unary_op(
      a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor sqrt(const Tensor& a) {
  check_domain_positive("sqrt", *a.impl(), /*allow_zero=*/false);
  return unary_op(
      a, [](double x) { return std::sqrt(x); }, [](double, double y) { return 0.5 / y; });
}

Tensor reduce_sum(const Tensor& a, Axis axis) {
  const std::size_t rows = a.rows(), cols = a.cols();
  Impl out;
  switch (axis) {
    case Axis::rows: {
      out = make_impl(1, cols);
      kernels::active().colsum(out->data.data(), a.data(), rows, cols);
      break;
    }
    case Axis::cols: {
      out = make_impl(rows, 1);
      for (std::size_t i = 0; i < rows; ++i) {
        double acc = 0.0;
        const double* row = a.data() + i * cols;
        for (std::size_t j = 0; j < cols; ++j) acc += row[j];
        out->data[i] = acc;
      }
      break;
    }
    case Axis::all: {
      out = make_impl(1, 1);
      double acc = 0.0;
      const double* d = a.data();
      for (std::size_t i = 0; i < rows * cols; ++i) acc += d[i];
      out->data[0] = acc;
      break;
    }
  }

  Impl ai = a.impl(), oi = out;
  return finish(out, tracked(ai), [ai, oi, axis, rows, cols] {
    if (!tracked(ai)) return;
    ai->ensure_grad();
    const double* g = oi->grad.data();
    double* dst = ai->grad.data();
    switch (axis) {
      case Axis::rows:
        for (std::size_t i = 0; i < rows; ++i)
          for (std::size_t j = 0; j < cols; ++j) dst[i * cols + j] += g[j];
        break;
      case Axis::cols:
        for (std::size_t i = 0; i < rows; ++i)
          for (std::size_t j = 0; j < cols; ++j) dst[i * cols + j] += g[i];
        break;
      case Axis::all:
        for (std::size_t i = 0; i < rows * cols; ++i) dst[i] += g[0];
        break;
    }
  });
}

Tensor add_bias(const Tensor& m, const Tensor& bias) {
  if (bias.cols() != 1 || bias.rows() != m.rows()) {
    throw ShapeError("add_bias: bias " + shape_str(bias) + " must be " +
                     std::to_string(m.rows()) + "x1 for matrix " + shape_str(m));
  }
  const std::size_t rows = m.rows(), cols = m.cols();
  auto out = make_impl(rows, cols);
  kernels::active().addcol(out->data.data(), m.data(), bias.data(), rows, cols);

  Impl mi = m.impl(), bi = bias.impl(), oi = out;
  const bool need = tracked(mi) || tracked(bi);
  return finish(out, need, [mi, bi, oi, rows, cols] {
    const double* g = oi->grad.data();
    if (tracked(mi)) acc_grad(mi, g);
    if (tracked(bi)) {
      bi->ensure_grad();
      for (std::size_t i = 0; i < rows; ++i) {
        double acc = 0.0;
        const double* grow = g + i * cols;
        for (std::size_t j = 0; j < cols; ++j) acc += grow[j];
        bi->grad[i] += acc;
      }
    }
  });
}

}  // namespace sdmvae
