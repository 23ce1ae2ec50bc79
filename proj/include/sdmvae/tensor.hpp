#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace sdmvae {

namespace detail {

struct TensorImpl {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;
  std::vector<double> grad;    // empty until needed, then data-sized
  bool requires_grad = false;  // leaf parameter: grad persists across backward calls
  bool on_path = false;        // an adjoint flows through this tensor

  std::size_t size() const { return rows * cols; }
  void ensure_grad() {
    if (grad.empty()) grad.assign(size(), 0.0);
  }
};

}  // namespace detail

// Dense 2-D tensor of 64-bit floats with optional participation in reverse-
// mode differentiation. Value semantics with a shared immutable payload:
// copying a Tensor aliases the same storage, and shape/data never change
// after construction (parameters are updated in place through mutable_data
// by the optimizer, between tapes).
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::size_t rows, std::size_t cols);
  static Tensor constant(std::size_t rows, std::size_t cols, double value);
  static Tensor from_values(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Tensor scalar(double value);
  // Leaf parameter: requires_grad with a zero-initialized gradient buffer.
  static Tensor param(std::size_t rows, std::size_t cols, std::vector<double> values);

  bool defined() const { return impl_ != nullptr; }
  std::size_t rows() const { return impl_->rows; }
  std::size_t cols() const { return impl_->cols; }
  std::size_t size() const { return impl_->size(); }

  double at(std::size_t i, std::size_t j) const { return impl_->data[i * cols() + j]; }
  // The value of a 1x1 tensor; ContractError otherwise.
  double value() const;

  const double* data() const { return impl_->data.data(); }
  std::span<const double> values() const { return impl_->data; }
  // In-place mutation is only sound for leaves between tapes (optimizer
  // updates, test perturbations); mutating a recorded tensor invalidates
  // the tape.
  double* mutable_data() { return impl_->data.data(); }

  bool requires_grad() const { return impl_->requires_grad; }
  bool has_grad() const { return !impl_->grad.empty(); }
  // Zero-filled if never touched by backward.
  std::span<const double> grad() const;
  double* mutable_grad();
  void zero_grad();

  // Deep copy; keeps requires_grad, gradient starts at zero.
  Tensor clone() const;
  // Deep copy of the data with no gradient tracking.
  Tensor detached() const;

  const std::shared_ptr<detail::TensorImpl>& impl() const { return impl_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<detail::TensorImpl> impl_;

  friend Tensor wrap_result(std::shared_ptr<detail::TensorImpl>);
};

// Records the operations of one forward pass, in execution (= topological)
// order. One tape may be active per thread; ops record themselves onto it
// whenever a differentiable input is involved. Without an active tape the
// same ops run forward-only.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  std::size_t size() const { return nodes_.size(); }

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape once in reverse,
  // accumulating into every reachable requires_grad leaf. Intermediate
  // adjoints are reset per call, leaf gradients accumulate across calls.
  // loss must be 1x1 (ContractError); a loss that never touched the tape
  // leaves all gradients as they were.
  void backward(const Tensor& loss);

  static Tape* active();
  static void record(std::shared_ptr<detail::TensorImpl> out, std::function<void()> pull);

 private:
  struct Node {
    std::shared_ptr<detail::TensorImpl> out;
    std::function<void()> pull;
  };
  std::vector<Node> nodes_;
};

enum class Axis { rows, cols, all };

// Differentiable operations. Shape violations throw ShapeError with both
// shapes; domain violations throw DomainError naming the op and the first
// offending index.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// Element-wise; operands must have equal shape, or one side may be 1x1 and
// broadcasts. No other broadcasting.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);

Tensor add_scalar(const Tensor& a, double s);
Tensor mul_scalar(const Tensor& a, double s);

Tensor tanh(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);     // operand strictly positive
Tensor square(const Tensor& a);
Tensor sqrt(const Tensor& a);    // operand strictly positive

// Axis::rows collapses the row index (result 1 x cols), Axis::cols collapses
// the column index (rows x 1), Axis::all yields 1x1.
Tensor reduce_sum(const Tensor& a, Axis axis);

// m[i,j] + bias[i]; bias must be rows x 1. The only non-scalar broadcast.
Tensor add_bias(const Tensor& m, const Tensor& bias);

}  // namespace sdmvae
