#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace eog {

class SplitRng;

// Dense row-major tensor of 64-bit reals with an optional gradient buffer.
// Copies are shallow: all copies share one storage, so a Tensor held by a
// tape op and a Tensor held by the optimizer see the same values and grad.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
  static Tensor from(std::vector<double> values, std::vector<std::size_t> shape,
                     bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  // Fresh storage with identical values; grad buffer not copied.
  Tensor clone() const;

  bool defined() const { return impl_ != nullptr; }
  const std::vector<std::size_t>& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::size_t size() const { return impl_->values.size(); }

  bool requires_grad() const { return impl_ && impl_->requires_grad; }
  void set_requires_grad(bool v) { impl_->requires_grad = v; }

  // constness is shallow: copies share one storage, and tape closures write
  // gradients through captured copies
  std::vector<double>& values() const { return impl_->values; }
  double value() const;  // scalar tensors only

  bool has_grad() const { return impl_ && !impl_->grad.empty(); }
  std::vector<double>& grad() const;  // allocates zeros on first use
  void zero_grad() const;

  // Storage identity, used to deduplicate parameters.
  const void* id() const { return impl_.get(); }
  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  struct Impl {
    std::vector<std::size_t> shape;
    std::vector<double> values;
    std::vector<double> grad;  // empty until requested
    bool requires_grad = false;
  };
  std::shared_ptr<Impl> impl_;
};

// Reverse-mode tape. Operations are appended in execution order, which is
// topological by construction. Instantiating a Tape makes it the active tape
// for the current thread; ops record themselves onto it whenever an input
// requires gradients. Destruction restores the previously active tape.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active();

  void record(std::vector<Tensor> touched, std::function<void()> backward);
  std::size_t size() const { return ops_.size(); }

  // Zeroes the grads of every tensor touched by the tape, seeds d(loss)=1 and
  // runs the recorded rules in reverse. The tape is cleared afterward.
  void backward(const Tensor& loss);
  void clear();

 private:
  struct Op {
    std::vector<Tensor> touched;
    std::function<void()> fn;
  };
  std::vector<Op> ops_;
  Tape* prev_ = nullptr;
};

// --- primitives ------------------------------------------------------------
// Every primitive validates shapes (errors name the primitive and both
// shapes), computes the forward value, and records a backward rule on the
// active tape when any input requires gradients.

Tensor add(const Tensor& a, const Tensor& b);
Tensor add_n(std::span<const Tensor> xs);
Tensor mul(const Tensor& a, const Tensor& b);  // element-wise
Tensor scale(const Tensor& x, double s);
// beta*a + (1-beta)*b
Tensor lerp(const Tensor& a, const Tensor& b, double beta);

Tensor matmul(const Tensor& a, const Tensor& b);   // [m,k] x [k,n] -> [m,n]
Tensor matvec(const Tensor& a, const Tensor& x);   // [m,k] x [k]   -> [m]
Tensor tmatvec(const Tensor& a, const Tensor& x);  // [m,k]^T x [m] -> [k]
Tensor dot(const Tensor& a, const Tensor& b);      // [n] . [n] -> scalar

Tensor concat(std::span<const Tensor> xs);              // 1-D, last axis
Tensor stack_rows(std::span<const Tensor> xs);          // k vectors -> [k,d]
Tensor slice(const Tensor& x, std::size_t offset, std::size_t len);  // 1-D
Tensor row(const Tensor& x, std::size_t r);             // [n,d] -> [d]
Tensor pick(const Tensor& x, std::size_t index);        // [n] -> scalar

Tensor lookup(const Tensor& table, std::span<const int> indices);  // -> [n,d]
Tensor mean_rows(const Tensor& x, std::span<const int> indices);   // -> [d]
Tensor sum_rows(const Tensor& x);                                  // -> [d]
Tensor mean_all(const Tensor& x);                                  // -> scalar
Tensor sum_squares(const Tensor& x);  // sum of squared entries -> scalar

Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor log(const Tensor& x);

// Masked softmax over a vector. mask[i] != 0 marks an eligible position;
// an empty mask means all positions are eligible. Masked outputs are zero
// and the eligible outputs sum to 1. Throws if every position is masked.
Tensor softmax(const Tensor& logits, std::span<const std::uint8_t> mask = {});

// Inverted dropout: kept activations are scaled by 1/keep so evaluation
// needs no rescaling. rate must be in [0,1).
Tensor dropout(const Tensor& x, double rate, SplitRng& rng);

}  // namespace eog
