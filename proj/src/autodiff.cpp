#include "eog/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "eog/rng.hpp"

namespace eog {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

[[noreturn]] void shape_error(const char* prim, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(prim) + ": shape mismatch " +
                              shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

[[noreturn]] void shape_error(const char* prim, const Tensor& a, const std::string& expect) {
  throw std::invalid_argument(std::string(prim) + ": shape mismatch " +
                              shape_str(a.shape()) + ", expected " + expect);
}

void require_rank(const char* prim, const Tensor& x, std::size_t r) {
  if (x.rank() != r) shape_error(prim, x, "rank " + std::to_string(r));
}

bool recording(std::initializer_list<const Tensor*> inputs) {
  if (!Tape::active()) return false;
  for (const Tensor* t : inputs) {
    if (t->defined() && t->requires_grad()) return true;
  }
  return false;
}

void axpy(std::vector<double>& y, const std::vector<double>& x, double a) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

thread_local Tape* g_active_tape = nullptr;

}  // namespace

// --- Tensor -----------------------------------------------------------------

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
  Tensor t;
  t.impl_ = std::make_shared<Impl>();
  t.impl_->values.assign(shape_product(shape), 0.0);
  t.impl_->shape = std::move(shape);
  t.impl_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::from(std::vector<double> values, std::vector<std::size_t> shape,
                    bool requires_grad) {
  if (values.size() != shape_product(shape)) {
    throw std::invalid_argument("Tensor::from: " + std::to_string(values.size()) +
                                " values do not fill shape " + shape_str(shape));
  }
  Tensor t;
  t.impl_ = std::make_shared<Impl>();
  t.impl_->values = std::move(values);
  t.impl_->shape = std::move(shape);
  t.impl_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({value}, {1}, requires_grad);
}

Tensor Tensor::clone() const {
  Tensor t;
  t.impl_ = std::make_shared<Impl>();
  t.impl_->shape = impl_->shape;
  t.impl_->values = impl_->values;
  t.impl_->requires_grad = impl_->requires_grad;
  return t;
}

double Tensor::value() const {
  if (size() != 1) {
    throw std::invalid_argument("Tensor::value: tensor of shape " +
                                shape_str(shape()) + " is not scalar");
  }
  return impl_->values[0];
}

std::vector<double>& Tensor::grad() const {
  if (impl_->grad.empty()) impl_->grad.assign(impl_->values.size(), 0.0);
  return impl_->grad;
}

void Tensor::zero_grad() const {
  if (!impl_->grad.empty()) impl_->grad.assign(impl_->values.size(), 0.0);
}

// --- Tape -------------------------------------------------------------------

Tape::Tape() {
  prev_ = g_active_tape;
  g_active_tape = this;
}

Tape::~Tape() { g_active_tape = prev_; }

Tape* Tape::active() { return g_active_tape; }

void Tape::record(std::vector<Tensor> touched, std::function<void()> backward) {
  ops_.push_back(Op{std::move(touched), std::move(backward)});
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw std::invalid_argument("backward: loss must be a scalar tensor");
  }
  for (Op& op : ops_) {
    for (Tensor& t : op.touched) t.zero_grad();
  }
  Tensor seed = loss;
  seed.grad()[0] = 1.0;
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
    it->fn();
  }
  clear();
}

void Tape::clear() { ops_.clear(); }

// --- primitives -------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("add", a, b);
  Tensor out = Tensor::zeros(a.shape());
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; ++i) out.values()[i] = a.values()[i] + b.values()[i];
  if (recording({&a, &b})) {
    out.set_requires_grad(true);
    Tape::active()->record({a, b, out}, [a, b, out]() {
      if (!out.has_grad()) return;
      if (a.requires_grad()) axpy(a.grad(), out.grad(), 1.0);
      if (b.requires_grad()) axpy(b.grad(), out.grad(), 1.0);
    });
  }
  return out;
}

Tensor add_n(std::span<const Tensor> xs) {
  if (xs.empty()) throw std::invalid_argument("add_n: empty input list");
  Tensor out = Tensor::zeros(xs[0].shape());
  bool rec = false;
  for (const Tensor& x : xs) {
    if (x.shape() != xs[0].shape()) shape_error("add_n", xs[0], x);
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] += x.values()[i];
    rec = rec || recording({&x});
  }
  if (rec) {
    out.set_requires_grad(true);
    std::vector<Tensor> touched(xs.begin(), xs.end());
    touched.push_back(out);
    std::vector<Tensor> ins(xs.begin(), xs.end());
    Tape::active()->record(std::move(touched), [ins, out]() {
      if (!out.has_grad()) return;
      for (const Tensor& x : ins) {
        if (x.requires_grad()) axpy(x.grad(), out.grad(), 1.0);
      }
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_error("mul", a, b);
  Tensor out = Tensor::zeros(a.shape());
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; ++i) out.values()[i] = a.values()[i] * b.values()[i];
  if (recording({&a, &b})) {
    out.set_requires_grad(true);
    Tape::active()->record({a, b, out}, [a, b, out]() {
      if (!out.has_grad()) return;
      const auto& go = out.grad();
      if (a.requires_grad()) {
        auto& ga = a.grad();
        for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * b.values()[i];
      }
      if (b.requires_grad()) {
        auto& gb = b.grad();
        for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * a.values()[i];
      }
    });
  }
  return out;
}

Tensor scale(const Tensor& x, double s) {
  Tensor out = Tensor::zeros(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] = s * x.values()[i];
  if (recording({&x})) {
    out.set_requires_grad(true);
    Tape::active()->record({x, out}, [x, out, s]() {
      if (!out.has_grad()) return;
      if (x.requires_grad()) axpy(x.grad(), out.grad(), s);
    });
  }
  return out;
}

Tensor lerp(const Tensor& a, const Tensor& b, double beta) {
  if (a.shape() != b.shape()) shape_error("lerp", a, b);
  Tensor out = Tensor::zeros(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.values()[i] = beta * a.values()[i] + (1.0 - beta) * b.values()[i];
  }
  if (recording({&a, &b})) {
    out.set_requires_grad(true);
    Tape::active()->record({a, b, out}, [a, b, out, beta]() {
      if (!out.has_grad()) return;
      if (a.requires_grad()) axpy(a.grad(), out.grad(), beta);
      if (b.requires_grad()) axpy(b.grad(), out.grad(), 1.0 - beta);
    });
  }
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank("matmul", a, 2);
  require_rank("matmul", b, 2);
  if (a.shape()[1] != b.shape()[0]) shape_error("matmul", a, b);
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  Tensor out = Tensor::zeros({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t l = 0; l < k; ++l) {
      const double av = a.values()[i * k + l];
      if (av == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        out.values()[i * n + j] += av * b.values()[l * n + j];
      }
    }
  }
  if (recording({&a, &b})) {
    out.set_requires_grad(true);
    Tape::active()->record({a, b, out}, [a, b, out, m, k, n]() {
      if (!out.has_grad()) return;
      const auto& go = out.grad();
      if (a.requires_grad()) {
        auto& ga = a.grad();
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t l = 0; l < k; ++l) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) s += go[i * n + j] * b.values()[l * n + j];
            ga[i * k + l] += s;
          }
      }
      if (b.requires_grad()) {
        auto& gb = b.grad();
        for (std::size_t l = 0; l < k; ++l)
          for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < m; ++i) s += a.values()[i * k + l] * go[i * n + j];
            gb[l * n + j] += s;
          }
      }
    });
  }
  return out;
}

Tensor matvec(const Tensor& a, const Tensor& x) {
  require_rank("matvec", a, 2);
  require_rank("matvec", x, 1);
  if (a.shape()[1] != x.shape()[0]) shape_error("matvec", a, x);
  const std::size_t m = a.shape()[0], k = a.shape()[1];
  Tensor out = Tensor::zeros({m});
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    const double* arow = a.values().data() + i * k;
    for (std::size_t l = 0; l < k; ++l) s += arow[l] * x.values()[l];
    out.values()[i] = s;
  }
  if (recording({&a, &x})) {
    out.set_requires_grad(true);
    Tape::active()->record({a, x, out}, [a, x, out, m, k]() {
      if (!out.has_grad()) return;
      const auto& go = out.grad();
      if (a.requires_grad()) {
        auto& ga = a.grad();
        for (std::size_t i = 0; i < m; ++i) {
          const double g = go[i];
          if (g == 0.0) continue;
          for (std::size_t l = 0; l < k; ++l) ga[i * k + l] += g * x.values()[l];
        }
      }
      if (x.requires_grad()) {
        auto& gx = x.grad();
        for (std::size_t i = 0; i < m; ++i) {
          const double g = go[i];
          if (g == 0.0) continue;
          const double* arow = a.values().data() + i * k;
          for (std::size_t l = 0; l < k; ++l) gx[l] += g * arow[l];
        }
      }
    });
  }
  return out;
}

Tensor tmatvec(const Tensor& a, const Tensor& x) {
  require_rank("tmatvec", a, 2);
  require_rank("tmatvec", x, 1);
  if (a.shape()[0] != x.shape()[0]) shape_error("tmatvec", a, x);
  const std::size_t m = a.shape()[0], k = a.shape()[1];
  Tensor out = Tensor::zeros({k});
  for (std::size_t i = 0; i < m; ++i) {
    const double xv = x.values()[i];
    if (xv == 0.0) continue;
    const double* arow = a.values().data() + i * k;
    for (std::size_t l = 0; l < k; ++l) out.values()[l] += xv * arow[l];
  }
  if (recording({&a, &x})) {
    out.set_requires_grad(true);
    Tape::active()->record({a, x, out}, [a, x, out, m, k]() {
      if (!out.has_grad()) return;
      const auto& go = out.grad();
      if (a.requires_grad()) {
        auto& ga = a.grad();
        for (std::size_t i = 0; i < m; ++i) {
          const double xv = x.values()[i];
          if (xv == 0.0) continue;
          for (std::size_t l = 0; l < k; ++l) ga[i * k + l] += xv * go[l];
        }
      }
      if (x.requires_grad()) {
        auto& gx = x.grad();
        for (std::size_t i = 0; i < m; ++i) {
          const double* arow = a.values().data() + i * k;
          double s = 0.0;
          for (std::size_t l = 0; l < k; ++l) s += arow[l] * go[l];
          gx[i] += s;
        }
      }
    });
  }
  return out;
}

Tensor dot(const Tensor& a, const Tensor& b) {
  require_rank("dot", a, 1);
  require_rank("dot", b, 1);
  if (a.shape() != b.shape()) shape_error("dot", a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.values()[i] * b.values()[i];
  Tensor out = Tensor::scalar(s);
  if (recording({&a, &b})) {
    out.set_requires_grad(true);
    Tape::active()->record({a, b, out}, [a, b, out]() {
      if (!out.has_grad()) return;
      const double g = out.grad()[0];
      if (a.requires_grad()) axpy(a.grad(), b.values(), g);
      if (b.requires_grad()) axpy(b.grad(), a.values(), g);
    });
  }
  return out;
}

Tensor concat(std::span<const Tensor> xs) {
  if (xs.empty()) throw std::invalid_argument("concat: empty input list");
  std::size_t total = 0;
  bool rec = false;
  for (const Tensor& x : xs) {
    require_rank("concat", x, 1);
    total += x.size();
    rec = rec || recording({&x});
  }
  Tensor out = Tensor::zeros({total});
  std::size_t off = 0;
  for (const Tensor& x : xs) {
    for (std::size_t i = 0; i < x.size(); ++i) out.values()[off + i] = x.values()[i];
    off += x.size();
  }
  if (rec) {
    out.set_requires_grad(true);
    std::vector<Tensor> ins(xs.begin(), xs.end());
    std::vector<Tensor> touched = ins;
    touched.push_back(out);
    Tape::active()->record(std::move(touched), [ins, out]() {
      if (!out.has_grad()) return;
      const auto& go = out.grad();
      std::size_t off2 = 0;
      for (const Tensor& x : ins) {
        if (x.requires_grad()) {
          auto& gx = x.grad();
          for (std::size_t i = 0; i < x.size(); ++i) gx[i] += go[off2 + i];
        }
        off2 += x.size();
      }
    });
  }
  return out;
}

Tensor stack_rows(std::span<const Tensor> xs) {
  if (xs.empty()) throw std::invalid_argument("stack_rows: empty input list");
  const std::size_t d = xs[0].size();
  bool rec = false;
  for (const Tensor& x : xs) {
    require_rank("stack_rows", x, 1);
    if (x.size() != d) shape_error("stack_rows", xs[0], x);
    rec = rec || recording({&x});
  }
  Tensor out = Tensor::zeros({xs.size(), d});
  for (std::size_t r = 0; r < xs.size(); ++r) {
    for (std::size_t i = 0; i < d; ++i) out.values()[r * d + i] = xs[r].values()[i];
  }
  if (rec) {
    out.set_requires_grad(true);
    std::vector<Tensor> ins(xs.begin(), xs.end());
    std::vector<Tensor> touched = ins;
    touched.push_back(out);
    Tape::active()->record(std::move(touched), [ins, out, d]() {
      if (!out.has_grad()) return;
      const auto& go = out.grad();
      for (std::size_t r = 0; r < ins.size(); ++r) {
        if (!ins[r].requires_grad()) continue;
        auto& gx = ins[r].grad();
        for (std::size_t i = 0; i < d; ++i) gx[i] += go[r * d + i];
      }
    });
  }
  return out;
}

Tensor slice(const Tensor& x, std::size_t offset, std::size_t len) {
  require_rank("slice", x, 1);
  if (offset + len > x.size()) {
    throw std::invalid_argument("slice: [" + std::to_string(offset) + "," +
                                std::to_string(offset + len) + ") out of range for size " +
                                std::to_string(x.size()));
  }
  Tensor out = Tensor::zeros({len});
  for (std::size_t i = 0; i < len; ++i) out.values()[i] = x.values()[offset + i];
  if (recording({&x})) {
    out.set_requires_grad(true);
    Tape::active()->record({x, out}, [x, out, offset, len]() {
      if (!out.has_grad()) return;
      auto& gx = x.grad();
      for (std::size_t i = 0; i < len; ++i) gx[offset + i] += out.grad()[i];
    });
  }
  return out;
}

Tensor row(const Tensor& x, std::size_t r) {
  require_rank("row", x, 2);
  const std::size_t n = x.shape()[0], d = x.shape()[1];
  if (r >= n) {
    throw std::invalid_argument("row: index " + std::to_string(r) +
                                " out of range for " + std::to_string(n) + " rows");
  }
  Tensor out = Tensor::zeros({d});
  for (std::size_t i = 0; i < d; ++i) out.values()[i] = x.values()[r * d + i];
  if (recording({&x})) {
    out.set_requires_grad(true);
    Tape::active()->record({x, out}, [x, out, r, d]() {
      if (!out.has_grad()) return;
      auto& gx = x.grad();
      for (std::size_t i = 0; i < d; ++i) gx[r * d + i] += out.grad()[i];
    });
  }
  return out;
}

Tensor pick(const Tensor& x, std::size_t index) {
  require_rank("pick", x, 1);
  if (index >= x.size()) {
    throw std::invalid_argument("pick: index " + std::to_string(index) +
                                " out of range for size " + std::to_string(x.size()));
  }
  Tensor out = Tensor::scalar(x.values()[index]);
  if (recording({&x})) {
    out.set_requires_grad(true);
    Tape::active()->record({x, out}, [x, out, index]() {
      if (!out.has_grad()) return;
      x.grad()[index] += out.grad()[0];
    });
  }
  return out;
}

Tensor lookup(const Tensor& table, std::span<const int> indices) {
  require_rank("lookup", table, 2);
  const std::size_t v = table.shape()[0], d = table.shape()[1];
  for (int idx : indices) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= v) {
      throw std::invalid_argument("lookup: index " + std::to_string(idx) +
                                  " out of range for table with " + std::to_string(v) +
                                  " rows");
    }
  }
  Tensor out = Tensor::zeros({indices.size(), d});
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const double* src = table.values().data() + static_cast<std::size_t>(indices[r]) * d;
    for (std::size_t i = 0; i < d; ++i) out.values()[r * d + i] = src[i];
  }
  if (recording({&table})) {
    out.set_requires_grad(true);
    std::vector<int> idx(indices.begin(), indices.end());
    Tape::active()->record({table, out}, [table, out, idx, d]() {
      if (!out.has_grad()) return;
      auto& gt = table.grad();
      const auto& go = out.grad();
      for (std::size_t r = 0; r < idx.size(); ++r) {
        double* dst = gt.data() + static_cast<std::size_t>(idx[r]) * d;
        for (std::size_t i = 0; i < d; ++i) dst[i] += go[r * d + i];
      }
    });
  }
  return out;
}

Tensor mean_rows(const Tensor& x, std::span<const int> indices) {
  require_rank("mean_rows", x, 2);
  if (indices.empty()) throw std::invalid_argument("mean_rows: empty index set");
  const std::size_t n = x.shape()[0], d = x.shape()[1];
  for (int idx : indices) {
    if (idx < 0 || static_cast<std::size_t>(idx) >= n) {
      throw std::invalid_argument("mean_rows: index " + std::to_string(idx) +
                                  " out of range for " + std::to_string(n) + " rows");
    }
  }
  Tensor out = Tensor::zeros({d});
  const double inv = 1.0 / static_cast<double>(indices.size());
  for (int r : indices) {
    const double* src = x.values().data() + static_cast<std::size_t>(r) * d;
    for (std::size_t i = 0; i < d; ++i) out.values()[i] += src[i] * inv;
  }
  if (recording({&x})) {
    out.set_requires_grad(true);
    std::vector<int> idx(indices.begin(), indices.end());
    Tape::active()->record({x, out}, [x, out, idx, d, inv]() {
      if (!out.has_grad()) return;
      auto& gx = x.grad();
      const auto& go = out.grad();
      for (int r : idx) {
        double* dst = gx.data() + static_cast<std::size_t>(r) * d;
        for (std::size_t i = 0; i < d; ++i) dst[i] += go[i] * inv;
      }
    });
  }
  return out;
}

Tensor sum_rows(const Tensor& x) {
  require_rank("sum_rows", x, 2);
  const std::size_t n = x.shape()[0], d = x.shape()[1];
  Tensor out = Tensor::zeros({d});
  for (std::size_t r = 0; r < n; ++r) {
    const double* src = x.values().data() + r * d;
    for (std::size_t i = 0; i < d; ++i) out.values()[i] += src[i];
  }
  if (recording({&x})) {
    out.set_requires_grad(true);
    Tape::active()->record({x, out}, [x, out, n, d]() {
      if (!out.has_grad()) return;
      auto& gx = x.grad();
      const auto& go = out.grad();
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t i = 0; i < d; ++i) gx[r * d + i] += go[i];
      }
    });
  }
  return out;
}

Tensor mean_all(const Tensor& x) {
  if (x.size() == 0) throw std::invalid_argument("mean_all: empty tensor");
  double s = 0.0;
  for (double v : x.values()) s += v;
  const double inv = 1.0 / static_cast<double>(x.size());
  Tensor out = Tensor::scalar(s * inv);
  if (recording({&x})) {
    out.set_requires_grad(true);
    Tape::active()->record({x, out}, [x, out, inv]() {
      if (!out.has_grad()) return;
      const double g = out.grad()[0] * inv;
      auto& gx = x.grad();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g;
    });
  }
  return out;
}

Tensor sum_squares(const Tensor& x) {
  double s = 0.0;
  for (double v : x.values()) s += v * v;
  Tensor out = Tensor::scalar(s);
  if (recording({&x})) {
    out.set_requires_grad(true);
    Tape::active()->record({x, out}, [x, out]() {
      if (!out.has_grad()) return;
      const double g = out.grad()[0];
      auto& gx = x.grad();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += 2.0 * g * x.values()[i];
    });
  }
  return out;
}

Tensor sigmoid(const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x.values()[i];
    if (v >= 0.0) {
      out.values()[i] = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      out.values()[i] = e / (1.0 + e);
    }
  }
  if (recording({&x})) {
    out.set_requires_grad(true);
    Tape::active()->record({x, out}, [x, out]() {
      if (!out.has_grad()) return;
      auto& gx = x.grad();
      const auto& go = out.grad();
      for (std::size_t i = 0; i < gx.size(); ++i) {
        const double y = out.values()[i];
        gx[i] += go[i] * y * (1.0 - y);
      }
    });
  }
  return out;
}

Tensor tanh(const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out.values()[i] = std::tanh(x.values()[i]);
  if (recording({&x})) {
    out.set_requires_grad(true);
    Tape::active()->record({x, out}, [x, out]() {
      if (!out.has_grad()) return;
      auto& gx = x.grad();
      const auto& go = out.grad();
      for (std::size_t i = 0; i < gx.size(); ++i) {
        const double y = out.values()[i];
        gx[i] += go[i] * (1.0 - y * y);
      }
    });
  }
  return out;
}

Tensor log(const Tensor& x) {
  Tensor out = Tensor::zeros(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out.values()[i] = std::log(x.values()[i]);
  if (recording({&x})) {
    out.set_requires_grad(true);
    Tape::active()->record({x, out}, [x, out]() {
      if (!out.has_grad()) return;
      auto& gx = x.grad();
      const auto& go = out.grad();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i] / x.values()[i];
    });
  }
  return out;
}

Tensor softmax(const Tensor& logits, std::span<const std::uint8_t> mask) {
  require_rank("softmax", logits, 1);
  const std::size_t n = logits.size();
  if (!mask.empty() && mask.size() != n) {
    throw std::invalid_argument("softmax: mask size " + std::to_string(mask.size()) +
                                " does not match " + std::to_string(n) + " logits");
  }
  auto eligible = [&](std::size_t i) { return mask.empty() || mask[i] != 0; };
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (eligible(i)) mx = std::max(mx, logits.values()[i]);
  }
  if (mx == -std::numeric_limits<double>::infinity()) {
    throw std::runtime_error("softmax: all positions masked");
  }
  Tensor out = Tensor::zeros(logits.shape());
  double denom = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (eligible(i)) {
      out.values()[i] = std::exp(logits.values()[i] - mx);
      denom += out.values()[i];
    }
  }
  for (std::size_t i = 0; i < n; ++i) out.values()[i] /= denom;
  if (recording({&logits})) {
    out.set_requires_grad(true);
    Tape::active()->record({logits, out}, [logits, out]() {
      if (!out.has_grad()) return;
      const auto& go = out.grad();
      const auto& y = out.values();
      double inner = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) inner += go[i] * y[i];
      auto& gx = logits.grad();
      for (std::size_t i = 0; i < y.size(); ++i) gx[i] += y[i] * (go[i] - inner);
    });
  }
  return out;
}

Tensor dropout(const Tensor& x, double rate, SplitRng& rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw std::invalid_argument("dropout: rate " + std::to_string(rate) +
                                " outside [0,1)");
  }
  if (rate == 0.0) return x;
  const double keep = 1.0 - rate;
  auto mask = std::make_shared<std::vector<double>>(x.size());
  Tensor out = Tensor::zeros(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double m = rng.uniform() < rate ? 0.0 : 1.0 / keep;
    (*mask)[i] = m;
    out.values()[i] = x.values()[i] * m;
  }
  if (recording({&x})) {
    out.set_requires_grad(true);
    Tape::active()->record({x, out}, [x, out, mask]() {
      if (!out.has_grad()) return;
      auto& gx = x.grad();
      const auto& go = out.grad();
      for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += go[i] * (*mask)[i];
    });
  }
  return out;
}

}  // namespace eog
