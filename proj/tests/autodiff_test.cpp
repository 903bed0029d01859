#include <cmath>
#include <vector>

#include "doctest.h"
#include "eog/autodiff.hpp"
#include "eog/optim.hpp"
#include "eog/rng.hpp"

using namespace eog;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, SplitRng& rng, bool grad = true) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return Tensor::from(std::move(v), std::move(shape), grad);
}

// Runs finite_difference_check for a loss built from the given tensors.
double check_grad(const std::function<Tensor()>& f, std::vector<Tensor> inputs,
                  double eps = 1e-5) {
  std::vector<NamedParam> params;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    params.push_back({"p" + std::to_string(i), inputs[i], false});
  }
  return finite_difference_check(f, params, eps);
}

}  // namespace

TEST_CASE("sigmoid at zero is one half") {
  Tensor x = Tensor::from({0.0}, {1});
  Tensor y = sigmoid(x);
  CHECK(y.values()[0] == doctest::Approx(0.5));
}

TEST_CASE("softmax exp-normalizes") {
  Tensor x = Tensor::from({1.0, -1.0}, {2});
  Tensor y = softmax(x);
  CHECK(y.values()[0] == doctest::Approx(0.8808).epsilon(1e-3));
  CHECK(y.values()[1] == doctest::Approx(0.1192).epsilon(1e-3));
  CHECK(y.values()[0] + y.values()[1] == doctest::Approx(1.0));
}

TEST_CASE("masked softmax zeroes masked positions and renormalizes") {
  Tensor x = Tensor::from({3.0, 1.0, -2.0, 0.5}, {4});
  std::vector<std::uint8_t> mask = {1, 0, 1, 1};
  Tensor y = softmax(x, mask);
  CHECK(y.values()[1] == 0.0);
  double sum = 0.0;
  for (double v : y.values()) {
    CHECK(v >= 0.0);
    sum += v;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("all-masked softmax throws") {
  Tensor x = Tensor::from({1.0, 2.0}, {2});
  std::vector<std::uint8_t> mask = {0, 0};
  CHECK_THROWS_AS(softmax(x, mask), std::runtime_error);
}

TEST_CASE("concat joins along the last axis") {
  Tensor a = Tensor::from({1.0, 2.0}, {2});
  Tensor b = Tensor::from({3.0}, {1});
  std::vector<Tensor> xs = {a, b};
  Tensor c = concat(xs);
  CHECK(c.size() == 3);
  CHECK(c.values() == std::vector<double>{1.0, 2.0, 3.0});
}

TEST_CASE("shape mismatch errors name the primitive and the shapes") {
  Tensor a = Tensor::from({1.0, 2.0}, {2});
  Tensor b = Tensor::from({1.0, 2.0, 3.0}, {3});
  try {
    add(a, b);
    FAIL("expected a shape error");
  } catch (const std::invalid_argument& e) {
    std::string msg = e.what();
    CHECK(msg.find("add") != std::string::npos);
    CHECK(msg.find("[2]") != std::string::npos);
    CHECK(msg.find("[3]") != std::string::npos);
  }
}

TEST_CASE("backward of a linear function") {
  Tensor p = Tensor::scalar(3.0, true);
  Tape tape;
  Tensor loss = scale(p, 2.0);
  tape.backward(loss);
  CHECK(p.grad()[0] == doctest::Approx(2.0));
  CHECK(tape.size() == 0);  // cleared
}

TEST_CASE("backward of sigmoid at zero") {
  Tensor p = Tensor::scalar(0.0, true);
  Tape tape;
  Tensor loss = sigmoid(p);
  tape.backward(loss);
  CHECK(p.grad()[0] == doctest::Approx(0.25));
}

TEST_CASE("detached tensors receive no grad") {
  Tensor p = Tensor::scalar(1.0, false);
  Tape tape;
  Tensor loss = scale(p, 2.0);
  tape.backward(loss);
  CHECK_FALSE(p.has_grad());
  CHECK(tape.size() == 0);
}

TEST_CASE("backward rejects non-scalar loss") {
  Tensor p = Tensor::from({1.0, 2.0}, {2}, true);
  Tape tape;
  Tensor out = scale(p, 2.0);
  CHECK_THROWS_AS(tape.backward(out), std::invalid_argument);
}

TEST_CASE("grad accumulates across reuse of a tensor") {
  Tensor p = Tensor::scalar(2.0, true);
  Tape tape;
  Tensor loss = add(p, p);  // d/dp = 2
  tape.backward(loss);
  CHECK(p.grad()[0] == doctest::Approx(2.0));
}

TEST_CASE("no recording happens without an active tape") {
  Tensor p = Tensor::scalar(1.0, true);
  Tensor y = sigmoid(p);
  CHECK_FALSE(y.requires_grad());
}

TEST_CASE("finite differences are near-exact for a linear map") {
  SplitRng rng(11);
  Tensor w = random_tensor({4}, rng);
  Tensor x = random_tensor({4}, rng, false);
  double err = check_grad([&] { return dot(w, x); }, {w}, 1e-4);
  CHECK(err < 1e-9);
}

TEST_CASE("finite_difference_check rejects eps = 0") {
  Tensor w = Tensor::scalar(1.0, true);
  std::vector<NamedParam> params = {{"w", w, false}};
  CHECK_THROWS_AS(
      finite_difference_check([&] { return scale(w, 1.0); }, params, 0.0),
      std::invalid_argument);
}

TEST_CASE("every primitive passes a gradient check at random shapes") {
  SplitRng rng(29);
  auto scalarize = [](Tensor t) { return mean_all(t); };

  for (int trial = 0; trial < 3; ++trial) {
    const std::size_t n = 2 + rng.below(3);
    const std::size_t m = 2 + rng.below(3);
    Tensor a = random_tensor({n, m}, rng);
    Tensor b = random_tensor({n, m}, rng);
    Tensor v = random_tensor({m}, rng);
    Tensor u = random_tensor({n}, rng);
    Tensor sq = random_tensor({m, m}, rng);

    CHECK(check_grad([&] { return scalarize(add(a, b)); }, {a, b}) < 1e-4);
    CHECK(check_grad([&] { return scalarize(mul(a, b)); }, {a, b}) < 1e-4);
    CHECK(check_grad([&] { return scalarize(scale(a, -1.7)); }, {a}) < 1e-4);
    CHECK(check_grad([&] { return scalarize(lerp(a, b, 0.8)); }, {a, b}) < 1e-4);
    CHECK(check_grad([&] { return scalarize(matmul(a, sq)); }, {a, sq}) < 1e-4);
    CHECK(check_grad([&] { return scalarize(matvec(a, v)); }, {a, v}) < 1e-4);
    CHECK(check_grad([&] { return scalarize(tmatvec(a, u)); }, {a, u}) < 1e-4);
    CHECK(check_grad([&] { return dot(v, v); }, {v}) < 1e-4);
    CHECK(check_grad([&] {
            std::vector<Tensor> xs = {v, u};
            return scalarize(concat(xs));
          }, {v, u}) < 1e-4);
    CHECK(check_grad([&] {
            std::vector<Tensor> xs = {v, v};
            return scalarize(stack_rows(xs));
          }, {v}) < 1e-4);
    CHECK(check_grad([&] { return scalarize(slice(v, 0, m - 1)); }, {v}) < 1e-4);
    CHECK(check_grad([&] { return scalarize(row(a, 1)); }, {a}) < 1e-4);
    CHECK(check_grad([&] { return pick(v, 1); }, {v}) < 1e-4);
    std::vector<int> idx = {1, 0, 1};
    CHECK(check_grad([&] { return scalarize(lookup(a, idx)); }, {a}) < 1e-4);
    CHECK(check_grad([&] { return scalarize(mean_rows(a, idx)); }, {a}) < 1e-4);
    CHECK(check_grad([&] { return scalarize(sum_rows(a)); }, {a}) < 1e-4);
    CHECK(check_grad([&] { return mean_all(a); }, {a}) < 1e-4);
    CHECK(check_grad([&] { return scalarize(sigmoid(a)); }, {a}) < 1e-4);
    CHECK(check_grad([&] { return scalarize(tanh(a)); }, {a}) < 1e-4);
    CHECK(check_grad([&] { return scalarize(softmax(v)); }, {v}) < 1e-4);
    CHECK(check_grad([&] { return scalarize(log(sigmoid(a))); }, {a}) < 1e-4);
  }
}

TEST_CASE("embedding lookup accumulates grads across repeated tokens") {
  Tensor table = Tensor::from({1.0, 2.0, 3.0, 4.0}, {2, 2}, true);
  std::vector<int> idx = {0, 0, 1};
  Tape tape;
  std::vector<Tensor> parts;
  Tensor rows = lookup(table, idx);
  Tensor loss = mean_all(rows);  // each of 6 entries weighted 1/6
  tape.backward(loss);
  CHECK(table.grad()[0] == doctest::Approx(2.0 / 6.0));
  CHECK(table.grad()[2] == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("dropout uses inverted scaling and a consistent backward mask") {
  SplitRng rng(5);
  Tensor x = Tensor::from(std::vector<double>(64, 1.0), {64}, true);
  Tape tape;
  Tensor y = dropout(x, 0.5, rng);
  int kept = 0;
  for (double v : y.values()) {
    CHECK((v == 0.0 || v == doctest::Approx(2.0)));
    if (v != 0.0) ++kept;
  }
  CHECK(kept > 0);
  CHECK(kept < 64);
  Tensor loss = mean_all(y);
  tape.backward(loss);
  for (std::size_t i = 0; i < 64; ++i) {
    if (y.values()[i] == 0.0) {
      CHECK(x.grad()[i] == 0.0);
    } else {
      CHECK(x.grad()[i] == doctest::Approx(2.0 / 64.0));
    }
  }
}

TEST_CASE("dropout rejects rate outside [0,1)") {
  SplitRng rng(1);
  Tensor x = Tensor::from({1.0}, {1});
  CHECK_THROWS_AS(dropout(x, 1.0, rng), std::invalid_argument);
}

TEST_CASE("adam with zero gradients is the identity") {
  Tensor w = Tensor::from({1.0, -2.0}, {2}, true);
  w.grad();  // zeros
  std::vector<NamedParam> params = {{"w", w, false}};
  AdamState adam(0.002);
  adam.step(params);
  CHECK(w.values()[0] == 1.0);
  CHECK(w.values()[1] == -2.0);
}

TEST_CASE("adam first step with unit gradient moves by about the learning rate") {
  Tensor w = Tensor::scalar(1.0, true);
  w.grad()[0] = 1.0;
  std::vector<NamedParam> params = {{"w", w, false}};
  AdamState adam(0.002);
  adam.step(params);
  CHECK(w.values()[0] == doctest::Approx(1.0 - 0.002).epsilon(1e-6));
  CHECK(adam.step_count() == 1);
  w.grad()[0] = 1.0;
  adam.step(params);
  CHECK(adam.step_count() == 2);
}

TEST_CASE("adam reports missing grads by parameter name") {
  Tensor w = Tensor::scalar(1.0, true);
  std::vector<NamedParam> params = {{"encoder.w_x", w, false}};
  AdamState adam;
  try {
    adam.step(params);
    FAIL("expected missing-grad error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("encoder.w_x") != std::string::npos);
  }
}

TEST_CASE("clip_global_norm leaves small gradients alone") {
  Tensor w = Tensor::from({0.0, 0.0}, {2}, true);
  w.grad() = {3.0, 4.0};
  std::vector<NamedParam> params = {{"w", w, false}};
  double norm = clip_global_norm(params, 10.0);
  CHECK(norm == doctest::Approx(5.0));
  CHECK(w.grad()[0] == 3.0);
  CHECK(w.grad()[1] == 4.0);
}

TEST_CASE("clip_global_norm rescales large gradients to the bound") {
  Tensor w = Tensor::from({0.0, 0.0}, {2}, true);
  w.grad() = {30.0, 40.0};
  std::vector<NamedParam> params = {{"w", w, false}};
  clip_global_norm(params, 10.0);
  CHECK(w.grad()[0] == doctest::Approx(6.0));
  CHECK(w.grad()[1] == doctest::Approx(8.0));
}

TEST_CASE("clip_global_norm is idempotent and ignores zero grads") {
  SplitRng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor w = random_tensor({5}, rng);
    w.grad();
    for (std::size_t i = 0; i < 5; ++i) w.grad()[i] = rng.uniform(-20.0, 20.0);
    std::vector<NamedParam> params = {{"w", w, false}};
    clip_global_norm(params, 4.0);
    std::vector<double> once = w.grad();
    clip_global_norm(params, 4.0);
    CHECK(w.grad() == once);
    double sq = 0.0;
    for (double g : once) sq += g * g;
    CHECK(std::sqrt(sq) <= 4.0 + 1e-12);
  }
  Tensor z = Tensor::from({0.0}, {1}, true);
  z.grad();
  std::vector<NamedParam> params = {{"z", z, false}};
  clip_global_norm(params, 1.0);
  CHECK(z.grad()[0] == 0.0);
}

TEST_CASE("same seed gives identical rng streams and split streams differ") {
  SplitRng a(123), b(123);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  SplitRng c = a.split(1), d = a.split(2);
  CHECK(c.next_u64() != d.next_u64());
}
