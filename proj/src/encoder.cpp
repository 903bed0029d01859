#include "eog/encoder.hpp"

#include <cmath>
#include <stdexcept>

#include "eog/rng.hpp"

namespace eog {

namespace {

// h_t, c_t from one gate evaluation; pre-activations stacked i|f|o|g
std::pair<Tensor, Tensor> lstm_cell(const LstmParams& p, const Tensor& x,
                                    const Tensor& h_prev, const Tensor& c_prev) {
  const std::size_t h = p.hidden;
  Tensor pre = add(add(matvec(p.w_x, x), matvec(p.w_h, h_prev)), p.b);
  Tensor gi = sigmoid(slice(pre, 0, h));
  Tensor gf = sigmoid(slice(pre, h, h));
  Tensor go = sigmoid(slice(pre, 2 * h, h));
  Tensor gc = tanh(slice(pre, 3 * h, h));
  Tensor c = add(mul(gf, c_prev), mul(gi, gc));
  Tensor out = mul(go, tanh(c));
  return {out, c};
}

std::vector<Tensor> run_direction(const LstmParams& p, const Tensor& embedded,
                                  bool reverse) {
  const std::size_t len = embedded.shape()[0];
  std::vector<Tensor> states(len);
  Tensor h = Tensor::zeros({p.hidden});
  Tensor c = Tensor::zeros({p.hidden});
  for (std::size_t step = 0; step < len; ++step) {
    const std::size_t t = reverse ? len - 1 - step : step;
    Tensor x = row(embedded, t);
    auto [nh, nc] = lstm_cell(p, x, h, c);
    h = nh;
    c = nc;
    states[t] = h;
  }
  return states;
}

}  // namespace

LstmParams init_lstm(std::size_t hidden, std::size_t input_dim, SplitRng& rng) {
  LstmParams p;
  p.hidden = hidden;
  auto uniform_matrix = [&rng](std::size_t rows, std::size_t cols) {
    Tensor t = Tensor::zeros({rows, cols}, true);
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    for (double& v : t.values()) v = rng.uniform(-bound, bound);
    return t;
  };
  p.w_x = uniform_matrix(4 * hidden, input_dim);
  p.w_h = uniform_matrix(4 * hidden, hidden);
  p.b = Tensor::zeros({4 * hidden}, true);
  // forget-gate bias starts at 1
  for (std::size_t i = hidden; i < 2 * hidden; ++i) p.b.values()[i] = 1.0;
  return p;
}

Tensor embed_tokens(const EncoderParams& params, std::span<const int> tokens) {
  return lookup(params.word_emb, tokens);
}

Tensor encode_sentence(const EncoderParams& params, std::span<const int> tokens,
                       bool train_mode, SplitRng& rng) {
  if (tokens.empty()) {
    throw std::invalid_argument("encode_sentence: empty sentence");
  }
  Tensor embedded = embed_tokens(params, tokens);
  if (train_mode && params.input_dropout > 0.0) {
    embedded = dropout(embedded, params.input_dropout, rng);
  }
  std::vector<Tensor> fwd = run_direction(params.fwd, embedded, false);
  std::vector<Tensor> bwd = run_direction(params.bwd, embedded, true);
  std::vector<Tensor> rows(tokens.size());
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    std::vector<Tensor> halves = {fwd[t], bwd[t]};
    rows[t] = concat(halves);
  }
  return stack_rows(rows);
}

}  // namespace eog
