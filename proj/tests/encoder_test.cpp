#include <vector>

#include "doctest.h"
#include "eog/encoder.hpp"
#include "eog/optim.hpp"
#include "eog/rng.hpp"

using namespace eog;

namespace {

EncoderParams random_encoder(std::size_t vocab, std::size_t word_dim,
                             std::size_t hidden, SplitRng& rng) {
  EncoderParams p;
  p.word_emb = Tensor::zeros({vocab, word_dim}, true);
  for (double& v : p.word_emb.values()) v = rng.uniform(-0.05, 0.05);
  p.fwd = init_lstm(hidden, word_dim, rng);
  p.bwd = init_lstm(hidden, word_dim, rng);
  p.input_dropout = 0.0;
  return p;
}

}  // namespace

TEST_CASE("encoding a single token gives one vector of twice the hidden size") {
  SplitRng rng(3);
  EncoderParams p = random_encoder(6, 4, 5, rng);
  std::vector<int> tokens = {2};
  Tensor out = encode_sentence(p, tokens, false, rng);
  CHECK(out.shape() == std::vector<std::size_t>{1, 10});
}

TEST_CASE("all-zero parameters produce all-zero outputs") {
  EncoderParams p;
  p.word_emb = Tensor::zeros({4, 3});
  p.fwd = LstmParams{Tensor::zeros({8, 3}), Tensor::zeros({8, 2}), Tensor::zeros({8}), 2};
  p.bwd = LstmParams{Tensor::zeros({8, 3}), Tensor::zeros({8, 2}), Tensor::zeros({8}), 2};
  p.input_dropout = 0.0;
  SplitRng rng(0);
  std::vector<int> tokens = {0, 1, 2};
  Tensor out = encode_sentence(p, tokens, false, rng);
  for (double v : out.values()) CHECK(v == 0.0);
}

TEST_CASE("empty sentences are rejected") {
  SplitRng rng(3);
  EncoderParams p = random_encoder(4, 3, 2, rng);
  std::vector<int> tokens;
  CHECK_THROWS_AS(encode_sentence(p, tokens, false, rng), std::invalid_argument);
}

TEST_CASE("reversing the sentence and swapping directions reverses the output") {
  SplitRng rng(17);
  EncoderParams p = random_encoder(9, 4, 3, rng);
  std::vector<int> tokens = {1, 4, 2, 8, 5};
  Tensor out = encode_sentence(p, tokens, false, rng);

  EncoderParams swapped = p;
  swapped.fwd = p.bwd;
  swapped.bwd = p.fwd;
  std::vector<int> reversed(tokens.rbegin(), tokens.rend());
  Tensor rev = encode_sentence(swapped, reversed, false, rng);

  const std::size_t len = tokens.size(), h = 3;
  for (std::size_t t = 0; t < len; ++t) {
    for (std::size_t i = 0; i < h; ++i) {
      // forward half of out matches backward half of rev at the mirrored position
      CHECK(out.values()[t * 2 * h + i] ==
            doctest::Approx(rev.values()[(len - 1 - t) * 2 * h + h + i]));
      CHECK(out.values()[t * 2 * h + h + i] ==
            doctest::Approx(rev.values()[(len - 1 - t) * 2 * h + i]));
    }
  }
}

TEST_CASE("embed_tokens looks rows up in order") {
  SplitRng rng(5);
  EncoderParams p = random_encoder(4, 3, 2, rng);
  std::vector<int> idx = {2, 0};
  Tensor rows = embed_tokens(p, idx);
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(rows.values()[c] == p.word_emb.values()[2 * 3 + c]);
    CHECK(rows.values()[3 + c] == p.word_emb.values()[c]);
  }
  std::vector<int> bad = {7};
  CHECK_THROWS_AS(embed_tokens(p, bad), std::invalid_argument);
}

TEST_CASE("evaluation-mode encoding is deterministic") {
  SplitRng rng(11);
  EncoderParams p = random_encoder(8, 4, 3, rng);
  std::vector<int> tokens = {3, 1, 7, 2};
  SplitRng r1(99), r2(1234);
  Tensor a = encode_sentence(p, tokens, false, r1);
  Tensor b = encode_sentence(p, tokens, false, r2);
  CHECK(a.values() == b.values());
}

TEST_CASE("input dropout only fires in train mode") {
  SplitRng rng(11);
  EncoderParams p = random_encoder(8, 4, 3, rng);
  p.input_dropout = 0.5;
  std::vector<int> tokens = {3, 1, 7, 2};
  SplitRng r1(5), r2(5);
  Tensor eval_out = encode_sentence(p, tokens, false, r1);
  Tensor train_out = encode_sentence(p, tokens, true, r2);
  bool differs = false;
  for (std::size_t i = 0; i < eval_out.size(); ++i) {
    if (eval_out.values()[i] != train_out.values()[i]) differs = true;
  }
  CHECK(differs);
}

TEST_CASE("encoder gradients pass the finite-difference check at toy size") {
  SplitRng rng(23);
  EncoderParams p = random_encoder(7, 4, 3, rng);
  std::vector<int> tokens = {1, 5, 2, 6};
  SplitRng fw(0);
  auto loss = [&] { return mean_all(encode_sentence(p, tokens, false, fw)); };
  std::vector<NamedParam> params = {
      {"word_emb", p.word_emb, false}, {"fwd.w_x", p.fwd.w_x, false},
      {"fwd.w_h", p.fwd.w_h, false},   {"fwd.b", p.fwd.b, false},
      {"bwd.w_x", p.bwd.w_x, false},   {"bwd.w_h", p.bwd.w_h, false},
      {"bwd.b", p.bwd.b, false},
  };
  CHECK(finite_difference_check(loss, params, 1e-4) < 1e-3);
}
