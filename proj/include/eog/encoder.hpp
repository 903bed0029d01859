#pragma once

#include <span>
#include <vector>

#include "eog/autodiff.hpp"

namespace eog {

class SplitRng;

// Single-layer LSTM parameter set for one direction. Gate rows are stacked
// input|forget|output|cell, so w_x is [4H, D], w_h is [4H, H], b is [4H].
struct LstmParams {
  Tensor w_x, w_h, b;
  std::size_t hidden = 0;
};

struct EncoderParams {
  Tensor word_emb;  // [vocab, word_dim]
  LstmParams fwd, bwd;
  double input_dropout = 0.5;
  std::size_t output_dim() const { return fwd.hidden + bwd.hidden; }
};

LstmParams init_lstm(std::size_t hidden, std::size_t input_dim, SplitRng& rng);

// Embedding-row lookup for a token index sequence; returns [len, word_dim].
Tensor embed_tokens(const EncoderParams& params, std::span<const int> tokens);

// Contextual representation of one sentence: position t concatenates the
// forward state after tokens 0..t with the backward state after tokens
// t..end. Input dropout applies only in train mode. Returns [len, 2H].
Tensor encode_sentence(const EncoderParams& params, std::span<const int> tokens,
                       bool train_mode, SplitRng& rng);

}  // namespace eog
