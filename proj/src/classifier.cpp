#include "eog/classifier.hpp"

#include <stdexcept>

#include "eog/rng.hpp"

namespace eog {

Tensor classify_pair(const Tensor& edge, const ClassifierParams& params,
                     double dropout_rate, bool train_mode, SplitRng& rng) {
  Tensor e = edge;
  if (train_mode && dropout_rate > 0.0) e = dropout(e, dropout_rate, rng);
  return softmax(add(matvec(params.w, e), params.b));
}

Tensor pair_loss(std::span<const Tensor> probabilities, std::span<const int> gold,
                 std::span<const Tensor> l2_weights, double lambda) {
  if (probabilities.size() != gold.size()) {
    throw std::invalid_argument("pair_loss: " + std::to_string(probabilities.size()) +
                                " probability vectors for " +
                                std::to_string(gold.size()) + " gold classes");
  }
  if (probabilities.empty()) {
    throw std::invalid_argument("pair_loss: no pairs");
  }
  std::vector<Tensor> nll;
  nll.reserve(probabilities.size());
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    nll.push_back(scale(log(pick(probabilities[i], gold[i])), -1.0));
  }
  Tensor loss = mean_all(concat(nll));
  if (lambda > 0.0 && !l2_weights.empty()) {
    std::vector<Tensor> penalties = {loss};
    for (const Tensor& w : l2_weights) {
      penalties.push_back(scale(sum_squares(w), lambda));
    }
    loss = add_n(penalties);
  }
  return loss;
}

int decide(const Tensor& probabilities) {
  const auto& p = probabilities.values();
  int best = 0;
  for (std::size_t i = 1; i < p.size(); ++i) {
    if (p[i] > p[best]) best = static_cast<int>(i);
  }
  return best;
}

}  // namespace eog
