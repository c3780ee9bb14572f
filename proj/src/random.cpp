#include "mfe/random.hpp"

#include <cmath>
#include <limits>

#include "mfe/errors.hpp"

namespace mfe {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

State uniform_state(std::size_t cardinality, Rng& rng) {
  std::uniform_int_distribution<std::size_t> dist(0, cardinality - 1);
  return static_cast<State>(dist(rng));
}

std::size_t draw_categorical(std::span<const double> weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw ValidationError("cannot sample from a zero-mass distribution");
  const double u = std::uniform_real_distribution<double>(0.0, total)(rng);
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last_positive = i;
    acc += weights[i];
    if (u < acc) return i;
  }
  return last_positive;
}

ForwardSampler::ForwardSampler(const FactorGraph& fg)
    : fg_(&fg), owner_(fg.size(), std::numeric_limits<std::size_t>::max()) {
  const std::size_t n = fg.size();
  for (std::size_t i = 0; i < fg.factors.size(); ++i) {
    const Factor& f = fg.factors[i];
    if (f.is_scalar()) continue;
    const VarId child = f.scope().back();
    if (owner_[child] != std::numeric_limits<std::size_t>::max()) {
      throw ValidationError("factor graph is not a Bayesian-network factorisation (variable " +
                            std::to_string(child) + " owns two factors)");
    }
    owner_[child] = i;
    const std::size_t k = f.cards().back();
    for (std::size_t row = 0; row < f.size(); row += k) {
      double sum = 0.0;
      for (std::size_t s = 0; s < k; ++s) sum += f.values()[row + s];
      if (std::abs(sum - 1.0) > 1e-6) {
        throw ValidationError("factor " + std::to_string(i) + " is not a conditional distribution");
      }
    }
  }
  std::vector<std::size_t> pending(n, 0);
  std::vector<std::vector<VarId>> children(n);
  for (std::size_t v = 0; v < n; ++v) {
    if (owner_[v] == std::numeric_limits<std::size_t>::max()) {
      throw ValidationError("variable " + std::to_string(v) + " owns no factor");
    }
    const auto& scope = fg.factors[owner_[v]].scope();
    pending[v] = scope.size() - 1;
    for (std::size_t j = 0; j + 1 < scope.size(); ++j) children[scope[j]].push_back(static_cast<VarId>(v));
  }
  std::vector<VarId> ready;
  for (std::size_t v = n; v-- > 0;) {
    if (pending[v] == 0) ready.push_back(static_cast<VarId>(v));
  }
  while (!ready.empty()) {
    const VarId v = ready.back();
    ready.pop_back();
    order_.push_back(v);
    for (VarId c : children[v]) {
      if (--pending[c] == 0) ready.push_back(c);
    }
  }
  if (order_.size() != n) throw ValidationError("factor graph parents form a cycle");
}

std::vector<State> ForwardSampler::sample(Rng& rng) const {
  std::vector<State> out(fg_->size(), 0);
  for (VarId v : order_) {
    const Factor& f = fg_->factors[owner_[v]];
    std::size_t row = 0;
    for (std::size_t j = 0; j + 1 < f.scope().size(); ++j) row = row * f.cards()[j] + out[f.scope()[j]];
    const std::size_t k = f.cards().back();
    out[v] = static_cast<State>(draw_categorical(std::span<const double>(f.values()).subspan(row * k, k), rng));
  }
  return out;
}

}  // namespace mfe
