#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "mfe/model.hpp"

namespace mfe {

using Rng = std::mt19937_64;

// Seed splitter: every component derives its own stream from the single
// user-facing seed as derive_seed(seed, stream_id). SplitMix64 finaliser over
// base + golden_ratio * (stream + 1).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

// Stream ids used across the library so seeds never collide between
// components fed from one user seed.
namespace streams {
inline constexpr std::uint64_t kEvidence = 1;
inline constexpr std::uint64_t kSolver = 2;
inline constexpr std::uint64_t kRelevanceTable = 3;
inline constexpr std::uint64_t kOnTheFly = 4;
inline constexpr std::uint64_t kInner = 5;
}  // namespace streams

enum class SamplingMeasure { kUniform, kPrior };

State uniform_state(std::size_t cardinality, Rng& rng);

// Index drawn from a discrete distribution given by (possibly unnormalised)
// non-negative weights.
std::size_t draw_categorical(std::span<const double> weights, Rng& rng);

// Ancestral sampling over a factor graph that is a Bayesian-network
// factorisation: every variable owns exactly one factor, in which it is the
// last scope variable and whose rows are distributions over it.
class ForwardSampler {
 public:
  // Throws ValidationError when `fg` is not of that shape. `fg` must outlive
  // the sampler.
  explicit ForwardSampler(const FactorGraph& fg);

  std::vector<State> sample(Rng& rng) const;

 private:
  const FactorGraph* fg_;
  std::vector<std::size_t> owner_;  // factor index per variable
  std::vector<VarId> order_;        // topological
};

}  // namespace mfe
