#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mfe/engine.hpp"
#include "mfe/model.hpp"
#include "mfe/random.hpp"

namespace mfe {

// Hypothesis variables H and evidence e; the intermediates I are every other
// variable.
struct MapQuery {
  std::vector<VarId> hypothesis;
  Assignment evidence;

  std::vector<VarId> intermediates(std::size_t num_vars) const;
  // H non-empty and duplicate-free, H and E disjoint, ids and states valid.
  void validate(const FactorGraph& fg) const;
};

struct MapResult {
  Assignment explanation;
  // Pr(h, e). Underflows to 0 for very small probabilities; log_score does
  // not.
  double score = 0.0;
  double log_score = 0.0;
  bool log_space = false;
  std::string solver;
  double wall_time = 0.0;
  std::map<std::string, std::string> meta;
};

struct AnnealSchedule {
  double initial_temperature = 2.0;
  double cooling_rate = 0.9;
  std::size_t steps_per_temperature = 10;
  double min_temperature = 0.02;
  std::size_t restarts = 2;

  void validate() const;
  // Number of temperature levels visited per run.
  std::size_t levels() const;
  std::string describe() const;
};

// initial 2.0, rate 0.9, 10 * |H| steps per level, floor 0.02, 2 restarts.
AnnealSchedule default_schedule(std::size_t hypothesis_size);

struct Partition {
  std::vector<VarId> relevant;
  std::vector<VarId> irrelevant;

  // Throws ValidationError unless relevant and irrelevant partition the
  // query's intermediates.
  void validate(const MapQuery& q, std::size_t num_vars) const;
};

struct SolverOptions {
  LogMode log_mode = LogMode::kAuto;
  double cell_budget = kDefaultCellBudget;

  EngineOptions engine_options(const FactorGraph& fg) const {
    return EngineOptions{use_log_space(fg, log_mode), cell_budget};
  }
};

// argmax_h Pr(h, e) from the materialised joint over H; ties go to the
// lowest linear index (first hypothesis variable most significant).
MapResult exact_map(const FactorGraph& fg, const MapQuery& q, const SolverOptions& options = {});

// Simulated annealing over joint assignments to H.
MapResult annealed_map(const FactorGraph& fg, const MapQuery& q, const AnnealSchedule& schedule, std::uint64_t seed,
                       const SolverOptions& options = {});

enum class InnerSolver { kExact, kAnneal };

struct MfeOptions {
  std::size_t samples = 1;
  InnerSolver inner = InnerSolver::kExact;
  // Defaults to default_schedule(|H|) for the annealing inner solver.
  std::optional<AnnealSchedule> schedule;
  SamplingMeasure measure = SamplingMeasure::kUniform;
  SolverOptions solver;
};

// Sampled Most Frugal Explanation: N times draw the irrelevant
// intermediates, maximise Pr(H, i, e) with the relevant ones summed out, and
// return the explanation picked most often (first to reach the top tally).
MapResult sampled_mfe(const FactorGraph& fg, const MapQuery& q, const Partition& partition, const MfeOptions& options,
                      std::uint64_t seed);

// --- building blocks shared with relevance and bench -----------------------

namespace detail {

// Dense evidence with `vars` marked as instantiated (state 0) so that an
// elimination order can be computed for queries instantiating them.
std::vector<std::int64_t> mark_fixed(std::vector<std::int64_t> dense, std::span<const VarId> vars);

// ln Pr(instantiated) for a domain value produced by `engine`.
double to_log(const Engine& engine, double domain_value);

struct Argmax {
  std::vector<State> states;  // aligned with the hypothesis list
  double log_value = 0.0;
};

Argmax exact_argmax(const Engine& engine, std::span<const std::int64_t> fixed, std::span<const VarId> hypothesis,
                    const EliminationOrder& order, std::size_t* joint_cells = nullptr);

struct AnnealOutcome {
  Argmax best;
  std::size_t evaluations = 0;
  std::size_t accepted = 0;
};

// `order` eliminates every variable outside `fixed` and `hypothesis`.
AnnealOutcome anneal(const Engine& engine, std::span<const std::int64_t> fixed, std::span<const VarId> hypothesis,
                     const EliminationOrder& order, const AnnealSchedule& schedule, Rng& rng);

}  // namespace detail

}  // namespace mfe
