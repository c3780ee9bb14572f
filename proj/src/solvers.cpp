#include "mfe/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "mfe/errors.hpp"

namespace mfe {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Assignment to_assignment(std::span<const VarId> vars, std::span<const State> states) {
  Assignment a;
  for (std::size_t i = 0; i < vars.size(); ++i) a.set(vars[i], states[i]);
  return a;
}

void fill_score(MapResult& r, double log_score, bool log_space) {
  r.log_score = log_score;
  r.score = std::exp(log_score);
  r.log_space = log_space;
}

}  // namespace

// ---------------------------------------------------------------------------
// Query types

std::vector<VarId> MapQuery::intermediates(std::size_t num_vars) const {
  std::vector<bool> taken(num_vars, false);
  for (VarId h : hypothesis) taken.at(h) = true;
  for (const auto& [v, s] : evidence) taken.at(v) = true;
  std::vector<VarId> out;
  for (std::size_t v = 0; v < num_vars; ++v) {
    if (!taken[v]) out.push_back(static_cast<VarId>(v));
  }
  return out;
}

void MapQuery::validate(const FactorGraph& fg) const {
  if (hypothesis.empty()) throw ValidationError("hypothesis set is empty");
  std::vector<bool> seen(fg.size(), false);
  for (VarId h : hypothesis) {
    if (h >= fg.size()) throw ValidationError("unknown hypothesis variable " + std::to_string(h));
    if (seen[h]) throw ValidationError("hypothesis variable " + std::to_string(h) + " listed twice");
    seen[h] = true;
    if (evidence.contains(h)) throw ValidationError("variable " + std::to_string(h) + " is both hypothesis and evidence");
  }
  evidence.validate(fg.cardinalities());
}

void AnnealSchedule::validate() const {
  if (!(initial_temperature > 0.0)) throw ValidationError("initial temperature must be positive");
  if (!(cooling_rate > 0.0 && cooling_rate < 1.0)) throw ValidationError("cooling rate must lie in (0, 1)");
  if (steps_per_temperature == 0) throw ValidationError("steps per temperature must be positive");
  if (!(min_temperature > 0.0)) throw ValidationError("minimum temperature must be positive");
}

std::size_t AnnealSchedule::levels() const {
  std::size_t n = 0;
  for (double t = initial_temperature; t >= min_temperature; t *= cooling_rate) ++n;
  return n;
}

std::string AnnealSchedule::describe() const {
  std::ostringstream out;
  out << "t0=" << initial_temperature << " rate=" << cooling_rate << " steps=" << steps_per_temperature
      << " tmin=" << min_temperature << " restarts=" << restarts;
  return out.str();
}

AnnealSchedule default_schedule(std::size_t hypothesis_size) {
  AnnealSchedule s;
  s.steps_per_temperature = 10 * std::max<std::size_t>(hypothesis_size, 1);
  return s;
}

void Partition::validate(const MapQuery& q, std::size_t num_vars) const {
  const auto inter = q.intermediates(num_vars);
  std::vector<int> mark(num_vars, 0);
  for (VarId v : inter) mark[v] = 1;
  for (const auto* side : {&relevant, &irrelevant}) {
    for (VarId v : *side) {
      if (v >= num_vars || mark[v] != 1) {
        throw ValidationError("partition variable " + std::to_string(v) + " is not an unassigned intermediate");
      }
      mark[v] = 2;
    }
  }
  for (VarId v : inter) {
    if (mark[v] != 2) throw ValidationError("intermediate " + std::to_string(v) + " missing from partition");
  }
}

// ---------------------------------------------------------------------------
// Building blocks

namespace detail {

std::vector<std::int64_t> mark_fixed(std::vector<std::int64_t> dense, std::span<const VarId> vars) {
  for (VarId v : vars) {
    if (dense.at(v) < 0) dense[v] = 0;
  }
  return dense;
}

double to_log(const Engine& engine, double domain_value) {
  return engine.log_space() ? domain_value : std::log(domain_value);
}

Argmax exact_argmax(const Engine& engine, std::span<const std::int64_t> fixed, std::span<const VarId> hypothesis,
                    const EliminationOrder& order, std::size_t* joint_cells) {
  const JointTable table = engine.joint(fixed, hypothesis, order);
  const std::size_t best = table.argmax();
  if (joint_cells) *joint_cells = table.values.size();
  return Argmax{unravel_index(table.cards, best), table.log_value(best)};
}

AnnealOutcome anneal(const Engine& engine, std::span<const std::int64_t> fixed, std::span<const VarId> hypothesis,
                     const EliminationOrder& order, const AnnealSchedule& schedule, Rng& rng) {
  schedule.validate();
  const auto& cards = engine.cardinalities();
  std::vector<std::int64_t> point(fixed.begin(), fixed.end());
  AnnealOutcome out;
  bool have_best = false;
  const PartialElimination scorer(engine, fixed, hypothesis, order);

  auto evaluate = [&](std::span<const State> h) {
    for (std::size_t i = 0; i < hypothesis.size(); ++i) point[hypothesis[i]] = h[i];
    ++out.evaluations;
    return to_log(engine, scorer.total(point));
  };

  std::uniform_int_distribution<std::size_t> pick_var(0, hypothesis.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<State> state(hypothesis.size());
  std::vector<State> candidate(hypothesis.size());

  for (std::size_t run = 0; run <= schedule.restarts; ++run) {
    for (std::size_t i = 0; i < hypothesis.size(); ++i) state[i] = uniform_state(cards[hypothesis[i]], rng);
    double current = evaluate(state);
    if (!have_best || current > out.best.log_value) {
      out.best = Argmax{state, current};
      have_best = true;
    }
    for (double t = schedule.initial_temperature; t >= schedule.min_temperature; t *= schedule.cooling_rate) {
      for (std::size_t step = 0; step < schedule.steps_per_temperature; ++step) {
        const std::size_t j = pick_var(rng);
        const std::size_t k = cards[hypothesis[j]];
        if (k < 2) continue;
        State next = static_cast<State>(std::uniform_int_distribution<std::size_t>(0, k - 2)(rng));
        if (next >= state[j]) ++next;
        candidate = state;
        candidate[j] = next;
        const double value = evaluate(candidate);
        bool accept;
        if (value >= current || current == kNegInf) {
          accept = true;
        } else if (value == kNegInf) {
          accept = false;
        } else {
          accept = unit(rng) < std::exp((value - current) / t);
        }
        if (!accept) continue;
        ++out.accepted;
        state.swap(candidate);
        current = value;
        if (current > out.best.log_value) out.best = Argmax{state, current};
      }
    }
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Solvers

MapResult exact_map(const FactorGraph& fg, const MapQuery& q, const SolverOptions& options) {
  q.validate(fg);
  const auto start = Clock::now();
  const Engine engine(fg, options.engine_options(fg));
  const auto dense = q.evidence.dense(fg.size());
  const auto order = engine.order_for(dense, q.hypothesis);
  std::size_t cells = 0;
  const auto best = detail::exact_argmax(engine, dense, q.hypothesis, order, &cells);

  MapResult r;
  r.solver = "map";
  r.explanation = to_assignment(q.hypothesis, best.states);
  fill_score(r, best.log_value, engine.log_space());
  r.wall_time = seconds_since(start);
  r.meta["joint_cells"] = std::to_string(cells);
  r.meta["eliminated"] = std::to_string(order.size());
  return r;
}

MapResult annealed_map(const FactorGraph& fg, const MapQuery& q, const AnnealSchedule& schedule, std::uint64_t seed,
                       const SolverOptions& options) {
  q.validate(fg);
  schedule.validate();
  const auto start = Clock::now();
  const Engine engine(fg, options.engine_options(fg));
  const auto dense = q.evidence.dense(fg.size());
  const auto order = engine.order_for(detail::mark_fixed(dense, q.hypothesis), {});
  Rng rng(seed);
  const auto outcome = detail::anneal(engine, dense, q.hypothesis, order, schedule, rng);

  MapResult r;
  r.solver = "ann";
  r.explanation = to_assignment(q.hypothesis, outcome.best.states);
  fill_score(r, outcome.best.log_value, engine.log_space());
  r.wall_time = seconds_since(start);
  r.meta["evaluations"] = std::to_string(outcome.evaluations);
  r.meta["accepted"] = std::to_string(outcome.accepted);
  r.meta["schedule"] = schedule.describe();
  return r;
}

MapResult sampled_mfe(const FactorGraph& fg, const MapQuery& q, const Partition& partition, const MfeOptions& options,
                      std::uint64_t seed) {
  q.validate(fg);
  partition.validate(q, fg.size());
  if (options.samples == 0) throw ValidationError("sampled MFE needs at least one sample");
  const AnnealSchedule schedule = options.schedule.value_or(default_schedule(q.hypothesis.size()));
  if (options.inner == InnerSolver::kAnneal) schedule.validate();

  const auto start = Clock::now();
  const Engine engine(fg, options.solver.engine_options(fg));
  const auto& cards = engine.cardinalities();
  std::optional<ForwardSampler> prior;
  if (options.measure == SamplingMeasure::kPrior) prior.emplace(fg);

  std::vector<std::int64_t> point = q.evidence.dense(fg.size());
  const auto fixed_shape = detail::mark_fixed(point, partition.irrelevant);
  const EliminationOrder order = options.inner == InnerSolver::kExact
                                     ? engine.order_for(fixed_shape, q.hypothesis)
                                     : engine.order_for(detail::mark_fixed(fixed_shape, q.hypothesis), {});

  Rng rng(seed);
  std::map<std::vector<State>, std::size_t> tally;
  std::vector<State> winner;
  std::size_t winner_count = 0;
  std::size_t evaluations = 0;
  for (std::size_t n = 0; n < options.samples; ++n) {
    if (prior) {
      const auto full = prior->sample(rng);
      for (VarId v : partition.irrelevant) point[v] = full[v];
    } else {
      for (VarId v : partition.irrelevant) point[v] = uniform_state(cards[v], rng);
    }
    detail::Argmax best;
    if (options.inner == InnerSolver::kExact) {
      best = detail::exact_argmax(engine, point, q.hypothesis, order);
    } else {
      Rng inner_rng(derive_seed(rng(), streams::kInner));
      auto outcome = detail::anneal(engine, point, q.hypothesis, order, schedule, inner_rng);
      evaluations += outcome.evaluations;
      best = std::move(outcome.best);
    }
    const std::size_t count = ++tally[best.states];
    if (count > winner_count) {
      winner_count = count;
      winner = best.states;
    }
  }

  // Pr(h_maj, e) with every intermediate summed out.
  std::vector<std::int64_t> scored = q.evidence.dense(fg.size());
  for (std::size_t i = 0; i < q.hypothesis.size(); ++i) scored[q.hypothesis[i]] = winner[i];
  const double log_score = detail::to_log(engine, engine.total(scored, engine.order_for(scored, {})));

  MapResult r;
  r.solver = options.inner == InnerSolver::kExact ? "mfe" : "mfe+a";
  r.explanation = to_assignment(q.hypothesis, winner);
  fill_score(r, log_score, engine.log_space());
  r.wall_time = seconds_since(start);
  r.meta["samples"] = std::to_string(options.samples);
  r.meta["tally"] = std::to_string(winner_count);
  {
    std::ostringstream frac;
    frac << static_cast<double>(winner_count) / static_cast<double>(options.samples);
    r.meta["tally_fraction"] = frac.str();
  }
  r.meta["distinct"] = std::to_string(tally.size());
  r.meta["relevant"] = std::to_string(partition.relevant.size());
  r.meta["irrelevant"] = std::to_string(partition.irrelevant.size());
  r.meta["inner"] = options.inner == InnerSolver::kExact ? "exact" : "anneal";
  r.meta["measure"] = options.measure == SamplingMeasure::kUniform ? "uniform" : "prior";
  if (options.inner == InnerSolver::kAnneal) {
    r.meta["schedule"] = schedule.describe();
    r.meta["evaluations"] = std::to_string(evaluations);
  }
  return r;
}

}  // namespace mfe
