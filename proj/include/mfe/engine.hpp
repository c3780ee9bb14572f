#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "mfe/model.hpp"

namespace mfe {

inline constexpr double kDefaultCellBudget = 5e8;

enum class LogMode { kAuto, kOn, kOff };

// Log space is used for networks with more than this many variables when the
// mode is kAuto.
inline constexpr std::size_t kAutoLogThreshold = 100;

bool use_log_space(const FactorGraph& fg, LogMode mode);

struct EngineOptions {
  bool log_space = false;
  // Largest factor (in cells) elimination may materialise.
  double cell_budget = kDefaultCellBudget;
};

using EliminationOrder = std::vector<VarId>;

// Unnormalised (unless `normalized`) table over an ordered scope, last
// variable fastest. In log space `values` hold natural logarithms.
struct JointTable {
  std::vector<VarId> scope;
  std::vector<std::size_t> cards;
  std::vector<double> values;
  bool normalized = false;
  bool log_space = false;

  // Sum of all entries, in the table's domain.
  double total() const;
  void normalize();
  // Lowest linear index attaining the maximum.
  std::size_t argmax() const;
  // Entry as a natural log regardless of the storage domain.
  double log_value(std::size_t index) const;
  Assignment assignment(std::size_t index) const;
  std::size_t index_of(const Assignment& a) const;
};

struct EliminationStats {
  std::size_t largest_scope = 0;
  double largest_cells = 0.0;
};

// --- factor algebra (linear values unless noted) ---------------------------

Factor reduce(const Factor& f, const Assignment& evidence);
Factor reduce(const Factor& f, std::span<const std::int64_t> dense);
Factor multiply(const Factor& f, const Factor& g, bool log_space = false);
Factor sum_out(const Factor& f, VarId var, bool log_space = false);
Factor max_out(const Factor& f, VarId var);
// Reorders (and broadcasts over missing variables) to an explicit scope.
Factor reorder(const Factor& f, std::span<const VarId> scope, std::span<const std::size_t> cards);
Factor to_log(const Factor& f);

enum class Reduction { kSum, kMax };

// Product of `parts` laid out over `scope`, optionally summing or maximising
// out `eliminated` on the fly. Every part variable must be in `scope` or be
// `eliminated`. Throws ResourceError when the result or the implicit joint
// exceeds `cell_budget`.
Factor combine(std::span<const Factor* const> parts, std::span<const VarId> scope,
               std::span<const std::size_t> cards, std::optional<VarId> eliminated,
               std::size_t eliminated_card, Reduction reduction, bool log_space, double cell_budget);

// --- elimination -----------------------------------------------------------

// Iterated minimum degree on the interaction graph of `fg` with the
// `instantiated` variables removed; ties go to the lowest id.
EliminationOrder min_degree_order(const FactorGraph& fg, std::span<const VarId> eliminate,
                                  std::span<const VarId> instantiated = {});

// Iterated minimum weight (cells of the variable's clique), ties to the
// lowest id.
EliminationOrder min_weight_order(const FactorGraph& fg, std::span<const VarId> eliminate,
                                  std::span<const VarId> instantiated = {});

// Largest scope (eliminated variable included) met when eliminating `order`
// from `fg` with `instantiated` removed.
std::size_t induced_scope_size(const FactorGraph& fg, const EliminationOrder& order,
                               std::span<const VarId> instantiated = {});

// Cells of the largest clique met along `order`.
double induced_cells(const FactorGraph& fg, const EliminationOrder& order, std::span<const VarId> instantiated = {});

// Factor graph prepared for repeated queries in one numeric domain.
class Engine {
 public:
  explicit Engine(const FactorGraph& fg, EngineOptions options = {});

  const EngineOptions& options() const noexcept { return options_; }
  bool log_space() const noexcept { return options_.log_space; }
  std::size_t size() const noexcept { return cards_.size(); }
  const std::vector<std::size_t>& cardinalities() const noexcept { return cards_; }
  // Factors in the engine's domain.
  const std::vector<Factor>& factors() const noexcept { return factors_; }
  const std::vector<std::size_t>& factors_of(VarId v) const { return factors_of_.at(v); }

  // Min-degree order over every variable that is neither instantiated nor
  // retained. When that order's largest clique exceeds the cell budget, the
  // min-weight order is used instead if it is smaller.
  EliminationOrder order_for(std::span<const std::int64_t> instantiated, std::span<const VarId> retain) const;

  // Table over `retain` proportional to Pr(retain, instantiated). `order`
  // must list exactly the variables that are neither instantiated nor
  // retained.
  JointTable joint(std::span<const std::int64_t> instantiated, std::span<const VarId> retain,
                   const EliminationOrder& order, EliminationStats* stats = nullptr) const;

  // Pr(instantiated) in the engine's domain (a log when log_space()).
  double total(std::span<const std::int64_t> instantiated, const EliminationOrder& order) const;

  // Factors reduced by `instantiated`; fully instantiated factors are folded
  // into `constant` (domain value).
  std::vector<Factor> reduced(std::span<const std::int64_t> instantiated, double& constant) const;

 private:
  friend class PartialElimination;

  // Pool entry that either borrows a factor owned elsewhere or owns one.
  struct Slot {
    const Factor* factor = nullptr;
    std::unique_ptr<Factor> owned;

    static Slot borrow(const Factor& f) { return Slot{&f, nullptr}; }
    static Slot own(Factor f) {
      auto p = std::make_unique<Factor>(std::move(f));
      const Factor* raw = p.get();
      return Slot{raw, std::move(p)};
    }
  };

  std::vector<Slot> reduced_slots(std::span<const std::int64_t> instantiated, double& constant) const;
  void eliminate_slots(std::vector<Slot>& pool, double& constant, const EliminationOrder& order,
                       EliminationStats* stats) const;

  EngineOptions options_;
  std::vector<std::size_t> cards_;
  std::vector<Factor> factors_;
  std::vector<std::vector<std::size_t>> factors_of_;
};

// Repeated Pr(point) evaluations where only `varying` changes between calls
// and every other variable is either in `fixed` or eliminated by `order`.
// Elimination steps that never see a varying variable run once up front.
class PartialElimination {
 public:
  // `engine` must outlive this object.
  PartialElimination(const Engine& engine, std::span<const std::int64_t> fixed, std::span<const VarId> varying,
                     const EliminationOrder& order);

  // `point` extends `fixed` with a state for every varying variable; result
  // in the engine's domain.
  double total(std::span<const std::int64_t> point) const;
  std::size_t replayed_steps() const noexcept { return replay_.size(); }

 private:
  const Engine* engine_;
  double constant_ = 1.0;
  std::vector<Factor> live_;
  std::vector<bool> live_varies_;
  EliminationOrder replay_;
};

// Variable elimination: table over `retain` proportional to
// Pr(retain, evidence). Without an order, min-degree is used.
JointTable eliminate(const FactorGraph& fg, const Assignment& evidence, std::span<const VarId> retain,
                     const std::optional<EliminationOrder>& order = std::nullopt, const EngineOptions& options = {},
                     EliminationStats* stats = nullptr);

inline constexpr double kBruteForceLimit = 67108864.0;  // 2^26

// Exact joint over `retain` by enumerating every completion of `evidence`
// and summing chain-rule products. Linear space only.
JointTable brute_force_joint(const Network& net, const Assignment& evidence, std::span<const VarId> retain);

}  // namespace mfe
