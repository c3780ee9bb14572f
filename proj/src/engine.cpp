#include "mfe/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mfe/errors.hpp"

namespace mfe {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(std::span<const double> xs) {
  double top = kNegInf;
  for (double x : xs) top = std::max(top, x);
  if (top == kNegInf) return kNegInf;
  double sum = 0.0;
  for (double x : xs) sum += std::exp(x - top);
  return top + std::log(sum);
}

std::vector<std::size_t> strides_of(std::span<const std::size_t> cards) {
  std::vector<std::size_t> strides(cards.size());
  std::size_t s = 1;
  for (std::size_t i = cards.size(); i-- > 0;) {
    strides[i] = s;
    s *= cards[i];
  }
  return strides;
}

void check_budget(double cells, double budget) {
  if (cells > budget) {
    throw ResourceError("factor of " + std::to_string(static_cast<long double>(cells)) +
                        " cells exceeds the cell budget of " + std::to_string(static_cast<long double>(budget)));
  }
}

// Sorted union of part scopes, without `skip`, with matching cardinalities.
void union_scope(std::span<const Factor* const> parts, std::optional<VarId> skip, std::vector<VarId>& scope,
                 std::vector<std::size_t>& cards) {
  std::vector<std::pair<VarId, std::size_t>> vars;
  for (const Factor* f : parts) {
    for (std::size_t i = 0; i < f->scope().size(); ++i) {
      if (skip && f->scope()[i] == *skip) continue;
      vars.emplace_back(f->scope()[i], f->cards()[i]);
    }
  }
  std::sort(vars.begin(), vars.end());
  vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
  scope.clear();
  cards.clear();
  for (const auto& [v, c] : vars) {
    scope.push_back(v);
    cards.push_back(c);
  }
}

}  // namespace

bool use_log_space(const FactorGraph& fg, LogMode mode) {
  switch (mode) {
    case LogMode::kOn:
      return true;
    case LogMode::kOff:
      return false;
    case LogMode::kAuto:
      break;
  }
  return fg.size() > kAutoLogThreshold;
}

// ---------------------------------------------------------------------------
// JointTable

double JointTable::total() const {
  if (log_space) return log_sum_exp(values);
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum;
}

void JointTable::normalize() {
  const double z = total();
  if (log_space) {
    if (z == kNegInf) throw ValidationError("cannot normalise a table of zero mass");
    for (double& v : values) v -= z;
  } else {
    if (!(z > 0.0)) throw ValidationError("cannot normalise a table of zero mass");
    for (double& v : values) v /= z;
  }
  normalized = true;
}

std::size_t JointTable::argmax() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

double JointTable::log_value(std::size_t index) const {
  return log_space ? values.at(index) : std::log(values.at(index));
}

Assignment JointTable::assignment(std::size_t index) const {
  const auto states = unravel_index(cards, index);
  Assignment a;
  for (std::size_t i = 0; i < scope.size(); ++i) a.set(scope[i], states[i]);
  return a;
}

std::size_t JointTable::index_of(const Assignment& a) const {
  std::size_t index = 0;
  for (std::size_t i = 0; i < scope.size(); ++i) {
    const State s = a.at(scope[i]);
    if (s >= cards[i]) throw ValidationError("state out of range in table lookup");
    index = index * cards[i] + s;
  }
  return index;
}

// ---------------------------------------------------------------------------
// Factor algebra

Factor combine(std::span<const Factor* const> parts, std::span<const VarId> scope,
               std::span<const std::size_t> cards, std::optional<VarId> eliminated, std::size_t eliminated_card,
               Reduction reduction, bool log_space, double cell_budget) {
  const std::size_t d = scope.size();
  const std::size_t k = parts.size();
  double cells = 1.0;
  for (std::size_t c : cards) cells *= static_cast<double>(c);
  check_budget(cells * static_cast<double>(eliminated ? eliminated_card : 1), cell_budget);
  const auto n = static_cast<std::size_t>(cells);

  std::vector<std::size_t> strides(k * d, 0);
  std::vector<std::size_t> elim_stride(k, 0);
  for (std::size_t p = 0; p < k; ++p) {
    const Factor& f = *parts[p];
    const auto own = strides_of(f.cards());
    for (std::size_t i = 0; i < f.scope().size(); ++i) {
      const VarId v = f.scope()[i];
      if (eliminated && v == *eliminated) {
        elim_stride[p] = own[i];
        continue;
      }
      const auto it = std::find(scope.begin(), scope.end(), v);
      if (it == scope.end()) throw ValidationError("combine: part variable " + std::to_string(v) + " not in scope");
      const auto j = static_cast<std::size_t>(it - scope.begin());
      if (cards[j] != f.cards()[i]) throw ValidationError("combine: cardinality mismatch");
      strides[p * d + j] = own[i];
    }
  }

  const double unit = log_space ? 0.0 : 1.0;
  std::vector<double> out(n);
  std::vector<std::size_t> offset(k, 0);
  std::vector<std::size_t> counter(d, 0);
  std::vector<double> buf(eliminated ? eliminated_card : 0);
  for (std::size_t idx = 0; idx < n; ++idx) {
    if (eliminated) {
      for (std::size_t s = 0; s < eliminated_card; ++s) {
        double v = unit;
        for (std::size_t p = 0; p < k; ++p) {
          const double x = parts[p]->values()[offset[p] + s * elim_stride[p]];
          v = log_space ? v + x : v * x;
        }
        buf[s] = v;
      }
      if (reduction == Reduction::kMax) {
        out[idx] = *std::max_element(buf.begin(), buf.end());
      } else if (log_space) {
        out[idx] = log_sum_exp(buf);
      } else {
        double sum = 0.0;
        for (double x : buf) sum += x;
        out[idx] = sum;
      }
    } else {
      double v = unit;
      for (std::size_t p = 0; p < k; ++p) {
        const double x = parts[p]->values()[offset[p]];
        v = log_space ? v + x : v * x;
      }
      out[idx] = v;
    }
    for (std::size_t j = d; j-- > 0;) {
      ++counter[j];
      for (std::size_t p = 0; p < k; ++p) offset[p] += strides[p * d + j];
      if (counter[j] < cards[j]) break;
      counter[j] = 0;
      for (std::size_t p = 0; p < k; ++p) offset[p] -= strides[p * d + j] * cards[j];
    }
  }
  return Factor(std::vector<VarId>(scope.begin(), scope.end()), std::vector<std::size_t>(cards.begin(), cards.end()),
                std::move(out));
}

Factor reduce(const Factor& f, std::span<const std::int64_t> dense) {
  std::vector<VarId> scope;
  std::vector<std::size_t> cards;
  const auto own = strides_of(f.cards());
  std::size_t base = 0;
  std::vector<std::size_t> kept_strides;
  for (std::size_t i = 0; i < f.scope().size(); ++i) {
    const VarId v = f.scope()[i];
    const std::int64_t s = v < dense.size() ? dense[v] : Assignment::kUnassigned;
    if (s >= 0) {
      if (static_cast<std::size_t>(s) >= f.cards()[i]) throw ValidationError("evidence state out of range");
      base += static_cast<std::size_t>(s) * own[i];
    } else {
      scope.push_back(v);
      cards.push_back(f.cards()[i]);
      kept_strides.push_back(own[i]);
    }
  }
  if (scope.size() == f.scope().size()) return f;
  std::size_t n = 1;
  for (std::size_t c : cards) n *= c;
  std::vector<double> out(n);
  std::vector<std::size_t> counter(scope.size(), 0);
  std::size_t offset = base;
  for (std::size_t idx = 0; idx < n; ++idx) {
    out[idx] = f.values()[offset];
    for (std::size_t j = scope.size(); j-- > 0;) {
      ++counter[j];
      offset += kept_strides[j];
      if (counter[j] < cards[j]) break;
      counter[j] = 0;
      offset -= kept_strides[j] * cards[j];
    }
  }
  return Factor(std::move(scope), std::move(cards), std::move(out));
}

Factor reduce(const Factor& f, const Assignment& evidence) {
  std::vector<std::int64_t> dense;
  for (const auto& [v, s] : evidence) {
    if (!f.contains(v)) continue;
    if (dense.size() <= v) dense.resize(v + 1, Assignment::kUnassigned);
    dense[v] = s;
  }
  return reduce(f, dense);
}

Factor multiply(const Factor& f, const Factor& g, bool log_space) {
  const Factor* parts[] = {&f, &g};
  std::vector<VarId> scope;
  std::vector<std::size_t> cards;
  union_scope(parts, std::nullopt, scope, cards);
  return combine(parts, scope, cards, std::nullopt, 0, Reduction::kSum, log_space,
                 std::numeric_limits<double>::infinity());
}

namespace {

Factor marginalize(const Factor& f, VarId var, Reduction reduction, bool log_space) {
  const auto pos = f.position(var);
  if (!pos) throw ValidationError("variable " + std::to_string(var) + " is not in the factor scope");
  const Factor* parts[] = {&f};
  std::vector<VarId> scope;
  std::vector<std::size_t> cards;
  for (std::size_t i = 0; i < f.scope().size(); ++i) {
    if (i == *pos) continue;
    scope.push_back(f.scope()[i]);
    cards.push_back(f.cards()[i]);
  }
  return combine(parts, scope, cards, var, f.cards()[*pos], reduction, log_space,
                 std::numeric_limits<double>::infinity());
}

}  // namespace

Factor sum_out(const Factor& f, VarId var, bool log_space) {
  return marginalize(f, var, Reduction::kSum, log_space);
}

Factor max_out(const Factor& f, VarId var) { return marginalize(f, var, Reduction::kMax, false); }

Factor reorder(const Factor& f, std::span<const VarId> scope, std::span<const std::size_t> cards) {
  const Factor* parts[] = {&f};
  return combine(parts, scope, cards, std::nullopt, 0, Reduction::kSum, false,
                 std::numeric_limits<double>::infinity());
}

Factor to_log(const Factor& f) {
  std::vector<double> values(f.values());
  for (double& v : values) v = std::log(v);
  return Factor(f.scope(), f.cards(), std::move(values));
}

// ---------------------------------------------------------------------------
// Orders

namespace {

struct InteractionGraph {
  std::size_t n = 0;
  std::vector<char> adj;
  std::vector<std::size_t> degree;
  std::vector<bool> alive;

  InteractionGraph(std::size_t num_vars, std::span<const Factor> factors, std::span<const VarId> instantiated)
      : n(num_vars), adj(n * n, 0), degree(n, 0), alive(n, true) {
    for (VarId v : instantiated) alive.at(v) = false;
    for (const auto& f : factors) {
      for (VarId a : f.scope()) {
        for (VarId b : f.scope()) {
          if (a != b && alive[a] && alive[b]) connect(a, b);
        }
      }
    }
  }

  void connect(VarId a, VarId b) {
    char& e = adj[a * n + b];
    if (!e) {
      e = 1;
      adj[b * n + a] = 1;
      ++degree[a];
      ++degree[b];
    }
  }

  // Cells of the table over `v` and its current neighbours.
  double clique_cells(VarId v, std::span<const std::size_t> cards) const {
    double cells = static_cast<double>(cards[v]);
    for (std::size_t u = 0; u < n; ++u) {
      if (alive[u] && adj[v * n + u]) cells *= static_cast<double>(cards[u]);
    }
    return cells;
  }

  // Removes `v`, connecting its neighbours pairwise. Returns the clique size
  // (v plus neighbours).
  std::size_t eliminate(VarId v) {
    std::vector<VarId> nbrs;
    for (std::size_t u = 0; u < n; ++u) {
      if (alive[u] && adj[v * n + u]) nbrs.push_back(static_cast<VarId>(u));
    }
    for (std::size_t i = 0; i < nbrs.size(); ++i) {
      for (std::size_t j = i + 1; j < nbrs.size(); ++j) connect(nbrs[i], nbrs[j]);
    }
    for (VarId u : nbrs) {
      adj[u * n + v] = adj[v * n + u] = 0;
      --degree[u];
    }
    alive[v] = false;
    degree[v] = 0;
    return nbrs.size() + 1;
  }
};

// Greedy elimination picking the pending variable with the smallest score;
// ties go to the lowest id.
template <typename Score>
EliminationOrder greedy_order(InteractionGraph& g, std::span<const VarId> eliminate, Score score) {
  std::vector<bool> pending(g.n, false);
  std::size_t remaining = 0;
  for (VarId v : eliminate) {
    if (v >= g.n) throw ValidationError("unknown variable " + std::to_string(v));
    if (!g.alive[v] || pending[v]) continue;
    pending[v] = true;
    ++remaining;
  }
  EliminationOrder order;
  order.reserve(remaining);
  while (remaining > 0) {
    VarId best = 0;
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t v = 0; v < g.n; ++v) {
      if (!pending[v]) continue;
      const double sc = score(static_cast<VarId>(v));
      if (sc < best_score) {
        best = static_cast<VarId>(v);
        best_score = sc;
      }
    }
    g.eliminate(best);
    pending[best] = false;
    order.push_back(best);
    --remaining;
  }
  return order;
}

EliminationOrder min_degree_impl(std::size_t n, std::span<const Factor> factors, std::span<const VarId> eliminate,
                                 std::span<const VarId> instantiated) {
  InteractionGraph g(n, factors, instantiated);
  return greedy_order(g, eliminate, [&](VarId v) { return static_cast<double>(g.degree[v]); });
}

EliminationOrder min_weight_impl(std::size_t n, std::span<const Factor> factors, std::span<const std::size_t> cards,
                                 std::span<const VarId> eliminate, std::span<const VarId> instantiated) {
  InteractionGraph g(n, factors, instantiated);
  return greedy_order(g, eliminate, [&](VarId v) { return g.clique_cells(v, cards); });
}

double induced_cells_impl(std::size_t n, std::span<const Factor> factors, std::span<const std::size_t> cards,
                          const EliminationOrder& order, std::span<const VarId> instantiated) {
  InteractionGraph g(n, factors, instantiated);
  double largest = 0.0;
  for (VarId v : order) {
    largest = std::max(largest, g.clique_cells(v, cards));
    g.eliminate(v);
  }
  return largest;
}

}  // namespace

EliminationOrder min_degree_order(const FactorGraph& fg, std::span<const VarId> eliminate,
                                  std::span<const VarId> instantiated) {
  return min_degree_impl(fg.size(), fg.factors, eliminate, instantiated);
}

EliminationOrder min_weight_order(const FactorGraph& fg, std::span<const VarId> eliminate,
                                  std::span<const VarId> instantiated) {
  const auto cards = fg.cardinalities();
  return min_weight_impl(fg.size(), fg.factors, cards, eliminate, instantiated);
}

std::size_t induced_scope_size(const FactorGraph& fg, const EliminationOrder& order,
                               std::span<const VarId> instantiated) {
  InteractionGraph g(fg.size(), fg.factors, instantiated);
  std::size_t largest = 0;
  for (VarId v : order) largest = std::max(largest, g.eliminate(v));
  return largest;
}

double induced_cells(const FactorGraph& fg, const EliminationOrder& order, std::span<const VarId> instantiated) {
  const auto cards = fg.cardinalities();
  return induced_cells_impl(fg.size(), fg.factors, cards, order, instantiated);
}

// ---------------------------------------------------------------------------
// Engine

Engine::Engine(const FactorGraph& fg, EngineOptions options)
    : options_(options), cards_(fg.cardinalities()), factors_of_(fg.size()) {
  factors_.reserve(fg.factors.size());
  for (std::size_t i = 0; i < fg.factors.size(); ++i) {
    const Factor& f = fg.factors[i];
    factors_.push_back(options_.log_space ? to_log(f) : f);
    for (VarId v : f.scope()) {
      if (v >= cards_.size()) throw ValidationError("factor references unknown variable");
      factors_of_[v].push_back(i);
    }
  }
}

EliminationOrder Engine::order_for(std::span<const std::int64_t> instantiated, std::span<const VarId> retain) const {
  std::vector<bool> skip(cards_.size(), false);
  std::vector<VarId> fixed;
  for (std::size_t v = 0; v < cards_.size(); ++v) {
    if (v < instantiated.size() && instantiated[v] >= 0) {
      skip[v] = true;
      fixed.push_back(static_cast<VarId>(v));
    }
  }
  for (VarId v : retain) skip.at(v) = true;
  std::vector<VarId> todo;
  for (std::size_t v = 0; v < cards_.size(); ++v) {
    if (!skip[v]) todo.push_back(static_cast<VarId>(v));
  }
  EliminationOrder order = min_degree_impl(cards_.size(), factors_, todo, fixed);
  const double cells = induced_cells_impl(cards_.size(), factors_, cards_, order, fixed);
  if (cells <= options_.cell_budget) return order;
  // Min-degree ignores cardinalities; on networks with very uneven domains
  // weighting by clique size can stay within the budget where it does not.
  EliminationOrder weighted = min_weight_impl(cards_.size(), factors_, cards_, todo, fixed);
  return induced_cells_impl(cards_.size(), factors_, cards_, weighted, fixed) < cells ? weighted : order;
}

std::vector<Factor> Engine::reduced(std::span<const std::int64_t> instantiated, double& constant) const {
  constant = options_.log_space ? 0.0 : 1.0;
  std::vector<Factor> pool;
  pool.reserve(factors_.size());
  for (const Factor& f : factors_) {
    bool all_fixed = true;
    std::size_t index = 0;
    for (std::size_t i = 0; i < f.scope().size(); ++i) {
      const VarId v = f.scope()[i];
      const std::int64_t s = v < instantiated.size() ? instantiated[v] : Assignment::kUnassigned;
      if (s < 0) {
        all_fixed = false;
        break;
      }
      index = index * f.cards()[i] + static_cast<std::size_t>(s);
    }
    if (all_fixed) {
      const double x = f.values()[index];
      constant = options_.log_space ? constant + x : constant * x;
    } else {
      pool.push_back(reduce(f, instantiated));
    }
  }
  return pool;
}

std::vector<Engine::Slot> Engine::reduced_slots(std::span<const std::int64_t> instantiated,
                                                double& constant) const {
  constant = options_.log_space ? 0.0 : 1.0;
  std::vector<Slot> pool;
  pool.reserve(factors_.size());
  for (const Factor& f : factors_) {
    std::size_t fixed = 0;
    std::size_t index = 0;
    for (std::size_t i = 0; i < f.scope().size(); ++i) {
      const VarId v = f.scope()[i];
      const std::int64_t s = v < instantiated.size() ? instantiated[v] : Assignment::kUnassigned;
      if (s >= 0) {
        ++fixed;
        index = index * f.cards()[i] + static_cast<std::size_t>(s);
      }
    }
    if (fixed == f.scope().size()) {
      const double x = f.values()[index];
      constant = options_.log_space ? constant + x : constant * x;
    } else if (fixed == 0) {
      pool.push_back(Slot::borrow(f));
    } else {
      pool.push_back(Slot::own(reduce(f, instantiated)));
    }
  }
  return pool;
}

void Engine::eliminate_slots(std::vector<Slot>& pool, double& constant, const EliminationOrder& order,
                             EliminationStats* stats) const {
  std::vector<VarId> scope;
  std::vector<std::size_t> cards;
  std::vector<const Factor*> parts;
  std::vector<Slot> next;
  for (VarId v : order) {
    parts.clear();
    for (const Slot& s : pool) {
      if (s.factor->contains(v)) parts.push_back(s.factor);
    }
    if (parts.empty()) {
      const auto c = static_cast<double>(cards_[v]);
      constant = options_.log_space ? constant + std::log(c) : constant * c;
      continue;
    }
    union_scope(parts, v, scope, cards);
    Factor combined = combine(parts, scope, cards, v, cards_[v], Reduction::kSum, options_.log_space,
                              options_.cell_budget);
    if (stats) {
      stats->largest_scope = std::max(stats->largest_scope, scope.size() + 1);
      stats->largest_cells =
          std::max(stats->largest_cells, static_cast<double>(combined.size()) * static_cast<double>(cards_[v]));
    }
    next.clear();
    next.reserve(pool.size());
    for (Slot& s : pool) {
      if (!s.factor->contains(v)) next.push_back(std::move(s));
    }
    if (combined.is_scalar()) {
      const double x = combined.values()[0];
      constant = options_.log_space ? constant + x : constant * x;
    } else {
      next.push_back(Slot::own(std::move(combined)));
    }
    pool.swap(next);
  }
}

JointTable Engine::joint(std::span<const std::int64_t> instantiated, std::span<const VarId> retain,
                         const EliminationOrder& order, EliminationStats* stats) const {
  std::vector<char> role(cards_.size(), 0);  // 1 instantiated, 2 retained, 3 eliminated
  for (std::size_t v = 0; v < cards_.size(); ++v) {
    if (v < instantiated.size() && instantiated[v] >= 0) role[v] = 1;
  }
  for (VarId v : retain) {
    if (v >= cards_.size()) throw ValidationError("unknown retained variable " + std::to_string(v));
    if (role[v] == 1) throw ValidationError("variable " + std::to_string(v) + " is both retained and instantiated");
    if (role[v] == 2) throw ValidationError("variable " + std::to_string(v) + " retained twice");
    role[v] = 2;
  }
  for (VarId v : order) {
    if (v >= cards_.size() || role[v] != 0) {
      throw ValidationError("elimination order lists variable " + std::to_string(v) +
                            " that is retained, instantiated, repeated or unknown");
    }
    role[v] = 3;
  }
  for (std::size_t v = 0; v < cards_.size(); ++v) {
    if (role[v] == 0) throw ValidationError("elimination order misses variable " + std::to_string(v));
  }

  double constant = 0.0;
  std::vector<Slot> pool = reduced_slots(instantiated, constant);
  eliminate_slots(pool, constant, order, stats);

  JointTable table;
  table.log_space = options_.log_space;
  table.scope.assign(retain.begin(), retain.end());
  for (VarId v : retain) table.cards.push_back(cards_[v]);
  std::vector<const Factor*> parts;
  for (const Slot& s : pool) parts.push_back(s.factor);
  Factor result = combine(parts, table.scope, table.cards, std::nullopt, 0, Reduction::kSum, options_.log_space,
                          options_.cell_budget);
  table.values = std::move(result.mutable_values());
  for (double& x : table.values) x = options_.log_space ? x + constant : x * constant;
  if (stats) {
    stats->largest_scope = std::max(stats->largest_scope, table.scope.size());
    stats->largest_cells = std::max(stats->largest_cells, static_cast<double>(table.values.size()));
  }
  return table;
}

double Engine::total(std::span<const std::int64_t> instantiated, const EliminationOrder& order) const {
  double constant = 0.0;
  std::vector<Slot> pool = reduced_slots(instantiated, constant);
  eliminate_slots(pool, constant, order, nullptr);
  if (!pool.empty()) throw ValidationError("elimination order does not cover every free variable");
  return constant;
}

PartialElimination::PartialElimination(const Engine& engine, std::span<const std::int64_t> fixed,
                                       std::span<const VarId> varying, const EliminationOrder& order)
    : engine_(&engine) {
  const std::size_t n = engine.size();
  std::vector<bool> is_varying(n, false);
  for (VarId v : varying) {
    if (v >= n || (v < fixed.size() && fixed[v] >= 0)) {
      throw ValidationError("varying variable " + std::to_string(v) + " is unknown or fixed");
    }
    is_varying[v] = true;
  }
  std::vector<Factor> pool = engine.reduced(fixed, constant_);

  // Factors whose value does not depend on the varying variables are
  // "settled". A step whose bucket holds only settled factors runs now; the
  // rest are replayed per evaluation, together with every factor they use.
  struct Entry {
    std::optional<Factor> settled;
    std::vector<VarId> scope;
  };
  std::vector<Entry> entries;
  for (auto& f : pool) {
    const bool depends = std::any_of(f.scope().begin(), f.scope().end(), [&](VarId v) { return is_varying[v]; });
    Entry e;
    e.scope = f.scope();
    if (depends) {
      live_.push_back(std::move(f));
    } else {
      e.settled = std::move(f);
    }
    entries.push_back(std::move(e));
  }
  const bool log_space = engine.log_space();
  std::vector<VarId> scope;
  std::vector<std::size_t> cards;
  for (VarId v : order) {
    std::vector<std::size_t> idx;
    bool deferred = false;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (std::find(entries[i].scope.begin(), entries[i].scope.end(), v) != entries[i].scope.end()) {
        idx.push_back(i);
        deferred = deferred || !entries[i].settled;
      }
    }
    if (deferred) {
      replay_.push_back(v);
      Entry out;
      for (std::size_t i : idx) {
        for (VarId u : entries[i].scope) {
          if (u != v && std::find(out.scope.begin(), out.scope.end(), u) == out.scope.end()) out.scope.push_back(u);
        }
        // Settled inputs of a replayed step join the evaluation pool.
        if (entries[i].settled) live_.push_back(std::move(*entries[i].settled));
      }
      for (std::size_t k = idx.size(); k-- > 0;) entries.erase(entries.begin() + static_cast<std::ptrdiff_t>(idx[k]));
      entries.push_back(std::move(out));
      continue;
    }
    if (idx.empty()) {
      const auto c = static_cast<double>(engine.cardinalities()[v]);
      constant_ = log_space ? constant_ + std::log(c) : constant_ * c;
      continue;
    }
    std::vector<const Factor*> parts;
    for (std::size_t i : idx) parts.push_back(&*entries[i].settled);
    union_scope(parts, v, scope, cards);
    Factor combined = combine(parts, scope, cards, v, engine.cardinalities()[v], Reduction::kSum, log_space,
                              engine.options().cell_budget);
    for (std::size_t k = idx.size(); k-- > 0;) entries.erase(entries.begin() + static_cast<std::ptrdiff_t>(idx[k]));
    if (combined.is_scalar()) {
      const double x = combined.values()[0];
      constant_ = log_space ? constant_ + x : constant_ * x;
    } else {
      Entry e;
      e.scope = combined.scope();
      e.settled = std::move(combined);
      entries.push_back(std::move(e));
    }
  }
  for (auto& e : entries) {
    if (e.settled) live_.push_back(std::move(*e.settled));
  }
  for (const Factor& f : live_) {
    live_varies_.push_back(
        std::any_of(f.scope().begin(), f.scope().end(), [&](VarId v) { return is_varying[v]; }));
  }
}

double PartialElimination::total(std::span<const std::int64_t> point) const {
  const bool log_space = engine_->log_space();
  double constant = log_space ? 0.0 : 1.0;
  std::vector<Engine::Slot> pool;
  pool.reserve(live_.size());
  for (std::size_t i = 0; i < live_.size(); ++i) {
    if (!live_varies_[i]) {
      pool.push_back(Engine::Slot::borrow(live_[i]));
      continue;
    }
    Factor r = reduce(live_[i], point);
    if (r.is_scalar()) {
      constant = log_space ? constant + r.values()[0] : constant * r.values()[0];
    } else {
      pool.push_back(Engine::Slot::own(std::move(r)));
    }
  }
  engine_->eliminate_slots(pool, constant, replay_, nullptr);
  if (!pool.empty()) throw ValidationError("elimination order does not cover every free variable");
  return log_space ? constant + constant_ : constant * constant_;
}

JointTable eliminate(const FactorGraph& fg, const Assignment& evidence, std::span<const VarId> retain,
                     const std::optional<EliminationOrder>& order, const EngineOptions& options,
                     EliminationStats* stats) {
  evidence.validate(fg.cardinalities());
  const Engine engine(fg, options);
  const auto dense = evidence.dense(fg.size());
  const EliminationOrder chosen = order ? *order : engine.order_for(dense, retain);
  return engine.joint(dense, retain, chosen, stats);
}

// ---------------------------------------------------------------------------
// Brute force

JointTable brute_force_joint(const Network& net, const Assignment& evidence, std::span<const VarId> retain) {
  const auto cards = net.cardinalities();
  evidence.validate(cards);
  std::vector<VarId> free;
  for (std::size_t v = 0; v < net.size(); ++v) {
    if (!evidence.contains(static_cast<VarId>(v))) free.push_back(static_cast<VarId>(v));
  }
  for (VarId v : retain) {
    if (v >= net.size()) throw ValidationError("unknown retained variable");
    if (evidence.contains(v)) throw ValidationError("retained variable is instantiated by evidence");
  }
  if (state_space_size(cards, free) > kBruteForceLimit) {
    throw ResourceError("state space too large for brute-force enumeration");
  }

  JointTable table;
  table.scope.assign(retain.begin(), retain.end());
  for (VarId v : retain) table.cards.push_back(cards[v]);
  std::size_t cells = 1;
  for (std::size_t c : table.cards) cells *= c;
  table.values.assign(cells, 0.0);

  std::vector<State> full(net.size(), 0);
  for (const auto& [v, s] : evidence) full[v] = s;
  while (true) {
    std::size_t index = 0;
    for (std::size_t i = 0; i < retain.size(); ++i) index = index * table.cards[i] + full[retain[i]];
    table.values[index] += net.joint_probability(full);
    std::size_t j = free.size();
    while (j-- > 0) {
      if (++full[free[j]] < cards[free[j]]) break;
      full[free[j]] = 0;
    }
    if (j == static_cast<std::size_t>(-1)) break;
  }
  return table;
}

}  // namespace mfe
