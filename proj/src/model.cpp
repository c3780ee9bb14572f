#include "mfe/model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <unordered_set>

#include "mfe/errors.hpp"

namespace mfe {

std::optional<State> Variable::state_index(std::string_view label) const {
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i] == label) return static_cast<State>(i);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Assignment

Assignment::Assignment(std::initializer_list<Entry> entries) {
  for (const auto& [var, state] : entries) {
    if (contains(var)) throw ValidationError("duplicate variable " + std::to_string(var) + " in assignment");
    set(var, state);
  }
}

void Assignment::set(VarId var, State state) {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), var,
                             [](const Entry& e, VarId v) { return e.first < v; });
  if (it != entries_.end() && it->first == var) {
    it->second = state;
  } else {
    entries_.insert(it, {var, state});
  }
}

void Assignment::erase(VarId var) {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), var,
                             [](const Entry& e, VarId v) { return e.first < v; });
  if (it != entries_.end() && it->first == var) entries_.erase(it);
}

std::optional<State> Assignment::get(VarId var) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), var,
                             [](const Entry& e, VarId v) { return e.first < v; });
  if (it != entries_.end() && it->first == var) return it->second;
  return std::nullopt;
}

State Assignment::at(VarId var) const {
  auto s = get(var);
  if (!s) throw ValidationError("variable " + std::to_string(var) + " not assigned");
  return *s;
}

std::vector<VarId> Assignment::variables() const {
  std::vector<VarId> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.first);
  return out;
}

Assignment Assignment::restricted_to(std::span<const VarId> vars) const {
  Assignment out;
  for (VarId v : vars) {
    if (auto s = get(v)) out.set(v, *s);
  }
  return out;
}

Assignment Assignment::merged(const Assignment& other) const {
  Assignment out = *this;
  for (const auto& [var, state] : other) {
    if (auto mine = get(var); mine && *mine != state) {
      throw ValidationError("conflicting states for variable " + std::to_string(var));
    }
    out.set(var, state);
  }
  return out;
}

void Assignment::validate(std::span<const std::size_t> cardinalities) const {
  for (const auto& [var, state] : entries_) {
    if (var >= cardinalities.size()) {
      throw ValidationError("unknown variable id " + std::to_string(var));
    }
    if (state >= cardinalities[var]) {
      throw ValidationError("state " + std::to_string(state) + " out of range for variable " +
                            std::to_string(var));
    }
  }
}

std::vector<std::int64_t> Assignment::dense(std::size_t num_vars) const {
  std::vector<std::int64_t> out(num_vars, kUnassigned);
  for (const auto& [var, state] : entries_) {
    if (var >= num_vars) throw ValidationError("unknown variable id " + std::to_string(var));
    out[var] = state;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Network

Network::Network(std::string name, std::vector<Variable> variables, std::vector<Cpt> cpts)
    : name_(std::move(name)), variables_(std::move(variables)) {
  const std::size_t n = variables_.size();
  std::unordered_set<std::string> names;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& v = variables_[i];
    if (v.id != i) throw ValidationError("variable '" + v.name + "' has id out of declaration order");
    if (!names.insert(v.name).second) throw ValidationError("duplicate variable '" + v.name + "'");
    if (v.cardinality() < 2) throw ValidationError("variable '" + v.name + "' needs at least two states");
    std::unordered_set<std::string> labels(v.states.begin(), v.states.end());
    if (labels.size() != v.states.size()) {
      throw ValidationError("duplicate state label in variable '" + v.name + "'");
    }
  }

  cpts_.resize(n);
  std::vector<bool> seen(n, false);
  for (auto& cpt : cpts) {
    if (cpt.child >= n) throw ValidationError("CPT for unknown variable id " + std::to_string(cpt.child));
    if (seen[cpt.child]) throw ValidationError("duplicate CPT for '" + variables_[cpt.child].name + "'");
    seen[cpt.child] = true;
    cpts_[cpt.child] = std::move(cpt);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!seen[i]) throw ValidationError("missing CPT for '" + variables_[i].name + "'");
  }

  children_.assign(n, {});
  for (const auto& cpt : cpts_) {
    const auto& child = variables_[cpt.child];
    std::size_t rows = 1;
    std::unordered_set<VarId> parent_set;
    for (VarId p : cpt.parents) {
      if (p >= n) throw ValidationError("unknown parent of '" + child.name + "'");
      if (p == cpt.child) throw ValidationError("'" + child.name + "' is its own parent");
      if (!parent_set.insert(p).second) throw ValidationError("repeated parent of '" + child.name + "'");
      rows *= variables_[p].cardinality();
      children_[p].push_back(cpt.child);
    }
    const std::size_t k = child.cardinality();
    if (cpt.table.size() != rows * k) {
      throw ValidationError("CPT of '" + child.name + "' has " + std::to_string(cpt.table.size()) +
                            " entries, expected " + std::to_string(rows * k));
    }
    for (std::size_t r = 0; r < rows; ++r) {
      double sum = 0.0;
      for (std::size_t s = 0; s < k; ++s) {
        const double p = cpt.table[r * k + s];
        if (!(p >= 0.0 && p <= 1.0)) {
          throw ValidationError("CPT of '" + child.name + "' has entry outside [0, 1]");
        }
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-9) {
        throw ValidationError("CPT row of '" + child.name + "' sums to " + std::to_string(sum));
      }
    }
  }
  for (auto& c : children_) std::sort(c.begin(), c.end());

  // Kahn's algorithm, lowest id first among ready variables.
  std::vector<std::size_t> pending(n);
  for (std::size_t i = 0; i < n; ++i) pending[i] = cpts_[i].parents.size();
  std::vector<VarId> ready;
  for (std::size_t i = 0; i < n; ++i) {
    if (pending[i] == 0) ready.push_back(static_cast<VarId>(i));
  }
  std::make_heap(ready.begin(), ready.end(), std::greater<>{});
  while (!ready.empty()) {
    std::pop_heap(ready.begin(), ready.end(), std::greater<>{});
    const VarId v = ready.back();
    ready.pop_back();
    topo_.push_back(v);
    for (VarId c : children_[v]) {
      if (--pending[c] == 0) {
        ready.push_back(c);
        std::push_heap(ready.begin(), ready.end(), std::greater<>{});
      }
    }
  }
  if (topo_.size() != n) throw ValidationError("network '" + name_ + "' contains a directed cycle");
}

std::optional<VarId> Network::find(std::string_view name) const {
  for (const auto& v : variables_) {
    if (v.name == name) return v.id;
  }
  return std::nullopt;
}

std::vector<std::size_t> Network::cardinalities() const {
  std::vector<std::size_t> out;
  out.reserve(variables_.size());
  for (const auto& v : variables_) out.push_back(v.cardinality());
  return out;
}

std::size_t Network::arc_count() const noexcept {
  std::size_t arcs = 0;
  for (const auto& cpt : cpts_) arcs += cpt.parents.size();
  return arcs;
}

std::size_t Network::max_in_degree() const noexcept {
  std::size_t best = 0;
  for (const auto& cpt : cpts_) best = std::max(best, cpt.parents.size());
  return best;
}

std::vector<VarId> Network::roots() const {
  std::vector<VarId> out;
  for (const auto& cpt : cpts_) {
    if (cpt.parents.empty()) out.push_back(cpt.child);
  }
  return out;
}

std::vector<VarId> Network::leaves() const {
  std::vector<VarId> out;
  for (std::size_t i = 0; i < children_.size(); ++i) {
    if (children_[i].empty()) out.push_back(static_cast<VarId>(i));
  }
  return out;
}

double Network::joint_probability(std::span<const State> full) const {
  if (full.size() != variables_.size()) throw ValidationError("full assignment has wrong length");
  double p = 1.0;
  for (const auto& cpt : cpts_) {
    std::size_t row = 0;
    for (VarId parent : cpt.parents) row = row * variables_[parent].cardinality() + full[parent];
    p *= cpt.table[row * variables_[cpt.child].cardinality() + full[cpt.child]];
  }
  return p;
}

// ---------------------------------------------------------------------------
// Factor

Factor::Factor(std::vector<VarId> scope, std::vector<std::size_t> cards, std::vector<double> values)
    : scope_(std::move(scope)), cards_(std::move(cards)), values_(std::move(values)) {
  if (scope_.size() != cards_.size()) throw ValidationError("factor scope and cardinality lengths differ");
  for (std::size_t i = 0; i < scope_.size(); ++i) {
    for (std::size_t j = i + 1; j < scope_.size(); ++j) {
      if (scope_[i] == scope_[j]) throw ValidationError("factor scope repeats a variable");
    }
  }
  std::size_t expected = 1;
  for (std::size_t c : cards_) {
    if (c == 0) throw ValidationError("factor variable with zero states");
    expected *= c;
  }
  if (values_.size() != expected) {
    throw ValidationError("factor has " + std::to_string(values_.size()) + " values, expected " +
                          std::to_string(expected));
  }
}

std::optional<std::size_t> Factor::position(VarId var) const {
  for (std::size_t i = 0; i < scope_.size(); ++i) {
    if (scope_[i] == var) return i;
  }
  return std::nullopt;
}

double Factor::at(std::span<const std::int64_t> dense) const {
  std::size_t index = 0;
  for (std::size_t i = 0; i < scope_.size(); ++i) {
    const std::int64_t s = dense[scope_[i]];
    if (s < 0) throw ValidationError("factor evaluated at a point missing variable " + std::to_string(scope_[i]));
    index = index * cards_[i] + static_cast<std::size_t>(s);
  }
  return values_[index];
}

double Factor::at(std::span<const State> full) const {
  std::size_t index = 0;
  for (std::size_t i = 0; i < scope_.size(); ++i) index = index * cards_[i] + full[scope_[i]];
  return values_[index];
}

// ---------------------------------------------------------------------------
// FactorGraph

std::vector<std::size_t> FactorGraph::cardinalities() const {
  std::vector<std::size_t> out;
  out.reserve(variables.size());
  for (const auto& v : variables) out.push_back(v.cardinality());
  return out;
}

void FactorGraph::validate() const {
  std::vector<bool> covered(variables.size(), false);
  for (std::size_t i = 0; i < variables.size(); ++i) {
    if (variables[i].id != i) throw ValidationError("factor graph variable ids must be dense");
  }
  for (const auto& f : factors) {
    for (std::size_t i = 0; i < f.scope().size(); ++i) {
      const VarId v = f.scope()[i];
      if (v >= variables.size()) throw ValidationError("factor references unknown variable " + std::to_string(v));
      if (f.cards()[i] != variables[v].cardinality()) {
        throw ValidationError("cardinality mismatch for variable " + std::to_string(v));
      }
      covered[v] = true;
    }
    for (double x : f.values()) {
      if (!(x >= 0.0)) throw ValidationError("factor holds a negative or NaN value");
    }
  }
  for (std::size_t i = 0; i < covered.size(); ++i) {
    if (!covered[i]) throw ValidationError("variable " + std::to_string(i) + " appears in no factor");
  }
}

double state_space_size(std::span<const std::size_t> cardinalities, std::span<const VarId> vars) {
  double size = 1.0;
  for (VarId v : vars) size *= static_cast<double>(cardinalities[v]);
  return size;
}

std::size_t linear_index(std::span<const std::size_t> cards, std::span<const State> states) {
  std::size_t index = 0;
  for (std::size_t i = 0; i < cards.size(); ++i) index = index * cards[i] + states[i];
  return index;
}

std::vector<State> unravel_index(std::span<const std::size_t> cards, std::size_t index) {
  std::vector<State> out(cards.size());
  for (std::size_t i = cards.size(); i-- > 0;) {
    out[i] = static_cast<State>(index % cards[i]);
    index /= cards[i];
  }
  return out;
}

}  // namespace mfe
