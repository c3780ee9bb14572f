#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mfe {

using VarId = std::uint32_t;
using State = std::uint32_t;

struct Variable {
  VarId id = 0;
  std::string name;
  std::vector<std::string> states;

  std::size_t cardinality() const noexcept { return states.size(); }
  std::optional<State> state_index(std::string_view label) const;
};

// Conditional probability table Pr(child | parents). Rows are parent
// configurations with the last parent varying fastest; within a row the
// child state varies fastest. This is exactly the value layout of a Factor
// with scope (parents..., child).
struct Cpt {
  VarId child = 0;
  std::vector<VarId> parents;
  std::vector<double> table;
};

// Joint value assignment to a set of variables, kept sorted by variable id.
class Assignment {
 public:
  using Entry = std::pair<VarId, State>;

  Assignment() = default;
  Assignment(std::initializer_list<Entry> entries);

  void set(VarId var, State state);
  void erase(VarId var);
  std::optional<State> get(VarId var) const;
  bool contains(VarId var) const { return get(var).has_value(); }
  State at(VarId var) const;

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }

  std::vector<VarId> variables() const;
  Assignment restricted_to(std::span<const VarId> vars) const;

  // Union of two assignments. Throws ValidationError if they disagree on a
  // shared variable.
  Assignment merged(const Assignment& other) const;

  // Throws ValidationError if a variable is unknown or a state is out of
  // range for the given cardinalities (indexed by variable id).
  void validate(std::span<const std::size_t> cardinalities) const;

  // Dense form: vector indexed by variable id, kUnassigned where absent.
  static constexpr std::int64_t kUnassigned = -1;
  std::vector<std::int64_t> dense(std::size_t num_vars) const;

  friend bool operator==(const Assignment&, const Assignment&) = default;

 private:
  std::vector<Entry> entries_;
};

class Network {
 public:
  Network() = default;
  // Validates every invariant: unique names and labels, one CPT per
  // variable, table sizes, row stochasticity, acyclicity.
  Network(std::string name, std::vector<Variable> variables, std::vector<Cpt> cpts);

  const std::string& name() const noexcept { return name_; }
  std::size_t size() const noexcept { return variables_.size(); }
  const std::vector<Variable>& variables() const noexcept { return variables_; }
  const Variable& variable(VarId id) const { return variables_.at(id); }
  const std::vector<Cpt>& cpts() const noexcept { return cpts_; }
  const Cpt& cpt(VarId child) const { return cpts_.at(child); }

  std::optional<VarId> find(std::string_view name) const;
  const std::vector<VarId>& children(VarId id) const { return children_.at(id); }
  const std::vector<VarId>& topological_order() const noexcept { return topo_; }
  std::vector<std::size_t> cardinalities() const;

  std::size_t arc_count() const noexcept;
  std::size_t max_in_degree() const noexcept;
  // Roots and leaves in declaration order.
  std::vector<VarId> roots() const;
  std::vector<VarId> leaves() const;

  // Chain-rule probability of a full assignment (one state per variable).
  double joint_probability(std::span<const State> full) const;

 private:
  std::string name_;
  std::vector<Variable> variables_;
  std::vector<Cpt> cpts_;
  std::vector<std::vector<VarId>> children_;
  std::vector<VarId> topo_;
};

// Dense table over an ordered scope; the last scope variable varies fastest.
class Factor {
 public:
  // Scalar factor holding `value`.
  explicit Factor(double value = 1.0) : values_{value} {}
  Factor(std::vector<VarId> scope, std::vector<std::size_t> cards, std::vector<double> values);

  const std::vector<VarId>& scope() const noexcept { return scope_; }
  const std::vector<std::size_t>& cards() const noexcept { return cards_; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::vector<double>& mutable_values() noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool is_scalar() const noexcept { return scope_.empty(); }

  std::optional<std::size_t> position(VarId var) const;
  bool contains(VarId var) const { return position(var).has_value(); }

  // Value at the point given by a dense assignment covering the scope.
  double at(std::span<const std::int64_t> dense) const;
  double at(std::span<const State> full) const;

  friend bool operator==(const Factor&, const Factor&) = default;

 private:
  std::vector<VarId> scope_;
  std::vector<std::size_t> cards_;
  std::vector<double> values_;
};

struct FactorGraph {
  std::vector<Variable> variables;
  std::vector<Factor> factors;

  std::size_t size() const noexcept { return variables.size(); }
  std::vector<std::size_t> cardinalities() const;
  // Throws ValidationError when a variable is in no scope, a scope variable
  // is unknown, cardinalities disagree, or a value is negative.
  void validate() const;

  friend bool operator==(const FactorGraph&, const FactorGraph&) = default;
};

// Product of the number of states over `vars`, as a double so huge spaces
// do not overflow.
double state_space_size(std::span<const std::size_t> cardinalities, std::span<const VarId> vars);

// Mixed-radix helpers over an ordered variable list, first variable most
// significant.
std::size_t linear_index(std::span<const std::size_t> cards, std::span<const State> states);
std::vector<State> unravel_index(std::span<const std::size_t> cards, std::size_t index);

}  // namespace mfe
