#pragma once

// Random networks and enumeration oracles shared by the test binaries. The
// oracles index CPT tables directly and share no code with the engine.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mfe/convert.hpp"
#include "mfe/model.hpp"
#include "mfe/solvers.hpp"

namespace mfe::test {

struct NetShape {
  std::size_t min_vars = 3;
  std::size_t max_vars = 12;
  std::size_t max_card = 4;
  std::size_t max_parents = 3;
  // Probability that a CPT entry is forced to zero (rows keep one non-zero).
  double zero_rate = 0.0;
  // Keeps the full joint small enough to enumerate.
  double max_joint = 2e5;
};

inline Network random_network(std::uint64_t seed, const NetShape& shape = {}) {
  std::mt19937_64 rng(seed);
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const std::size_t n = pick(shape.min_vars, shape.max_vars);
  std::vector<Variable> vars;
  double joint = 1.0;
  for (std::size_t v = 0; v < n; ++v) {
    std::size_t card = pick(2, shape.max_card);
    while (card > 2 && joint * static_cast<double>(card) > shape.max_joint) --card;
    joint *= static_cast<double>(card);
    Variable var;
    var.id = static_cast<VarId>(v);
    var.name = "v" + std::to_string(v);
    for (std::size_t s = 0; s < card; ++s) var.states.push_back("s" + std::to_string(s));
    vars.push_back(std::move(var));
  }

  std::vector<Cpt> cpts;
  for (std::size_t v = 0; v < n; ++v) {
    Cpt cpt;
    cpt.child = static_cast<VarId>(v);
    // Parents come from earlier variables, so the graph is acyclic.
    std::vector<VarId> pool(v);
    for (std::size_t u = 0; u < v; ++u) pool[u] = static_cast<VarId>(u);
    std::shuffle(pool.begin(), pool.end(), rng);
    const std::size_t k = std::min(pool.size(), pick(0, shape.max_parents));
    cpt.parents.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(cpt.parents.begin(), cpt.parents.end());

    std::size_t rows = 1;
    for (VarId p : cpt.parents) rows *= vars[p].cardinality();
    const std::size_t card = vars[v].cardinality();
    for (std::size_t r = 0; r < rows; ++r) {
      std::vector<double> row(card);
      for (double& x : row) x = unit(rng) < shape.zero_rate ? 0.0 : 0.05 + unit(rng);
      if (std::all_of(row.begin(), row.end(), [](double x) { return x == 0.0; })) row[pick(0, card - 1)] = 1.0;
      double sum = 0.0;
      for (double x : row) sum += x;
      for (double x : row) cpt.table.push_back(x / sum);
    }
    cpts.push_back(std::move(cpt));
  }
  return Network("random" + std::to_string(seed), std::move(vars), std::move(cpts));
}

// Chain-rule product read straight from the CPT tables.
inline double chain_rule(const Network& net, const std::vector<State>& full) {
  double p = 1.0;
  for (const Cpt& cpt : net.cpts()) {
    std::size_t index = 0;
    for (VarId u : cpt.parents) index = index * net.variable(u).cardinality() + full[u];
    index = index * net.variable(cpt.child).cardinality() + full[cpt.child];
    p *= cpt.table[index];
  }
  return p;
}

// Advances `full` to the next state in mixed radix over `free_vars` (last
// varies fastest). Returns false after the final state.
inline bool next_state(const Network& net, const std::vector<VarId>& free_vars, std::vector<State>& full) {
  for (std::size_t i = free_vars.size(); i-- > 0;) {
    const VarId v = free_vars[i];
    if (++full[v] < net.variable(v).cardinality()) return true;
    full[v] = 0;
  }
  return false;
}

// Pr(retain, evidence) over `retain`, last variable fastest.
inline std::vector<double> oracle_joint(const Network& net, const Assignment& evidence,
                                        const std::vector<VarId>& retain) {
  std::vector<VarId> free_vars;
  for (VarId v = 0; v < net.size(); ++v) {
    if (!evidence.contains(v)) free_vars.push_back(v);
  }
  std::size_t cells = 1;
  for (VarId v : retain) cells *= net.variable(v).cardinality();
  std::vector<double> out(cells, 0.0);

  std::vector<State> full(net.size(), 0);
  for (const auto& [v, s] : evidence) full[v] = s;
  do {
    std::size_t index = 0;
    for (VarId v : retain) index = index * net.variable(v).cardinality() + full[v];
    out[index] += chain_rule(net, full);
  } while (next_state(net, free_vars, full));
  return out;
}

// Lowest index attaining the maximum.
inline std::size_t oracle_argmax(const std::vector<double>& values) {
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

inline Assignment oracle_map(const Network& net, const MapQuery& q) {
  const std::vector<double> joint = oracle_joint(net, q.evidence, q.hypothesis);
  std::size_t index = oracle_argmax(joint);
  Assignment a;
  for (std::size_t i = q.hypothesis.size(); i-- > 0;) {
    const std::size_t card = net.variable(q.hypothesis[i]).cardinality();
    a.set(q.hypothesis[i], static_cast<State>(index % card));
    index /= card;
  }
  return a;
}

// Random query: 1..3 hypothesis variables, up to 3 evidence variables with
// states drawn from a forward sample so Pr(e) > 0.
inline MapQuery random_query(const Network& net, std::uint64_t seed, std::size_t max_h = 3, std::size_t max_e = 3) {
  std::mt19937_64 rng(seed);
  std::vector<VarId> order(net.size());
  for (VarId v = 0; v < net.size(); ++v) order[v] = v;
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<State> sample(net.size(), 0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (VarId v : net.topological_order()) {
    const Cpt& cpt = net.cpt(v);
    std::size_t row = 0;
    for (VarId u : cpt.parents) row = row * net.variable(u).cardinality() + sample[u];
    const std::size_t card = net.variable(v).cardinality();
    double r = unit(rng);
    State s = 0;
    for (; s + 1 < card; ++s) {
      r -= cpt.table[row * card + s];
      if (r < 0.0) break;
    }
    while (cpt.table[row * card + s] == 0.0) s = (s + 1) % card;
    sample[v] = s;
  }

  const std::size_t h = std::min<std::size_t>(std::uniform_int_distribution<std::size_t>(1, max_h)(rng), net.size());
  const std::size_t e =
      std::min<std::size_t>(std::uniform_int_distribution<std::size_t>(0, max_e)(rng), net.size() - h);
  MapQuery q;
  q.hypothesis.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(h));
  for (std::size_t i = h; i < h + e; ++i) q.evidence.set(order[i], sample[order[i]]);
  return q;
}

inline Network make_network(const std::vector<std::pair<std::string, std::size_t>>& vars,
                            const std::vector<std::pair<std::vector<VarId>, std::vector<double>>>& cpts) {
  std::vector<Variable> variables;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    Variable v;
    v.id = static_cast<VarId>(i);
    v.name = vars[i].first;
    for (std::size_t s = 0; s < vars[i].second; ++s) v.states.push_back("s" + std::to_string(s));
    variables.push_back(std::move(v));
  }
  std::vector<Cpt> tables;
  for (std::size_t i = 0; i < cpts.size(); ++i) {
    tables.push_back(Cpt{static_cast<VarId>(i), cpts[i].first, cpts[i].second});
  }
  return Network("handmade", std::move(variables), std::move(tables));
}

// Exact intrinsic relevance of `target`: the fraction of completions of the
// other intermediates (uniform measure) for which the argmax over H is not
// the same for every state of `target`.
inline double oracle_relevance(const Network& net, const MapQuery& q, VarId target) {
  std::vector<VarId> others;
  for (VarId v : q.intermediates(net.size())) {
    if (v != target) others.push_back(v);
  }
  std::size_t total = 0;
  std::size_t flips = 0;
  std::vector<State> full(net.size(), 0);
  do {
    MapQuery inner = q;
    for (VarId v : others) inner.evidence.set(v, full[v]);
    std::optional<Assignment> first;
    bool flip = false;
    for (State t = 0; t < net.variable(target).cardinality(); ++t) {
      inner.evidence.set(target, t);
      const Assignment h = oracle_map(net, inner);
      if (!first) first = h;
      flip = flip || h != *first;
    }
    ++total;
    flips += flip ? 1 : 0;
  } while (next_state(net, others, full));
  return static_cast<double>(flips) / static_cast<double>(total);
}

// Six variables: hypothesis A, intermediates T, W1, W2, W3 and evidence
// E = s1. E agrees with A == T nine times out of ten, so T decides the MAP
// state of A whatever the rest; W1 -> W2 is disconnected from A.
struct Constructed {
  Network net;
  MapQuery query;
  VarId decisive = 1;
  VarId separated = 3;
  VarId separated_child = 4;
};

inline Constructed constructed_network() {
  Network net = make_network({{"A", 2}, {"T", 2}, {"E", 2}, {"W1", 2}, {"W2", 2}, {"W3", 2}},
                             {{{}, {0.5, 0.5}},
                              {{}, {0.5, 0.5}},
                              {{0, 1}, {0.1, 0.9, 0.9, 0.1, 0.9, 0.1, 0.1, 0.9}},
                              {{}, {0.3, 0.7}},
                              {{3}, {0.6, 0.4, 0.2, 0.8}},
                              {{0}, {0.6, 0.4, 0.4, 0.6}}});
  return Constructed{std::move(net), MapQuery{{0}, Assignment{{2, 1}}}};
}

inline std::filesystem::path data_dir() { return MFE_DATA_DIR; }
inline std::filesystem::path protocol_dir() { return MFE_PROTOCOL_DIR; }

}  // namespace mfe::test
