#include "doctest.h"

#include <cmath>
#include <algorithm>

#include "mfe/bench.hpp"
#include "mfe/bif.hpp"
#include "mfe/convert.hpp"
#include "mfe/errors.hpp"
#include "mfe/solvers.hpp"
#include "support.hpp"

using namespace mfe;

namespace {

Partition all_irrelevant(const MapQuery& q, std::size_t n) { return Partition{{}, q.intermediates(n)}; }
Partition all_relevant(const MapQuery& q, std::size_t n) { return Partition{q.intermediates(n), {}}; }

// Distinct argmaxes over H of Pr(h, i, e), one per completion i of the
// irrelevant set.
std::vector<Assignment> per_sample_argmaxes(const Network& net, const MapQuery& q,
                                            const std::vector<VarId>& irrelevant) {
  std::vector<Assignment> out;
  std::vector<State> full(net.size(), 0);
  do {
    MapQuery inner = q;
    for (VarId v : irrelevant) inner.evidence.set(v, full[v]);
    Assignment h = mfe::test::oracle_map(net, inner);
    if (std::find(out.begin(), out.end(), h) == out.end()) out.push_back(std::move(h));
  } while (mfe::test::next_state(net, irrelevant, full));
  return out;
}

}  // namespace

TEST_CASE("exact MAP on a single binary variable") {
  const Network net = mfe::test::make_network({{"a", 2}}, {{{}, {0.3, 0.7}}});
  const MapResult r = exact_map(to_factor_graph(net), MapQuery{{0}, {}});
  CHECK(r.explanation == Assignment{{0, 1}});
  CHECK(r.score == doctest::Approx(0.7));
  CHECK(r.log_score == doctest::Approx(std::log(0.7)));
  CHECK(r.solver == "map");
}

TEST_CASE("exact MAP equals the enumeration argmax") {
  for (std::uint64_t seed = 0; seed < 120; ++seed) {
    mfe::test::NetShape shape;
    shape.zero_rate = seed % 4 == 0 ? 0.3 : 0.0;
    const Network net = mfe::test::random_network(seed, shape);
    const MapQuery q = mfe::test::random_query(net, seed + 1000);
    const MapResult r = exact_map(to_factor_graph(net), q);
    CHECK(r.explanation == mfe::test::oracle_map(net, q));
    const auto joint = mfe::test::oracle_joint(net, q.evidence, q.hypothesis);
    CHECK(r.score == doctest::Approx(joint[mfe::test::oracle_argmax(joint)]).epsilon(1e-12));
  }
}

TEST_CASE("exact MAP ties go to the lowest index") {
  const Network net = mfe::test::make_network({{"a", 2}, {"b", 2}}, {{{}, {0.5, 0.5}}, {{}, {0.5, 0.5}}});
  CHECK(exact_map(to_factor_graph(net), MapQuery{{1, 0}, {}}).explanation == Assignment{{0, 0}, {1, 0}});
}

TEST_CASE("exact MAP in log space agrees with linear space") {
  for (std::uint64_t seed = 50; seed < 80; ++seed) {
    const Network net = mfe::test::random_network(seed);
    const FactorGraph fg = to_factor_graph(net);
    const MapQuery q = mfe::test::random_query(net, seed);
    const MapResult lin = exact_map(fg, q, SolverOptions{LogMode::kOff});
    const MapResult lg = exact_map(fg, q, SolverOptions{LogMode::kOn});
    CHECK(lin.explanation == lg.explanation);
    CHECK(lg.log_space);
    CHECK(lin.log_score == doctest::Approx(lg.log_score).epsilon(1e-10));
  }
}

TEST_CASE("exact MAP respects the cell budget") {
  const Network hail = load_bif(mfe::test::data_dir() / "hailfinder.bif");
  const FactorGraph fg = to_factor_graph(hail);
  const MapQuery q{resolve_hypothesis(hail, "roots:10"), {}};
  CHECK_THROWS_AS(exact_map(fg, q, SolverOptions{LogMode::kAuto, 1000}), ResourceError);
}

TEST_CASE("query validation") {
  const FactorGraph fg = to_factor_graph(mfe::test::random_network(4));
  CHECK_THROWS_AS(exact_map(fg, MapQuery{{}, {}}), ValidationError);
  CHECK_THROWS_AS(exact_map(fg, MapQuery{{0, 0}, {}}), ValidationError);
  CHECK_THROWS_AS(exact_map(fg, MapQuery{{0}, Assignment{{0, 0}}}), ValidationError);
  CHECK_THROWS_AS(exact_map(fg, MapQuery{{99}, {}}), ValidationError);
  CHECK_THROWS_AS(exact_map(fg, MapQuery{{0}, Assignment{{1, 9}}}), ValidationError);
}

TEST_CASE("schedule validation and shape") {
  AnnealSchedule s;
  CHECK_NOTHROW(s.validate());
  CHECK(s.levels() == 44);
  CHECK(default_schedule(5).steps_per_temperature == 50);
  s.cooling_rate = 1.0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = {};
  s.initial_temperature = 0.0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = {};
  s.steps_per_temperature = 0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = {};
  s.min_temperature = -1.0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
}

TEST_CASE("annealing finds the optimum of a single binary variable") {
  const Network net = mfe::test::make_network({{"a", 2}}, {{{}, {0.3, 0.7}}});
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const MapResult r = annealed_map(to_factor_graph(net), MapQuery{{0}, {}}, default_schedule(1), seed);
    CHECK(r.explanation == Assignment{{0, 1}});
    CHECK(r.solver == "ann");
  }
}

TEST_CASE("annealing is deterministic and stays close to exact MAP") {
  double total = 0.0;
  const std::size_t trials = 200;
  for (std::uint64_t seed = 0; seed < trials; ++seed) {
    mfe::test::NetShape shape;
    shape.min_vars = shape.max_vars = 8;
    const Network net = mfe::test::random_network(seed + 5000, shape);
    const FactorGraph fg = to_factor_graph(net);
    const MapQuery q = mfe::test::random_query(net, seed, 3, 3);
    const MapResult a = annealed_map(fg, q, default_schedule(q.hypothesis.size()), seed);
    if (seed < 20) CHECK(annealed_map(fg, q, default_schedule(q.hypothesis.size()), seed).explanation == a.explanation);
    total += static_cast<double>(hamming(a.explanation, exact_map(fg, q).explanation));
    CHECK(a.score <= exact_map(fg, q).score * (1 + 1e-12));
  }
  CHECK(total / trials <= 0.3);
}

TEST_CASE("partition validation") {
  const Network net = mfe::test::random_network(9);
  const MapQuery q = mfe::test::random_query(net, 9);
  const auto inter = q.intermediates(net.size());
  CHECK_NOTHROW(all_irrelevant(q, net.size()).validate(q, net.size()));
  if (!inter.empty()) {
    CHECK_THROWS_AS((Partition{{inter[0]}, inter}.validate(q, net.size())), ValidationError);
    CHECK_THROWS_AS((Partition{{}, {inter.begin() + 1, inter.end()}}.validate(q, net.size())), ValidationError);
  }
  CHECK_THROWS_AS((Partition{{q.hypothesis[0]}, inter}.validate(q, net.size())), ValidationError);
}

TEST_CASE("sampled MFE with nothing to sample is exact MAP") {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const Network net = mfe::test::random_network(seed + 700);
    const FactorGraph fg = to_factor_graph(net);
    const MapQuery q = mfe::test::random_query(net, seed);
    const MapResult m = sampled_mfe(fg, q, all_relevant(q, net.size()), MfeOptions{}, seed);
    const MapResult e = exact_map(fg, q);
    CHECK(m.explanation == e.explanation);
    CHECK(m.score == doctest::Approx(e.score).epsilon(1e-12));
    CHECK(m.solver == "mfe");
  }
}

TEST_CASE("every sampled MFE answer is the argmax for some irrelevant completion") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    mfe::test::NetShape shape;
    shape.max_vars = 8;
    const Network net = mfe::test::random_network(seed + 900, shape);
    const FactorGraph fg = to_factor_graph(net);
    const MapQuery q = mfe::test::random_query(net, seed, 2, 2);
    const Partition part = all_irrelevant(q, net.size());
    const auto candidates = per_sample_argmaxes(net, q, part.irrelevant);
    for (std::size_t n : {1, 5}) {
      MfeOptions opts;
      opts.samples = n;
      const MapResult r = sampled_mfe(fg, q, part, opts, seed);
      CHECK(std::find(candidates.begin(), candidates.end(), r.explanation) != candidates.end());
      // The mode is at least as frequent as the average distinct answer.
      CHECK(std::stoul(r.meta.at("tally")) * std::stoul(r.meta.at("distinct")) >= n);
      if (candidates.size() == 1) CHECK(r.explanation == *candidates.begin());
    }
  }
}

TEST_CASE("sampled MFE reports its score as Pr(h, e)") {
  const Network net = mfe::test::random_network(17);
  const FactorGraph fg = to_factor_graph(net);
  const MapQuery q = mfe::test::random_query(net, 17);
  MfeOptions opts;
  opts.samples = 7;
  const MapResult r = sampled_mfe(fg, q, all_irrelevant(q, net.size()), opts, 3);
  const auto joint = mfe::test::oracle_joint(net, q.evidence, q.hypothesis);
  std::size_t index = 0;
  for (VarId h : q.hypothesis) index = index * net.variable(h).cardinality() + r.explanation.at(h);
  CHECK(r.score == doctest::Approx(joint[index]).epsilon(1e-12));
  CHECK(r.meta.at("samples") == "7");
  CHECK(r.meta.at("inner") == "exact");
  CHECK(sampled_mfe(fg, q, all_irrelevant(q, net.size()), opts, 3).explanation == r.explanation);
}

TEST_CASE("annealing inner solver is tagged and recorded") {
  const Network net = mfe::test::random_network(21);
  const FactorGraph fg = to_factor_graph(net);
  const MapQuery q = mfe::test::random_query(net, 21);
  MfeOptions opts;
  opts.inner = InnerSolver::kAnneal;
  opts.samples = 3;
  const MapResult r = sampled_mfe(fg, q, all_irrelevant(q, net.size()), opts, 5);
  CHECK(r.solver == "mfe+a");
  CHECK(r.meta.at("inner") == "anneal");
  CHECK(r.meta.at("schedule") == default_schedule(q.hypothesis.size()).describe());
  CHECK(std::stoul(r.meta.at("evaluations")) > 0);
}

TEST_CASE("prior sampling measure is accepted and deterministic") {
  const Network net = mfe::test::random_network(23);
  const FactorGraph fg = to_factor_graph(net);
  const MapQuery q = mfe::test::random_query(net, 23);
  MfeOptions opts;
  opts.measure = SamplingMeasure::kPrior;
  opts.samples = 4;
  const MapResult a = sampled_mfe(fg, q, all_irrelevant(q, net.size()), opts, 8);
  CHECK(a.meta.at("measure") == "prior");
  CHECK(sampled_mfe(fg, q, all_irrelevant(q, net.size()), opts, 8).explanation == a.explanation);
  opts.samples = 0;
  CHECK_THROWS_AS(sampled_mfe(fg, q, all_irrelevant(q, net.size()), opts, 8), ValidationError);
}
