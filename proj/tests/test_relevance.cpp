#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>

#include "mfe/bench.hpp"
#include "mfe/bif.hpp"
#include "mfe/convert.hpp"
#include "mfe/errors.hpp"
#include "mfe/relevance.hpp"
#include "support.hpp"

using namespace mfe;

TEST_CASE("d-separated intermediates never flip the argmax") {
  const auto c = mfe::test::constructed_network();
  const FactorGraph fg = to_factor_graph(c.net);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    CHECK(estimate_relevance(fg, c.query, c.separated, 1000, seed).flips == 0);
    CHECK(estimate_relevance(fg, c.query, c.separated_child, 1000, seed).relevance == 0.0);
  }
  CHECK(mfe::test::oracle_relevance(c.net, c.query, c.separated) == 0.0);
}

TEST_CASE("a decisive intermediate always flips the argmax") {
  const auto c = mfe::test::constructed_network();
  const FactorGraph fg = to_factor_graph(c.net);
  CHECK(mfe::test::oracle_relevance(c.net, c.query, c.decisive) == 1.0);
  const RelevanceEstimate e = estimate_relevance(fg, c.query, c.decisive, 1000, 1);
  CHECK(e.flips == 1000);
  CHECK(e.relevance == 1.0);
  CHECK(e.variable == c.decisive);
}

TEST_CASE("sampled relevance converges to the enumerated value") {
  std::size_t within = 0;
  const std::size_t trials = 30;
  for (std::uint64_t seed = 0; seed < trials; ++seed) {
    mfe::test::NetShape shape;
    shape.max_vars = 8;
    shape.max_card = 3;
    const Network net = mfe::test::random_network(seed + 3000, shape);
    const MapQuery q = mfe::test::random_query(net, seed, 2, 2);
    const auto inter = q.intermediates(net.size());
    if (inter.empty()) {
      ++within;
      continue;
    }
    const VarId target = inter[seed % inter.size()];
    const double exact = mfe::test::oracle_relevance(net, q, target);
    const double est = estimate_relevance(to_factor_graph(net), q, target, 1000, seed).relevance;
    within += std::abs(est - exact) <= 0.05 ? 1 : 0;
  }
  CHECK(within >= trials - 1);
}

TEST_CASE("large hypothesis spaces use the traceback argmax consistently") {
  mfe::test::NetShape shape;
  shape.min_vars = shape.max_vars = 15;
  shape.max_card = 2;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Network net = mfe::test::random_network(seed + 4000, shape);
    MapQuery q;
    // 13 binary hypothesis variables exceed the direct enumeration limit.
    for (VarId v = 0; v < 13; ++v) q.hypothesis.push_back(v);
    REQUIRE(std::pow(2.0, 13) > kDirectArgmaxLimit);
    const double exact = mfe::test::oracle_relevance(net, q, 13);
    // With one other binary intermediate every sample is one of two cases.
    const double est = estimate_relevance(to_factor_graph(net), q, 13, 400, seed).relevance;
    CHECK(std::abs(est - exact) <= 0.1);
    if (exact == 0.0 || exact == 1.0) CHECK(est == exact);
  }
}

TEST_CASE("relevance is deterministic given the seed") {
  const Network net = mfe::test::random_network(77);
  const FactorGraph fg = to_factor_graph(net);
  const MapQuery q = mfe::test::random_query(net, 77);
  const auto inter = q.intermediates(net.size());
  REQUIRE_FALSE(inter.empty());
  CHECK(estimate_relevance(fg, q, inter[0], 200, 4).flips == estimate_relevance(fg, q, inter[0], 200, 4).flips);
  RelevanceOptions serial;
  serial.jobs = 1;
  RelevanceOptions threaded;
  threaded.jobs = 4;
  CHECK(write_table(precompute_table(fg, q, 50, 9, serial)) == write_table(precompute_table(fg, q, 50, 9, threaded)));
}

TEST_CASE("relevance rejects invalid targets") {
  const auto c = mfe::test::constructed_network();
  const FactorGraph fg = to_factor_graph(c.net);
  CHECK_THROWS_AS(estimate_relevance(fg, c.query, 0, 10, 1), ValidationError);
  CHECK_THROWS_AS(estimate_relevance(fg, c.query, 2, 10, 1), ValidationError);
  CHECK_THROWS_AS(estimate_relevance(fg, c.query, c.decisive, 0, 1), ValidationError);
}

TEST_CASE("tables cover every intermediate and drive the partition") {
  const auto c = mfe::test::constructed_network();
  const FactorGraph fg = to_factor_graph(c.net);
  const RelevanceTable t = precompute_table(fg, c.query, 200, 3);
  CHECK(t.estimates.size() == 4);
  CHECK(t.network_hash == content_hash(fg));
  CHECK(t.find(c.decisive)->relevance == 1.0);
  CHECK(t.find(c.separated)->relevance == 0.0);
  CHECK(t.find(0) == nullptr);
  CHECK_FALSE(t.low_budget());

  const Partition p = partition_from_table(t, c.query, c.net.size(), 0.1);
  CHECK(p.relevant == std::vector<VarId>{c.decisive});
  CHECK_NOTHROW(p.validate(c.query, c.net.size()));
  CHECK(partition_from_table(t, c.query, c.net.size(), 0.0).irrelevant.empty());
  CHECK_THROWS_AS(partition_from_table(t, c.query, c.net.size(), 1.5), ValidationError);

  MapQuery other = c.query;
  other.evidence.set(2, 0);
  CHECK_THROWS_AS(partition_from_table(t, other, c.net.size(), 0.1), ValidationError);
  other = c.query;
  other.hypothesis = {5};
  CHECK_THROWS_AS(partition_from_table(t, other, c.net.size(), 0.1), ValidationError);
}

TEST_CASE("evidence-averaged tables accept any evidence values") {
  const auto c = mfe::test::constructed_network();
  const FactorGraph fg = to_factor_graph(c.net);
  const RelevanceTable t = precompute_table(fg, c.query, 100, 3, {}, false);
  CHECK_FALSE(t.evidence_values.has_value());
  MapQuery other = c.query;
  other.evidence.set(2, 0);
  CHECK_NOTHROW(partition_from_table(t, other, c.net.size(), 0.1));
  // The decisive variable flips for either evidence value.
  CHECK(t.find(c.decisive)->relevance == 1.0);
}

TEST_CASE("on-the-fly partition keeps variables that flipped") {
  const auto c = mfe::test::constructed_network();
  const Partition p = on_the_fly_partition(to_factor_graph(c.net), c.query, 11);
  CHECK(p.relevant == std::vector<VarId>{c.decisive});
  CHECK(p.irrelevant.size() == 3);
}

TEST_CASE("tables round-trip through text") {
  const auto c = mfe::test::constructed_network();
  const FactorGraph fg = to_factor_graph(c.net);
  RelevanceOptions opts;
  opts.measure = SamplingMeasure::kPrior;
  const RelevanceTable t = precompute_table(fg, c.query, 10, 42, opts);
  CHECK(t.low_budget());
  const std::string text = write_table(t);
  CHECK(text.find("low_budget 1") != std::string::npos);
  const RelevanceTable back = read_table(text);
  CHECK(write_table(back) == text);
  CHECK(back.measure == SamplingMeasure::kPrior);
  CHECK(back.seed == 42);
  CHECK(back.evidence_values == t.evidence_values);
  for (std::size_t i = 0; i < t.estimates.size(); ++i) {
    CHECK(back.estimates[i].relevance == t.estimates[i].relevance);
    CHECK(back.estimates[i].flips == t.estimates[i].flips);
  }
}

TEST_CASE("malformed tables are rejected") {
  const auto c = mfe::test::constructed_network();
  const std::string good = write_table(precompute_table(to_factor_graph(c.net), c.query, 10, 1));
  auto without = [&](const std::string& key) {
    std::string s = good;
    const auto at = s.find(key);
    s.erase(at, s.find('\n', at) - at + 1);
    return s;
  };
  CHECK_THROWS_AS(read_table(without("budget")), ParseError);
  CHECK_THROWS_AS(read_table(without("network_hash")), ParseError);
  CHECK_THROWS_AS(read_table(good + "9 0 10 0\n"), ParseError);
  std::string bad = good;
  bad.replace(bad.find("records 4"), 9, "records 5");
  CHECK_THROWS_AS(read_table(bad), ParseError);
  CHECK_THROWS_AS(read_table(std::string("nonsense\n")), ParseError);
}

TEST_CASE("loading a table for another network is refused") {
  const auto c = mfe::test::constructed_network();
  const FactorGraph fg = to_factor_graph(c.net);
  const auto path = std::filesystem::temp_directory_path() / "mfe_test_table.rel";
  {
    std::ofstream out(path);
    write_table(precompute_table(fg, c.query, 10, 1), out);
  }
  CHECK_NOTHROW(load_table(path, content_hash(fg)));
  CHECK_THROWS_AS(load_table(path, "0000000000000000"), StaleTableError);
  std::filesystem::remove(path);
}

TEST_CASE("alarm natural partition yields thirteen intermediates") {
  const Network alarm = load_bif(mfe::test::data_dir() / "alarm.bif");
  const MapQuery q{natural_hypothesis(alarm), {}};
  std::vector<VarId> ev = natural_evidence(alarm);
  MapQuery full = q;
  for (VarId v : ev) full.evidence.set(v, 0);
  CHECK(full.hypothesis.size() == 8);
  CHECK(ev.size() == 16);
  CHECK(full.intermediates(alarm.size()).size() == 13);
}
