#include "doctest.h"

#include <cmath>
#include <sstream>

#include "mfe/bif.hpp"
#include "mfe/convert.hpp"
#include "mfe/errors.hpp"
#include "support.hpp"

using namespace mfe;

TEST_CASE("factor graph mirrors the CPTs") {
  const Network net = load_bif(mfe::test::data_dir() / "asia.bif");
  const FactorGraph fg = to_factor_graph(net);
  REQUIRE(fg.factors.size() == net.size());
  for (const Cpt& cpt : net.cpts()) {
    const Factor& f = fg.factors[cpt.child];
    std::vector<VarId> scope = cpt.parents;
    scope.push_back(cpt.child);
    CHECK(f.scope() == scope);
    CHECK(f.values() == cpt.table);
  }
}

TEST_CASE(".fg text round-trips exactly") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    mfe::test::NetShape shape;
    shape.zero_rate = 0.2;
    const FactorGraph fg = to_factor_graph(mfe::test::random_network(seed, shape));
    const std::string text = write_fg(fg);
    const FactorGraph back = read_fg(text);
    CHECK(back.factors == fg.factors);
    CHECK(write_fg(back) == text);
  }
}

TEST_CASE(".fg stores entries with the first scope variable fastest") {
  FactorGraph fg;
  fg.variables = {Variable{0, "a", {"0", "1"}}, Variable{1, "b", {"0", "1", "2"}}};
  fg.factors = {Factor({0, 1}, {2, 3}, {0.0, 0.25, 0.5, 0.125, 0.0, 2.0})};
  const std::string text = write_fg(fg);
  // Engine index (a=1, b=0) is 3; in the file a varies fastest so it is 1.
  CHECK(text == "1\n\n2\n0 1\n2 3\n4\n1 0.125\n2 0.25\n4 0.5\n5 2\n");
  CHECK(read_fg(text).factors == fg.factors);
}

TEST_CASE("malformed .fg is rejected") {
  CHECK_THROWS_AS(read_fg(std::string("1\n\n1\n0\n2\n1\n 5 0.5\n")), ParseError);
  CHECK_THROWS_AS(read_fg(std::string("1\n\n1\n0\n2\n2\n 0 0.5\n")), ParseError);
  CHECK_THROWS_AS(read_fg(std::string("x\n")), ParseError);
  CHECK_THROWS_AS(read_fg(std::string("1\n\n1\n0\n2\n1\n 0 -1\n")), ValidationError);
}

TEST_CASE("determinism patch keeps rows stochastic and strictly positive") {
  const Network alarm = load_bif(mfe::test::data_dir() / "alarm.bif");
  const Network patched = patch_determinism(alarm, 1e-9);
  for (const Cpt& cpt : patched.cpts()) {
    const std::size_t card = patched.variable(cpt.child).cardinality();
    for (std::size_t r = 0; r < cpt.table.size(); r += card) {
      double sum = 0.0;
      for (std::size_t s = 0; s < card; ++s) {
        CHECK(cpt.table[r + s] > 0.0);
        sum += cpt.table[r + s];
      }
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }
  }
  CHECK(write_fg(to_factor_graph(patch_determinism(patched, 1e-9))) == write_fg(to_factor_graph(patched)));
}

TEST_CASE("patch moves mass from the maximal entries only") {
  const Network net = mfe::test::make_network({{"a", 4}}, {{{}, {0.0, 0.4, 0.4, 0.2}}});
  const Network patched = patch_determinism(net, 1e-3);
  const auto& t = patched.cpt(0).table;
  CHECK(t[0] == doctest::Approx(1e-3));
  CHECK(t[1] == doctest::Approx(0.3995));
  CHECK(t[2] == doctest::Approx(0.3995));
  CHECK(t[3] == 0.2);
}

TEST_CASE("patch is the identity on zero-free networks") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Network net = mfe::test::random_network(seed);
    CHECK(write_fg(to_factor_graph(patch_determinism(net))) == write_fg(to_factor_graph(net)));
  }
  // Asia's `either` is a deterministic OR, so patching must change it.
  const Network asia = load_bif(mfe::test::data_dir() / "asia.bif");
  CHECK(content_hash(to_factor_graph(patch_determinism(asia))) != content_hash(to_factor_graph(asia)));
}

TEST_CASE("content hash is stable and sensitive") {
  const FactorGraph a = to_factor_graph(mfe::test::random_network(1));
  FactorGraph b = a;
  CHECK(content_hash(a) == content_hash(b));
  CHECK(content_hash(a).size() == 16);
  b.factors[0].mutable_values()[0] *= 0.5;
  CHECK(content_hash(a) != content_hash(b));
}
