#include "doctest.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "mfe/bif.hpp"
#include "mfe/convert.hpp"
#include "mfe/errors.hpp"
#include "support.hpp"

using namespace mfe;

namespace {

constexpr const char* kSmall = R"(network tiny {
}
variable rain {
  type discrete [ 2 ] { yes, no };
}
variable wet {
  type discrete [ 3 ] { soaked, damp, dry };
}
probability ( rain ) {
  table 0.2, 0.8;
}
probability ( wet | rain ) {
  (yes) 0.7, 0.2, 0.1;
  (no) 0.0, 0.1, 0.9;
}
)";

std::string replace(std::string text, const std::string& from, const std::string& to) {
  text.replace(text.find(from), from.size(), to);
  return text;
}

}  // namespace

TEST_CASE("small BIF parses into the expected network") {
  const Network net = parse_bif(std::string_view(kSmall));
  CHECK(net.name() == "tiny");
  REQUIRE(net.size() == 2);
  CHECK(net.variable(1).name == "wet");
  CHECK(net.variable(1).states == std::vector<std::string>{"soaked", "damp", "dry"});
  CHECK(net.cpt(1).parents == std::vector<VarId>{0});
  const std::vector<double> expect{0.7, 0.2, 0.1, 0.0, 0.1, 0.9};
  for (std::size_t i = 0; i < expect.size(); ++i) CHECK(net.cpt(1).table[i] == doctest::Approx(expect[i]));
}

TEST_CASE("rows slightly off one are renormalised") {
  const Network net = parse_bif(replace(kSmall, "table 0.2, 0.8;", "table 0.2, 0.8000004;"));
  const auto& t = net.cpt(0).table;
  CHECK(t[0] + t[1] == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("malformed BIF reports a location") {
  auto line_of = [](const std::string& text) {
    try {
      parse_bif(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return std::size_t{0};
  };
  CHECK(line_of(replace(kSmall, "table 0.2, 0.8;", "table 0.2, 0.5;")) == 10);
  CHECK(line_of(replace(kSmall, "(no) 0.0, 0.1, 0.9;", "(maybe) 0.0, 0.1, 0.9;")) == 14);
  CHECK(line_of(replace(kSmall, "[ 3 ]", "[ 4 ]")) == 7);
  CHECK(line_of(replace(kSmall, "probability ( wet | rain )", "probability ( wet | snow )")) == 12);
  CHECK(line_of(replace(kSmall, "(yes) 0.7, 0.2, 0.1;\n", "")) > 0);
  CHECK(line_of(replace(kSmall, "0.7, 0.2", "0.7 0.2")) == 13);
}

TEST_CASE("bundled networks have their published sizes") {
  struct Expect {
    const char* file;
    std::size_t vars;
    std::size_t arcs;
  };
  for (const Expect& e : {Expect{"asia.bif", 8, 8}, Expect{"alarm.bif", 37, 46}, Expect{"hailfinder.bif", 56, 66},
                          Expect{"barley.bif", 48, 84}, Expect{"andes.bif", 223, 338}}) {
    CAPTURE(e.file);
    const Network net = load_bif(mfe::test::data_dir() / e.file);
    CHECK(net.size() == e.vars);
    CHECK(net.arc_count() == e.arcs);
  }
}

TEST_CASE("unknown network name falls back to the file stem") {
  CHECK(load_bif(mfe::test::data_dir() / "asia.bif").name() == "asia");
}
