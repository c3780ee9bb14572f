#include "mfe/convert.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mfe/errors.hpp"

namespace mfe {

Network patch_determinism(const Network& net, double epsilon) {
  if (!(epsilon > 0.0 && epsilon <= 1e-3)) throw ValidationError("epsilon must lie in (0, 1e-3]");
  std::vector<Cpt> cpts = net.cpts();
  for (auto& cpt : cpts) {
    const std::size_t k = net.variable(cpt.child).cardinality();
    for (std::size_t start = 0; start < cpt.table.size(); start += k) {
      auto row = std::span<double>(cpt.table).subspan(start, k);
      const auto zeros = static_cast<std::size_t>(std::count(row.begin(), row.end(), 0.0));
      if (zeros == 0) continue;
      const double top = *std::max_element(row.begin(), row.end());
      const auto ties = static_cast<std::size_t>(std::count(row.begin(), row.end(), top));
      const double share = static_cast<double>(zeros) * epsilon / static_cast<double>(ties);
      for (double& p : row) {
        if (p == 0.0) {
          p = epsilon;
        } else if (p == top) {
          p -= share;
        }
      }
    }
  }
  std::vector<Variable> vars = net.variables();
  return Network(net.name(), std::move(vars), std::move(cpts));
}

FactorGraph to_factor_graph(const Network& net) {
  FactorGraph fg;
  fg.variables = net.variables();
  fg.factors.reserve(net.size());
  for (const auto& cpt : net.cpts()) {
    std::vector<VarId> scope = cpt.parents;
    scope.push_back(cpt.child);
    std::vector<std::size_t> cards;
    cards.reserve(scope.size());
    for (VarId v : scope) cards.push_back(net.variable(v).cardinality());
    fg.factors.emplace_back(std::move(scope), std::move(cards), cpt.table);
  }
  return fg;
}

namespace {

// Maps a last-fastest linear index to the first-fastest convention of the
// file format.
std::size_t to_file_index(std::span<const std::size_t> cards, std::size_t index) {
  const auto digits = unravel_index(cards, index);
  std::size_t out = 0;
  std::size_t weight = 1;
  for (std::size_t i = 0; i < cards.size(); ++i) {
    out += digits[i] * weight;
    weight *= cards[i];
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw Error("cannot format value");
  return std::string(buf, ptr);
}

}  // namespace

void write_fg(const FactorGraph& fg, std::ostream& out) {
  out << fg.factors.size() << '\n';
  for (const auto& f : fg.factors) {
    out << '\n' << f.scope().size() << '\n';
    for (std::size_t i = 0; i < f.scope().size(); ++i) out << (i ? " " : "") << f.scope()[i];
    out << '\n';
    for (std::size_t i = 0; i < f.cards().size(); ++i) out << (i ? " " : "") << f.cards()[i];
    out << '\n';
    std::vector<std::pair<std::size_t, double>> stored;
    for (std::size_t idx = 0; idx < f.size(); ++idx) {
      if (f.values()[idx] != 0.0) stored.emplace_back(to_file_index(f.cards(), idx), f.values()[idx]);
    }
    std::sort(stored.begin(), stored.end());
    out << stored.size() << '\n';
    for (const auto& [idx, value] : stored) out << idx << ' ' << format_double(value) << '\n';
  }
}

std::string write_fg(const FactorGraph& fg) {
  std::ostringstream out;
  write_fg(fg, out);
  return out.str();
}

namespace {

class TokenReader {
 public:
  explicit TokenReader(std::istream& in) : in_(in) {}

  std::string next(const char* what) {
    std::string tok;
    if (!(in_ >> tok)) throw ParseError(std::string("unexpected end of factor graph while reading ") + what);
    return tok;
  }

  std::size_t next_count(const char* what) {
    const std::string tok = next(what);
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
      throw ParseError(std::string("malformed ") + what + " '" + tok + "'");
    }
    return v;
  }

  double next_value() {
    const std::string tok = next("factor value");
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) throw ParseError("malformed factor value '" + tok + "'");
    return v;
  }

  bool at_end() {
    in_ >> std::ws;
    return in_.eof();
  }

 private:
  std::istream& in_;
};

}  // namespace

FactorGraph read_fg(std::istream& in) {
  TokenReader reader(in);
  const std::size_t count = reader.next_count("factor count");
  std::vector<std::size_t> cards_by_var;
  FactorGraph fg;
  fg.factors.reserve(count);
  for (std::size_t f = 0; f < count; ++f) {
    const std::size_t arity = reader.next_count("scope size");
    std::vector<VarId> scope(arity);
    std::vector<std::size_t> cards(arity);
    for (auto& v : scope) v = static_cast<VarId>(reader.next_count("variable id"));
    for (auto& c : cards) {
      c = reader.next_count("cardinality");
      if (c == 0) throw ParseError("zero cardinality in factor " + std::to_string(f));
    }
    for (std::size_t i = 0; i < arity; ++i) {
      if (scope[i] >= cards_by_var.size()) cards_by_var.resize(scope[i] + 1, 0);
      auto& known = cards_by_var[scope[i]];
      if (known != 0 && known != cards[i]) {
        throw ParseError("cardinality mismatch for variable " + std::to_string(scope[i]));
      }
      known = cards[i];
    }
    std::size_t size = 1;
    for (std::size_t c : cards) size *= c;
    const std::size_t stored = reader.next_count("entry count");
    if (stored > size) throw ParseError("factor " + std::to_string(f) + " stores more entries than it has");
    std::vector<double> values(size, 0.0);
    std::vector<std::size_t> reversed(cards.rbegin(), cards.rend());
    for (std::size_t e = 0; e < stored; ++e) {
      const std::size_t idx = reader.next_count("entry index");
      if (idx >= size) throw ParseError("entry index " + std::to_string(idx) + " out of range");
      // first-fastest over `cards` equals last-fastest over the reversed list
      const auto digits = unravel_index(reversed, idx);
      std::size_t internal = 0;
      for (std::size_t i = 0; i < arity; ++i) internal = internal * cards[i] + digits[arity - 1 - i];
      values[internal] = reader.next_value();
    }
    try {
      fg.factors.emplace_back(std::move(scope), std::move(cards), std::move(values));
    } catch (const ValidationError& e) {
      throw ParseError(e.what());
    }
  }
  if (!reader.at_end()) throw ParseError("trailing content after last factor");

  for (std::size_t v = 0; v < cards_by_var.size(); ++v) {
    if (cards_by_var[v] == 0) throw ParseError("variable " + std::to_string(v) + " appears in no factor");
    Variable var;
    var.id = static_cast<VarId>(v);
    var.name = "x" + std::to_string(v);
    for (std::size_t s = 0; s < cards_by_var[v]; ++s) var.states.push_back(std::to_string(s));
    fg.variables.push_back(std::move(var));
  }
  fg.validate();
  return fg;
}

FactorGraph read_fg(const std::string& text) {
  std::istringstream in(text);
  return read_fg(in);
}

FactorGraph load_fg(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return read_fg(in);
}

std::string content_hash(const FactorGraph& fg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : write_fg(fg)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace mfe
