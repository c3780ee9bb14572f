#include "mfe/bif.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <unordered_map>
#include <vector>

#include "mfe/errors.hpp"

namespace mfe {
namespace {

enum class Tok { kWord, kPunct, kEnd };

struct Token {
  Tok kind = Tok::kEnd;
  std::string text;
  std::size_t line = 0;
  std::size_t column = 0;
};

bool is_punct(char c) {
  switch (c) {
    case '{': case '}': case '[': case ']': case '(': case ')':
    case ',': case ';': case '|':
      return true;
    default:
      return false;
  }
}

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    skip_space_and_comments();
    Token t;
    t.line = line_;
    t.column = column_;
    if (pos_ >= text_.size()) return t;
    const char c = text_[pos_];
    if (is_punct(c)) {
      t.kind = Tok::kPunct;
      t.text = std::string(1, c);
      advance();
      return t;
    }
    t.kind = Tok::kWord;
    while (pos_ < text_.size()) {
      const char d = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(d)) || is_punct(d)) break;
      if (d == '/' && pos_ + 1 < text_.size() && (text_[pos_ + 1] == '/' || text_[pos_ + 1] == '*')) break;
      t.text.push_back(d);
      advance();
    }
    return t;
  }

 private:
  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  void skip_space_and_comments() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '/') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '*') {
        const std::size_t line = line_, column = column_;
        advance();
        advance();
        while (pos_ + 1 < text_.size() && !(text_[pos_] == '*' && text_[pos_ + 1] == '/')) advance();
        if (pos_ + 1 >= text_.size()) throw ParseError("unterminated comment", line, column);
        advance();
        advance();
      } else {
        break;
      }
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
};

struct PendingVariable {
  std::string name;
  std::vector<std::string> states;
};

struct PendingCpt {
  std::size_t child = 0;
  std::vector<std::size_t> parents;
  std::vector<double> table;
  std::vector<bool> filled;
  std::size_t line = 0;
  std::size_t column = 0;
};

class Parser {
 public:
  explicit Parser(std::string_view text) : lexer_(text) { shift(); }

  Network parse() {
    while (cur_.kind != Tok::kEnd) {
      if (cur_.kind != Tok::kWord) fail("expected 'network', 'variable' or 'probability'");
      if (cur_.text == "network") {
        parse_network();
      } else if (cur_.text == "variable") {
        parse_variable();
      } else if (cur_.text == "probability") {
        parse_probability();
      } else {
        fail("unsupported BIF construct '" + cur_.text + "'");
      }
    }

    std::vector<Variable> variables;
    variables.reserve(vars_.size());
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      variables.push_back(Variable{static_cast<VarId>(i), vars_[i].name, vars_[i].states});
    }
    std::vector<Cpt> cpts;
    cpts.reserve(cpts_.size());
    for (auto& pending : cpts_) {
      Cpt cpt;
      cpt.child = static_cast<VarId>(pending.child);
      for (std::size_t p : pending.parents) cpt.parents.push_back(static_cast<VarId>(p));
      cpt.table = std::move(pending.table);
      cpts.push_back(std::move(cpt));
    }
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      bool found = false;
      for (const auto& c : cpts) found = found || c.child == i;
      if (!found) throw ParseError("variable '" + vars_[i].name + "' has no probability block");
    }
    return Network(network_name_, std::move(variables), std::move(cpts));
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, cur_.line, cur_.column); }
  [[noreturn]] void fail_at(const Token& t, const std::string& what) const {
    throw ParseError(what, t.line, t.column);
  }

  void shift() { cur_ = lexer_.next(); }

  Token take_word(const char* what) {
    if (cur_.kind != Tok::kWord) fail(std::string("expected ") + what);
    Token t = cur_;
    shift();
    return t;
  }

  void expect(const char* punct) {
    if (cur_.kind != Tok::kPunct || cur_.text != punct) {
      fail(std::string("expected '") + punct + "'" +
           (cur_.kind == Tok::kEnd ? " before end of input" : ", found '" + cur_.text + "'"));
    }
    shift();
  }

  bool at_punct(const char* punct) const { return cur_.kind == Tok::kPunct && cur_.text == punct; }

  // property <anything> ;
  void skip_property() {
    shift();
    while (!at_punct(";")) {
      if (cur_.kind == Tok::kEnd) fail("unterminated property");
      shift();
    }
    shift();
  }

  void parse_network() {
    shift();
    network_name_ = take_word("network name").text;
    expect("{");
    while (!at_punct("}")) {
      if (cur_.kind == Tok::kWord && cur_.text == "property") {
        skip_property();
      } else {
        fail("unexpected token in network block");
      }
    }
    shift();
  }

  void parse_variable() {
    shift();
    const Token name = take_word("variable name");
    if (index_.count(name.text)) fail_at(name, "duplicate variable '" + name.text + "'");
    expect("{");
    PendingVariable var{name.text, {}};
    bool typed = false;
    while (!at_punct("}")) {
      if (cur_.kind == Tok::kWord && cur_.text == "property") {
        skip_property();
        continue;
      }
      if (cur_.kind != Tok::kWord || cur_.text != "type") fail("expected 'type' in variable block");
      if (typed) fail("variable '" + name.text + "' declares its type twice");
      shift();
      if (cur_.kind != Tok::kWord || cur_.text != "discrete") fail("only discrete variables are supported");
      shift();
      expect("[");
      const Token count = take_word("state count");
      std::size_t n = 0;
      auto [ptr, ec] = std::from_chars(count.text.data(), count.text.data() + count.text.size(), n);
      if (ec != std::errc{} || ptr != count.text.data() + count.text.size()) {
        fail_at(count, "invalid state count '" + count.text + "'");
      }
      expect("]");
      expect("{");
      while (true) {
        const Token label = take_word("state label");
        for (const auto& existing : var.states) {
          if (existing == label.text) fail_at(label, "duplicate state '" + label.text + "'");
        }
        var.states.push_back(label.text);
        if (at_punct("}")) break;
        expect(",");
      }
      shift();
      expect(";");
      if (var.states.size() != n) fail_at(count, "declared " + count.text + " states but listed " +
                                                     std::to_string(var.states.size()));
      if (n < 2) fail_at(count, "variable '" + name.text + "' needs at least two states");
      typed = true;
    }
    shift();
    if (!typed) fail_at(name, "variable '" + name.text + "' has no type");
    index_.emplace(var.name, vars_.size());
    vars_.push_back(std::move(var));
  }

  std::size_t lookup_variable(const Token& t) const {
    auto it = index_.find(t.text);
    if (it == index_.end()) fail_at(t, "unknown variable '" + t.text + "'");
    return it->second;
  }

  double parse_number(const Token& t) const {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), value);
    if (ec != std::errc{} || ptr != t.text.data() + t.text.size()) fail_at(t, "invalid probability '" + t.text + "'");
    if (!(value >= 0.0 && value <= 1.0)) fail_at(t, "probability outside [0, 1]");
    return value;
  }

  std::vector<double> parse_values(std::size_t expected) {
    const Token first = cur_;
    std::vector<double> values;
    while (true) {
      values.push_back(parse_number(take_word("probability")));
      if (at_punct(";")) break;
      expect(",");
    }
    shift();
    if (values.size() != expected) {
      fail_at(first, "expected " + std::to_string(expected) + " probabilities, found " +
                         std::to_string(values.size()));
    }
    double sum = 0.0;
    for (double v : values) sum += v;
    if (std::abs(sum - 1.0) > 1e-6) {
      std::ostringstream msg;
      msg.precision(12);
      msg << "row sums to " << sum;
      fail_at(first, msg.str());
    }
    for (double& v : values) v /= sum;
    return values;
  }

  void parse_probability() {
    const Token start = cur_;
    shift();
    expect("(");
    PendingCpt cpt;
    cpt.line = start.line;
    cpt.column = start.column;
    const Token child = take_word("child variable");
    cpt.child = lookup_variable(child);
    for (const auto& existing : cpts_) {
      if (existing.child == cpt.child) fail_at(child, "second probability block for '" + child.text + "'");
    }
    if (at_punct("|")) {
      shift();
      while (true) {
        const Token parent = take_word("parent variable");
        cpt.parents.push_back(lookup_variable(parent));
        if (at_punct(")")) break;
        expect(",");
      }
    }
    expect(")");
    expect("{");

    const std::size_t k = vars_[cpt.child].states.size();
    std::size_t rows = 1;
    for (std::size_t p : cpt.parents) rows *= vars_[p].states.size();
    cpt.table.assign(rows * k, 0.0);
    cpt.filled.assign(rows, false);
    std::size_t filled = 0;

    while (!at_punct("}")) {
      if (cur_.kind == Tok::kWord && cur_.text == "table") {
        if (!cpt.parents.empty()) fail("'table' rows are only supported for root variables");
        if (filled) fail("repeated table row");
        shift();
        auto values = parse_values(k);
        std::copy(values.begin(), values.end(), cpt.table.begin());
        cpt.filled[0] = true;
        filled = 1;
      } else if (cur_.kind == Tok::kWord && cur_.text == "property") {
        skip_property();
      } else if (at_punct("(")) {
        if (cpt.parents.empty()) fail("parent row given for a root variable");
        const Token row_start = cur_;
        shift();
        std::size_t row = 0;
        for (std::size_t i = 0; i < cpt.parents.size(); ++i) {
          if (i > 0) expect(",");
          const Token label = take_word("parent state");
          const auto& parent = vars_[cpt.parents[i]];
          std::size_t s = parent.states.size();
          for (std::size_t j = 0; j < parent.states.size(); ++j) {
            if (parent.states[j] == label.text) s = j;
          }
          if (s == parent.states.size()) {
            fail_at(label, "unknown state '" + label.text + "' of '" + parent.name + "'");
          }
          row = row * parent.states.size() + s;
        }
        expect(")");
        if (cpt.filled[row]) fail_at(row_start, "duplicate parent configuration");
        auto values = parse_values(k);
        std::copy(values.begin(), values.end(), cpt.table.begin() + static_cast<std::ptrdiff_t>(row * k));
        cpt.filled[row] = true;
        ++filled;
      } else if (cur_.kind == Tok::kWord && cur_.text == "default") {
        fail("'default' rows are not part of the supported dialect");
      } else {
        fail("unexpected token in probability block");
      }
    }
    shift();
    if (filled != rows) {
      throw ParseError("probability block for '" + vars_[cpt.child].name + "' defines " +
                           std::to_string(filled) + " of " + std::to_string(rows) + " rows",
                       start.line, start.column);
    }
    cpts_.push_back(std::move(cpt));
  }

  Lexer lexer_;
  Token cur_;
  std::string network_name_ = "unknown";
  std::vector<PendingVariable> vars_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<PendingCpt> cpts_;
};

}  // namespace

Network parse_bif(std::string_view text) { return Parser(text).parse(); }

Network parse_bif(std::istream& in) {
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_bif(text);
}

Network load_bif(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  Network net = parse_bif(in);
  if (net.name() == "unknown") {
    std::vector<Variable> vars = net.variables();
    std::vector<Cpt> cpts = net.cpts();
    return Network(path.stem().string(), std::move(vars), std::move(cpts));
  }
  return net;
}

}  // namespace mfe
