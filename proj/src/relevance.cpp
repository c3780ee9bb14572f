#include "mfe/relevance.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "mfe/convert.hpp"
#include "parallel.hpp"

namespace mfe {
namespace {

// Argmax over H with every other variable instantiated. Factors not touching
// H are constant in h and skipped, which also keeps linear-space products
// far from underflow.
class HypothesisArgmax {
 public:
  HypothesisArgmax(const Engine& engine, std::span<const VarId> hypothesis)
      : engine_(engine), hypothesis_(hypothesis.begin(), hypothesis.end()) {
    const auto& cards = engine.cardinalities();
    std::vector<bool> seen(engine.factors().size(), false);
    for (VarId h : hypothesis_) {
      h_cards_.push_back(cards[h]);
      for (std::size_t f : engine.factors_of(h)) {
        if (!seen[f]) {
          seen[f] = true;
          touching_.push_back(f);
        }
      }
    }
    std::sort(touching_.begin(), touching_.end());
    direct_ = state_space_size(cards, hypothesis_) <= kDirectArgmaxLimit;
  }

  // `point` assigns every variable outside H; H entries must be unassigned.
  std::vector<State> operator()(std::span<const std::int64_t> point) const {
    std::vector<Factor> pool;
    pool.reserve(touching_.size());
    for (std::size_t f : touching_) pool.push_back(reduce(engine_.factors()[f], point));
    return direct_ ? enumerate(pool) : traceback(std::move(pool), point);
  }

 private:
  bool log_space() const { return engine_.log_space(); }
  double budget() const { return engine_.options().cell_budget; }

  static std::size_t first_max(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
      if (values[i] > values[best]) best = i;
    }
    return best;
  }

  std::vector<State> enumerate(const std::vector<Factor>& pool) const {
    std::vector<const Factor*> parts;
    for (const auto& f : pool) parts.push_back(&f);
    const Factor joint =
        combine(parts, hypothesis_, h_cards_, std::nullopt, 0, Reduction::kSum, log_space(), budget());
    return unravel_index(h_cards_, first_max(joint.values()));
  }

  // Eliminating H from the last variable to the first and tracing back from
  // the first picks, at each step, the smallest state consistent with a
  // global maximum: the lexicographically smallest maximiser, which is the
  // same tie-break as the lowest linear index.
  std::vector<State> traceback(std::vector<Factor> pool, std::span<const std::int64_t> point) const {
    const std::size_t n = hypothesis_.size();
    const auto& cards = engine_.cardinalities();
    std::vector<std::optional<Factor>> kept(n);
    for (std::size_t i = n; i-- > 0;) {
      const VarId v = hypothesis_[i];
      std::vector<const Factor*> parts;
      std::vector<Factor> rest;
      std::vector<VarId> scope;
      for (const auto& f : pool) {
        if (f.contains(v)) {
          parts.push_back(&f);
          for (VarId u : f.scope()) {
            if (std::find(scope.begin(), scope.end(), u) == scope.end()) scope.push_back(u);
          }
        }
      }
      if (parts.empty()) continue;
      std::vector<std::size_t> scope_cards;
      for (VarId u : scope) scope_cards.push_back(cards[u]);
      Factor product = combine(parts, scope, scope_cards, std::nullopt, 0, Reduction::kSum, log_space(), budget());
      Factor maxed = max_out(product, v);
      for (auto& f : pool) {
        if (!f.contains(v)) rest.push_back(std::move(f));
      }
      rest.push_back(std::move(maxed));
      pool = std::move(rest);
      kept[i] = std::move(product);
    }
    std::vector<std::int64_t> dense(point.begin(), point.end());
    std::vector<State> out(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const VarId v = hypothesis_[i];
      if (kept[i]) {
        double best = 0.0;
        for (std::size_t s = 0; s < cards[v]; ++s) {
          dense[v] = static_cast<std::int64_t>(s);
          const double value = kept[i]->at(dense);
          if (s == 0 || value > best) {
            best = value;
            out[i] = static_cast<State>(s);
          }
        }
      }
      dense[v] = out[i];
    }
    return out;
  }

  const Engine& engine_;
  std::vector<VarId> hypothesis_;
  std::vector<std::size_t> h_cards_;
  std::vector<std::size_t> touching_;
  bool direct_ = true;
};

std::vector<VarId> sorted_ids(std::vector<VarId> ids) {
  std::sort(ids.begin(), ids.end());
  return ids;
}

const char* measure_name(SamplingMeasure m) { return m == SamplingMeasure::kUniform ? "uniform" : "prior"; }

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

RelevanceEstimate estimate_with(const Engine& engine, const HypothesisArgmax& argmax,
                                const std::optional<ForwardSampler>& sampler, const MapQuery& q,
                                std::span<const VarId> others, VarId target, std::size_t samples,
                                std::uint64_t seed, SamplingMeasure measure, bool evidence_values) {
  const auto& cards = engine.cardinalities();
  std::vector<std::int64_t> point = q.evidence.dense(engine.size());
  Rng rng(seed);
  RelevanceEstimate est;
  est.variable = target;
  est.samples = samples;
  std::vector<State> first;
  for (std::size_t n = 0; n < samples; ++n) {
    std::vector<State> full;
    if (sampler && (!evidence_values || measure == SamplingMeasure::kPrior)) full = sampler->sample(rng);
    if (!evidence_values) {
      for (const auto& [v, s] : q.evidence) point[v] = full[v];
    }
    for (VarId v : others) {
      point[v] = measure == SamplingMeasure::kPrior ? full[v] : uniform_state(cards[v], rng);
    }
    bool flipped = false;
    for (std::size_t s = 0; s < cards[target] && !flipped; ++s) {
      point[target] = static_cast<std::int64_t>(s);
      auto h = argmax(point);
      if (s == 0) {
        first = std::move(h);
      } else if (h != first) {
        flipped = true;
      }
    }
    if (flipped) ++est.flips;
  }
  est.relevance = static_cast<double>(est.flips) / static_cast<double>(samples);
  return est;
}

struct Prepared {
  Engine engine;
  HypothesisArgmax argmax;
  std::optional<ForwardSampler> sampler;
  std::vector<VarId> intermediates;

  Prepared(const FactorGraph& fg, const MapQuery& q, const RelevanceOptions& options, bool evidence_values)
      : engine(fg, options.solver.engine_options(fg)), argmax(engine, q.hypothesis),
        intermediates(q.intermediates(fg.size())) {
    if (!evidence_values || options.measure == SamplingMeasure::kPrior) sampler.emplace(fg);
  }

  std::vector<VarId> others(VarId target) const {
    std::vector<VarId> out;
    for (VarId v : intermediates) {
      if (v != target) out.push_back(v);
    }
    return out;
  }
};

std::vector<RelevanceEstimate> estimate_all(const FactorGraph& fg, const MapQuery& q, std::size_t samples,
                                            std::uint64_t seed, const RelevanceOptions& options,
                                            bool evidence_values) {
  q.validate(fg);
  if (samples == 0) throw ValidationError("relevance estimation needs at least one sample");
  const Prepared prep(fg, q, options, evidence_values);
  std::vector<RelevanceEstimate> out(prep.intermediates.size());
  detail::parallel_for(out.size(), options.jobs, [&](std::size_t i) {
    const VarId v = prep.intermediates[i];
    out[i] = estimate_with(prep.engine, prep.argmax, prep.sampler, q, prep.others(v), v, samples,
                           derive_seed(seed, v), options.measure, evidence_values);
  });
  return out;
}

}  // namespace

RelevanceEstimate estimate_relevance(const FactorGraph& fg, const MapQuery& q, VarId target, std::size_t samples,
                                     std::uint64_t seed, const RelevanceOptions& options, bool evidence_values) {
  q.validate(fg);
  if (samples == 0) throw ValidationError("relevance estimation needs at least one sample");
  const Prepared prep(fg, q, options, evidence_values);
  if (std::find(prep.intermediates.begin(), prep.intermediates.end(), target) == prep.intermediates.end()) {
    throw ValidationError("variable " + std::to_string(target) + " is not an intermediate of the query");
  }
  return estimate_with(prep.engine, prep.argmax, prep.sampler, q, prep.others(target), target, samples, seed,
                       options.measure, evidence_values);
}

const RelevanceEstimate* RelevanceTable::find(VarId v) const {
  auto it = std::lower_bound(estimates.begin(), estimates.end(), v,
                             [](const RelevanceEstimate& e, VarId id) { return e.variable < id; });
  return it != estimates.end() && it->variable == v ? &*it : nullptr;
}

void RelevanceTable::check_query(const MapQuery& q, std::size_t num_vars) const {
  if (sorted_ids(hypothesis) != sorted_ids(q.hypothesis)) {
    throw ValidationError("relevance table was built for a different hypothesis set");
  }
  if (evidence != q.evidence.variables()) {
    throw ValidationError("relevance table was built for a different evidence set");
  }
  if (evidence_values) {
    std::vector<State> values;
    for (const auto& [v, s] : q.evidence) values.push_back(s);
    if (values != *evidence_values) throw ValidationError("relevance table was built for different evidence values");
  }
  const auto inter = q.intermediates(num_vars);
  if (inter.size() != estimates.size()) throw ValidationError("relevance table does not cover the intermediates");
  for (std::size_t i = 0; i < inter.size(); ++i) {
    if (estimates[i].variable != inter[i]) {
      throw ValidationError("relevance table does not cover intermediate " + std::to_string(inter[i]));
    }
  }
}

RelevanceTable precompute_table(const FactorGraph& fg, const MapQuery& q, std::size_t samples_per_variable,
                                std::uint64_t seed, const RelevanceOptions& options, bool per_evidence) {
  RelevanceTable t;
  t.network_hash = content_hash(fg);
  t.hypothesis = q.hypothesis;
  t.evidence = q.evidence.variables();
  if (per_evidence) {
    std::vector<State> values;
    for (const auto& [v, s] : q.evidence) values.push_back(s);
    t.evidence_values = std::move(values);
  }
  t.budget = samples_per_variable;
  t.seed = seed;
  t.measure = options.measure;
  t.estimates = estimate_all(fg, q, samples_per_variable, seed, options, per_evidence);
  return t;
}

Partition partition_from_table(const RelevanceTable& table, const MapQuery& q, std::size_t num_vars,
                               double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ValidationError("threshold must lie in [0, 1]");
  table.check_query(q, num_vars);
  Partition p;
  for (const auto& e : table.estimates) (e.relevance >= threshold ? p.relevant : p.irrelevant).push_back(e.variable);
  return p;
}

Partition on_the_fly_partition(const FactorGraph& fg, const MapQuery& q, std::uint64_t seed,
                               const RelevanceOptions& options) {
  Partition p;
  for (const auto& e : estimate_all(fg, q, kOnTheFlySamples, seed, options, true)) {
    (e.flips > 0 ? p.relevant : p.irrelevant).push_back(e.variable);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Table files

void write_table(const RelevanceTable& t, std::ostream& out) {
  auto ids = [&](const char* key, const auto& xs) {
    out << key;
    for (auto x : xs) out << ' ' << x;
    out << '\n';
  };
  out << "# mfe relevance table\n";
  out << "network_hash " << t.network_hash << '\n';
  ids("hypothesis", t.hypothesis);
  ids("evidence", t.evidence);
  if (t.evidence_values) {
    ids("evidence_values", *t.evidence_values);
  } else {
    out << "evidence_values -\n";
  }
  out << "budget " << t.budget << '\n';
  out << "seed " << t.seed << '\n';
  out << "measure " << measure_name(t.measure) << '\n';
  out << "low_budget " << (t.low_budget() ? 1 : 0) << '\n';
  out << "records " << t.estimates.size() << '\n';
  for (const auto& e : t.estimates) {
    out << e.variable << ' ' << e.flips << ' ' << e.samples << ' ' << format_double(e.relevance) << '\n';
  }
}

std::string write_table(const RelevanceTable& t) {
  std::ostringstream out;
  write_table(t, out);
  return out.str();
}

namespace {

template <typename T>
T parse_number(const std::string& token, std::size_t line) {
  T value{};
  const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
    throw ParseError("invalid number '" + token + "'", line, 1);
  }
  return value;
}

template <typename T>
std::vector<T> parse_list(std::istringstream& in, std::size_t line) {
  std::vector<T> out;
  std::string tok;
  while (in >> tok) out.push_back(parse_number<T>(tok, line));
  return out;
}

}  // namespace

RelevanceTable read_table(std::istream& in) {
  RelevanceTable t;
  std::string text;
  std::size_t line_no = 0;
  std::size_t records = 0;
  bool have_records = false;
  const std::vector<std::string> required = {"network_hash", "hypothesis", "evidence", "evidence_values",
                                             "budget",       "seed",       "measure",  "records"};
  std::vector<std::string> seen;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.empty() || text[0] == '#') continue;
    std::istringstream ls(text);
    if (have_records) {
      if (t.estimates.size() == records) throw ParseError("unexpected content after the records", line_no, 1);
      auto fields = std::vector<std::string>{};
      std::string tok;
      while (ls >> tok) fields.push_back(tok);
      if (fields.size() != 4) throw ParseError("record needs 'variable flips samples relevance'", line_no, 1);
      RelevanceEstimate e;
      e.variable = parse_number<VarId>(fields[0], line_no);
      e.flips = parse_number<std::size_t>(fields[1], line_no);
      e.samples = parse_number<std::size_t>(fields[2], line_no);
      e.relevance = parse_number<double>(fields[3], line_no);
      if (e.samples == 0 || e.flips > e.samples) throw ParseError("record counts are inconsistent", line_no, 1);
      if (e.relevance != static_cast<double>(e.flips) / static_cast<double>(e.samples)) {
        throw ParseError("record relevance is not flips / samples", line_no, 1);
      }
      if (!t.estimates.empty() && e.variable <= t.estimates.back().variable) {
        throw ParseError("records must be sorted by variable id", line_no, 1);
      }
      t.estimates.push_back(e);
      continue;
    }
    std::string key;
    ls >> key;
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) throw ParseError("duplicate key '" + key + "'", line_no, 1);
    seen.push_back(key);
    if (key == "network_hash") {
      ls >> t.network_hash;
    } else if (key == "hypothesis") {
      t.hypothesis = parse_list<VarId>(ls, line_no);
    } else if (key == "evidence") {
      t.evidence = parse_list<VarId>(ls, line_no);
    } else if (key == "evidence_values") {
      std::string rest;
      std::getline(ls, rest);
      if (rest.find_first_not_of(' ') != std::string::npos && rest.substr(rest.find_first_not_of(' ')) == "-") continue;
      std::istringstream vs(rest);
      t.evidence_values = parse_list<State>(vs, line_no);
    } else if (key == "budget") {
      ls >> key;
      t.budget = parse_number<std::size_t>(key, line_no);
    } else if (key == "seed") {
      ls >> key;
      t.seed = parse_number<std::uint64_t>(key, line_no);
    } else if (key == "measure") {
      ls >> key;
      if (key == "uniform") {
        t.measure = SamplingMeasure::kUniform;
      } else if (key == "prior") {
        t.measure = SamplingMeasure::kPrior;
      } else {
        throw ParseError("unknown measure '" + key + "'", line_no, 1);
      }
    } else if (key == "low_budget") {
      // Derived from the budget; accepted for readability only.
    } else if (key == "records") {
      ls >> key;
      records = parse_number<std::size_t>(key, line_no);
      have_records = true;
    } else {
      throw ParseError("unknown key '" + key + "'", line_no, 1);
    }
  }
  for (const auto& key : required) {
    if (std::find(seen.begin(), seen.end(), key) == seen.end()) throw ParseError("missing key '" + key + "'");
  }
  if (t.estimates.size() != records) throw ParseError("expected " + std::to_string(records) + " records");
  if (t.evidence_values && t.evidence_values->size() != t.evidence.size()) {
    throw ParseError("evidence_values does not match the evidence list");
  }
  return t;
}

RelevanceTable read_table(const std::string& text) {
  std::istringstream in(text);
  return read_table(in);
}

RelevanceTable load_table(const std::filesystem::path& path, const std::string& expected_hash) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open relevance table " + path.string());
  RelevanceTable t = read_table(in);
  if (t.network_hash != expected_hash) {
    throw StaleTableError("relevance table " + path.string() + " was built for network " + t.network_hash +
                          ", not " + expected_hash);
  }
  return t;
}

}  // namespace mfe
