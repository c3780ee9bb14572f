#include "mfe/bench.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "mfe/bif.hpp"
#include "mfe/errors.hpp"
#include "parallel.hpp"

namespace mfe {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string shortest(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

const std::vector<std::string> kAlarmHypothesis = {"HYPOVOLEMIA", "LVFAILURE",  "INSUFFANESTH", "ANAPHYLAXIS",
                                                   "KINKEDTUBE",  "INTUBATION", "DISCONNECT",   "PULMEMBOLUS"};
const std::vector<std::string> kAlarmEvidence = {"HISTORY", "CVP",  "PCWP",  "HRBP", "HREKG",     "HRSAT",
                                                 "TPR",     "EXPCO2", "MINVOL", "FIO2", "SAO2",     "PAP",
                                                 "PRESS",   "MINVOLSET", "CO", "BP"};

std::vector<VarId> by_names(const Network& net, const std::vector<std::string>& names) {
  std::vector<VarId> out;
  for (const auto& n : names) {
    const auto id = net.find(n);
    if (!id) throw ValidationError("'natural' partition is defined for the Alarm network only (missing " + n + ")");
    out.push_back(*id);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Evidence and metrics

std::vector<Assignment> draw_evidence(const FactorGraph& fg, std::span<const VarId> evidence_vars, std::size_t n,
                                      std::uint64_t seed, EvidenceDist dist) {
  if (n == 0) throw ValidationError("at least one evidence draw is required");
  for (VarId v : evidence_vars) {
    if (v >= fg.size()) throw ValidationError("unknown evidence variable " + std::to_string(v));
  }
  Rng rng(seed);
  std::vector<Assignment> out;
  if (dist == EvidenceDist::kAncestral) {
    const ForwardSampler sampler(fg);
    for (std::size_t i = 0; i < n; ++i) {
      const auto full = sampler.sample(rng);
      Assignment e;
      for (VarId v : evidence_vars) e.set(v, full[v]);
      out.push_back(std::move(e));
    }
    return out;
  }
  const auto cards = fg.cardinalities();
  const Engine engine(fg, EngineOptions{use_log_space(fg, LogMode::kAuto), kDefaultCellBudget});
  constexpr std::size_t kTries = 1000;
  for (std::size_t i = 0; i < n; ++i) {
    bool found = false;
    for (std::size_t t = 0; t < kTries && !found; ++t) {
      Assignment e;
      for (VarId v : evidence_vars) e.set(v, uniform_state(cards[v], rng));
      const auto dense = e.dense(fg.size());
      const double value = detail::to_log(engine, engine.total(dense, engine.order_for(dense, {})));
      if (value > -std::numeric_limits<double>::infinity()) {
        out.push_back(std::move(e));
        found = true;
      }
    }
    if (!found) throw ValidationError("uniform evidence sampling found no positive-probability assignment");
  }
  return out;
}

std::vector<Assignment> draw_evidence(const Network& net, std::span<const VarId> evidence_vars, std::size_t n,
                                      std::uint64_t seed, EvidenceDist dist) {
  return draw_evidence(to_factor_graph(net), evidence_vars, n, seed, dist);
}

std::size_t hamming(const Assignment& a, const Assignment& b) {
  if (a.variables() != b.variables()) throw ValidationError("explanations cover different variables");
  std::size_t d = 0;
  auto it = b.begin();
  for (const auto& [v, s] : a) {
    if (s != it->second) ++d;
    ++it;
  }
  return d;
}

GroundTruth::GroundTruth(const FactorGraph& fg, const MapQuery& q, const SolverOptions& options) {
  q.validate(fg);
  const Engine engine(fg, options.engine_options(fg));
  const auto dense = q.evidence.dense(fg.size());
  table_ = engine.joint(dense, q.hypothesis, engine.order_for(dense, q.hypothesis));
  const std::size_t best = table_.argmax();
  map_ = table_.assignment(best);
  map_log_ = table_.log_value(best);
}

RatioRank GroundTruth::ratio_and_rank(const Assignment& explanation) const {
  const std::size_t idx = table_.index_of(explanation);
  const double value = table_.values[idx];
  const double log_value = table_.log_value(idx);
  RatioRank r;
  r.ratio = log_value == map_log_ ? 1.0 : std::exp(log_value - map_log_);
  r.rank = 1 + static_cast<std::size_t>(
                   std::count_if(table_.values.begin(), table_.values.end(), [&](double x) { return x > value; }));
  return r;
}

RatioRank ratio_and_rank(const FactorGraph& fg, const MapQuery& q, const Assignment& explanation,
                         const SolverOptions& options) {
  return GroundTruth(fg, q, options).ratio_and_rank(explanation);
}

// ---------------------------------------------------------------------------
// Protocol

void Protocol::validate() const {
  if (network.empty()) throw ValidationError("protocol names no network");
  if (draws == 0) throw ValidationError("draws must be at least 1");
  if (reps == 0) throw ValidationError("reps must be at least 1");
  if (solvers.empty()) throw ValidationError("solver list is empty");
  for (const auto& s : solvers) {
    if (std::find(kSolverNames.begin(), kSolverNames.end(), s) == kSolverNames.end()) {
      throw ValidationError("unknown solver '" + s + "'");
    }
  }
  if (relevance_samples == 0) throw ValidationError("relevance_samples must be at least 1");
  if (mfe_samples == 0) throw ValidationError("mfe_samples must be at least 1");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ValidationError("threshold must lie in [0, 1]");
  if (!(cell_budget > 0.0)) throw ValidationError("cell budget must be positive");
  schedule(1).validate();
}

AnnealSchedule Protocol::schedule(std::size_t hypothesis_size) const {
  AnnealSchedule s = default_schedule(hypothesis_size);
  if (anneal_t0) s.initial_temperature = *anneal_t0;
  if (anneal_rate) s.cooling_rate = *anneal_rate;
  if (anneal_steps) s.steps_per_temperature = *anneal_steps;
  if (anneal_tmin) s.min_temperature = *anneal_tmin;
  if (anneal_restarts) s.restarts = *anneal_restarts;
  return s;
}

namespace {

template <typename T>
T parse_value(const std::string& key, const std::string& text, std::size_t line) {
  T value{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ParseError("invalid value '" + text + "' for " + key, line, 1);
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text, std::size_t line) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ParseError("invalid boolean '" + text + "' for " + key, line, 1);
}

}  // namespace

Protocol parse_protocol(std::istream& in, const std::filesystem::path& base_dir) {
  Protocol p;
  std::string text;
  std::size_t line = 0;
  std::vector<std::string> seen;
  while (std::getline(in, text)) {
    ++line;
    if (const auto hash = text.find('#'); hash != std::string::npos) text.resize(hash);
    text = trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", line, 1);
    const std::string key = trim(std::string_view(text).substr(0, eq));
    const std::string value = trim(std::string_view(text).substr(eq + 1));
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) throw ParseError("duplicate key '" + key + "'", line, 1);
    seen.push_back(key);
    if (value.empty()) throw ParseError("empty value for " + key, line, eq + 2);
    if (key == "network") {
      const std::filesystem::path path(value);
      p.network = path.is_absolute() || base_dir.empty() ? path : base_dir / path;
    } else if (key == "hypothesis") {
      p.hypothesis = value;
    } else if (key == "evidence") {
      p.evidence = value;
    } else if (key == "draws") {
      p.draws = parse_value<std::size_t>(key, value, line);
    } else if (key == "reps") {
      p.reps = parse_value<std::size_t>(key, value, line);
    } else if (key == "solvers") {
      p.solvers = split(value, ',');
    } else if (key == "seed") {
      p.seed = parse_value<std::uint64_t>(key, value, line);
    } else if (key == "relevance_samples") {
      p.relevance_samples = parse_value<std::size_t>(key, value, line);
    } else if (key == "threshold") {
      p.threshold = parse_value<double>(key, value, line);
    } else if (key == "mfe_samples") {
      p.mfe_samples = parse_value<std::size_t>(key, value, line);
    } else if (key == "table") {
      if (value == "per-draw") {
        p.table_mode = TableMode::kPerDraw;
      } else if (value == "shared") {
        p.table_mode = TableMode::kShared;
      } else {
        throw ParseError("table must be per-draw or shared", line, eq + 2);
      }
    } else if (key == "evidence_dist") {
      if (value == "ancestral") {
        p.evidence_dist = EvidenceDist::kAncestral;
      } else if (value == "uniform") {
        p.evidence_dist = EvidenceDist::kUniform;
      } else {
        throw ParseError("evidence_dist must be ancestral or uniform", line, eq + 2);
      }
    } else if (key == "measure") {
      if (value == "uniform") {
        p.measure = SamplingMeasure::kUniform;
      } else if (value == "prior") {
        p.measure = SamplingMeasure::kPrior;
      } else {
        throw ParseError("measure must be uniform or prior", line, eq + 2);
      }
    } else if (key == "log_space") {
      if (value == "auto") {
        p.log_mode = LogMode::kAuto;
      } else if (value == "on") {
        p.log_mode = LogMode::kOn;
      } else if (value == "off") {
        p.log_mode = LogMode::kOff;
      } else {
        throw ParseError("log_space must be auto, on or off", line, eq + 2);
      }
    } else if (key == "cell_budget") {
      p.cell_budget = parse_value<double>(key, value, line);
    } else if (key == "epsilon") {
      p.epsilon = parse_value<double>(key, value, line);
    } else if (key == "anneal_t0") {
      p.anneal_t0 = parse_value<double>(key, value, line);
    } else if (key == "anneal_rate") {
      p.anneal_rate = parse_value<double>(key, value, line);
    } else if (key == "anneal_steps") {
      p.anneal_steps = parse_value<std::size_t>(key, value, line);
    } else if (key == "anneal_tmin") {
      p.anneal_tmin = parse_value<double>(key, value, line);
    } else if (key == "anneal_restarts") {
      p.anneal_restarts = parse_value<std::size_t>(key, value, line);
    } else if (key == "jobs") {
      p.jobs = parse_value<std::size_t>(key, value, line);
    } else if (key == "strict_timing") {
      p.strict_timing = parse_bool(key, value, line);
    } else {
      throw ParseError("unknown key '" + key + "'", line, 1);
    }
  }
  p.validate();
  return p;
}

Protocol load_protocol(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open protocol " + path.string());
  return parse_protocol(in, path.parent_path());
}

std::vector<VarId> natural_hypothesis(const Network& net) { return by_names(net, kAlarmHypothesis); }
std::vector<VarId> natural_evidence(const Network& net) { return by_names(net, kAlarmEvidence); }

std::vector<VarId> resolve_list(const std::vector<Variable>& vars, const std::string& spec) {
  std::vector<VarId> out;
  for (const auto& tok : split(spec, ',')) {
    auto it = std::find_if(vars.begin(), vars.end(), [&](const Variable& v) { return v.name == tok; });
    if (it != vars.end()) {
      out.push_back(it->id);
      continue;
    }
    VarId id = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), id);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size() || id >= vars.size()) {
      throw ValidationError("unknown variable '" + tok + "'");
    }
    out.push_back(id);
  }
  if (out.empty()) throw ValidationError("empty variable list");
  return out;
}

std::vector<VarId> resolve_hypothesis(const Network& net, const std::string& spec) {
  if (spec == "natural") return natural_hypothesis(net);
  if (spec == "roots") return net.roots();
  if (spec.rfind("roots:", 0) == 0) {
    const auto roots = net.roots();
    const std::string count = spec.substr(6);
    std::size_t k = 0;
    const auto res = std::from_chars(count.data(), count.data() + count.size(), k);
    if (res.ec != std::errc() || res.ptr != count.data() + count.size() || k == 0 || k > roots.size()) {
      throw ValidationError("'" + spec + "' needs 1 <= k <= " + std::to_string(roots.size()));
    }
    return {roots.begin(), roots.begin() + static_cast<std::ptrdiff_t>(k)};
  }
  return resolve_list(net.variables(), spec);
}

std::vector<VarId> resolve_evidence(const Network& net, const std::string& spec) {
  if (spec == "natural") return natural_evidence(net);
  if (spec == "leaves") return net.leaves();
  return resolve_list(net.variables(), spec);
}

// ---------------------------------------------------------------------------
// Running

std::string format_explanation(const std::vector<Variable>& vars, const Assignment& a) {
  std::string out;
  for (const auto& [v, s] : a) {
    if (!out.empty()) out += ';';
    const Variable& var = vars.at(v);
    out += var.name + '=' + var.states.at(s);
  }
  return out;
}

namespace {

std::size_t solver_stream(const std::string& name) {
  return static_cast<std::size_t>(std::find(kSolverNames.begin(), kSolverNames.end(), name) - kSolverNames.begin());
}

struct DrawContext {
  MapQuery query;
  std::optional<GroundTruth> truth;
  std::string truth_error;
  std::optional<Partition> table_partition;
  std::string table_error;
  std::uint64_t solver_seed = 0;
};

}  // namespace

std::vector<BenchRecord> run_protocol(const Protocol& p, BenchProgress progress) {
  p.validate();
  if (p.network.extension() != ".bif") {
    throw ValidationError("bench needs a .bif network so the determinism patch can be applied");
  }
  const Network net = load_bif(p.network);
  const FactorGraph fg = to_factor_graph(net);
  const FactorGraph patched = to_factor_graph(patch_determinism(net, p.epsilon));
  const std::string hash = content_hash(fg);
  const std::string patched_hash = content_hash(patched);

  MapQuery base;
  base.hypothesis = resolve_hypothesis(net, p.hypothesis);
  const auto evidence_vars = resolve_evidence(net, p.evidence);
  for (VarId v : evidence_vars) base.evidence.set(v, 0);
  base.validate(fg);

  const SolverOptions solver_options{p.log_mode, p.cell_budget};
  RelevanceOptions relevance_options{p.measure, solver_options, p.jobs};
  const AnnealSchedule schedule = p.schedule(base.hypothesis.size());
  const bool needs_table = std::any_of(p.solvers.begin(), p.solvers.end(),
                                       [](const std::string& s) { return s == "mfe+" || s == "mfe+a"; });
  const auto evidence = draw_evidence(fg, evidence_vars, p.draws, derive_seed(p.seed, streams::kEvidence),
                                      p.evidence_dist);

  auto say = [&](const std::string& msg) {
    if (progress.log) *progress.log << net.name() << ": " << msg << '\n' << std::flush;
  };

  std::optional<RelevanceTable> shared;
  if (needs_table && p.table_mode == TableMode::kShared) {
    MapQuery q = base;
    q.evidence = evidence.front();
    const auto start = Clock::now();
    shared = precompute_table(patched, q, p.relevance_samples, derive_seed(p.seed, streams::kRelevanceTable),
                              relevance_options, false);
    say("shared relevance table in " + shortest(seconds_since(start)) + " s");
  }

  std::vector<BenchRecord> records;
  for (std::size_t d = 0; d < p.draws; ++d) {
    DrawContext ctx;
    ctx.query.hypothesis = base.hypothesis;
    ctx.query.evidence = evidence[d];
    ctx.solver_seed = derive_seed(derive_seed(p.seed, streams::kSolver), d);
    try {
      ctx.truth.emplace(fg, ctx.query, solver_options);
    } catch (const Error& e) {
      ctx.truth_error = e.what();
    }
    double table_time = 0.0;
    if (needs_table) {
      try {
        const auto start = Clock::now();
        if (shared) {
          ctx.table_partition = partition_from_table(*shared, ctx.query, fg.size(), p.threshold);
        } else {
          const auto table = precompute_table(patched, ctx.query, p.relevance_samples,
                                              derive_seed(derive_seed(p.seed, streams::kRelevanceTable), d),
                                              relevance_options, true);
          ctx.table_partition = partition_from_table(table, ctx.query, fg.size(), p.threshold);
        }
        table_time = seconds_since(start);
      } catch (const Error& e) {
        ctx.table_error = e.what();
      }
    }
    say("draw " + std::to_string(d + 1) + "/" + std::to_string(p.draws) +
        (ctx.truth ? "" : " (no ground truth: " + ctx.truth_error + ")"));

    const std::size_t per_draw = p.reps * p.solvers.size();
    std::vector<BenchRecord> batch(per_draw);
    auto run_one = [&](std::size_t task) {
      const std::size_t rep = task / p.solvers.size();
      const std::string& solver = p.solvers[task % p.solvers.size()];
      BenchRecord& rec = batch[task];
      rec.network = net.name();
      rec.solver = solver;
      rec.draw = d;
      rec.rep = rep;
      const std::uint64_t seed = derive_seed(ctx.solver_seed, solver_stream(solver));
      const bool on_patched = solver != "map" && solver != "ann";
      rec.meta["network_hash"] = on_patched ? patched_hash : hash;
      try {
        MapResult r;
        MfeOptions mfe_options;
        mfe_options.samples = p.mfe_samples;
        mfe_options.measure = p.measure;
        mfe_options.solver = solver_options;
        if (solver == "map") {
          r = exact_map(fg, ctx.query, solver_options);
        } else if (solver == "ann") {
          r = annealed_map(fg, ctx.query, schedule, seed, solver_options);
        } else if (solver == "mfe") {
          // Timed as one call: the on-the-fly partition is part of the heuristic.
          const auto start = Clock::now();
          RelevanceOptions inline_options = relevance_options;
          inline_options.jobs = 1;
          const Partition part =
              on_the_fly_partition(patched, ctx.query, derive_seed(seed, streams::kOnTheFly), inline_options);
          const double relevance_time = seconds_since(start);
          r = sampled_mfe(patched, ctx.query, part, mfe_options, seed);
          r.wall_time = seconds_since(start);
          r.meta["relevance_time"] = shortest(relevance_time);
          r.meta["table"] = "on-the-fly";
        } else {
          if (!ctx.table_partition) throw Error("relevance table unavailable: " + ctx.table_error);
          if (solver == "mfe+a") {
            mfe_options.inner = InnerSolver::kAnneal;
            mfe_options.schedule = schedule;
          }
          r = sampled_mfe(patched, ctx.query, *ctx.table_partition, mfe_options, seed);
          r.meta["table"] = p.table_mode == TableMode::kShared ? "shared" : "per-draw";
          r.meta["table_time"] = shortest(table_time);
        }
        rec.wall_time = r.wall_time;
        rec.explanation = format_explanation(fg.variables, r.explanation);
        for (auto& [k, v] : r.meta) rec.meta[k] = v;
        if (ctx.truth) {
          rec.hamming = hamming(r.explanation, ctx.truth->map());
          const auto rr = ctx.truth->ratio_and_rank(r.explanation);
          rec.ratio = rr.ratio;
          rec.rank = rr.rank;
        } else {
          rec.meta["metrics"] = "unavailable";
        }
      } catch (const Error& e) {
        rec.error = e.what();
      }
    };
    detail::parallel_for(per_draw, p.strict_timing ? 1 : p.jobs, run_one);
    for (auto& r : batch) records.push_back(std::move(r));
  }
  return records;
}

// ---------------------------------------------------------------------------
// Reporting

std::vector<SummaryRow> summarize(const std::vector<BenchRecord>& records) {
  std::vector<SummaryRow> rows;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& rec : records) {
    auto it = std::find_if(rows.begin(), rows.end(),
                           [&](const SummaryRow& r) { return r.network == rec.network && r.solver == rec.solver; });
    if (it == rows.end()) {
      rows.push_back(SummaryRow{rec.network, rec.solver});
    }
  }
  for (auto& row : rows) {
    std::vector<double> times;
    double ham = 0.0, ratio = 0.0, rank = 0.0;
    std::size_t metric_count = 0;
    for (const auto& rec : records) {
      if (rec.network != row.network || rec.solver != row.solver) continue;
      ++row.records;
      if (!rec.error.empty()) {
        ++row.failures;
        continue;
      }
      times.push_back(rec.wall_time);
      if (rec.hamming) {
        ++metric_count;
        ham += static_cast<double>(*rec.hamming);
        ratio += *rec.ratio;
        rank += static_cast<double>(*rec.rank);
      }
    }
    if (times.empty()) {
      row.mean_time = row.sd_time = nan;
    } else {
      row.mean_time = std::accumulate(times.begin(), times.end(), 0.0) / static_cast<double>(times.size());
      double ss = 0.0;
      for (double t : times) ss += (t - row.mean_time) * (t - row.mean_time);
      row.sd_time = times.size() > 1 ? std::sqrt(ss / static_cast<double>(times.size() - 1)) : 0.0;
    }
    const double m = static_cast<double>(metric_count);
    row.mean_hamming = metric_count ? ham / m : nan;
    row.mean_ratio = metric_count ? ratio / m : nan;
    row.mean_rank = metric_count ? rank / m : nan;
  }
  return rows;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::string fixed(double x, int digits) {
  if (std::isnan(x)) return "nan";
  std::ostringstream out;
  out << std::fixed << std::setprecision(digits) << x;
  return out.str();
}

}  // namespace

void write_csv(const std::vector<BenchRecord>& records, std::ostream& out) {
  out << "network,solver,draw,rep,wall_time_s,hamming,ratio,rank,explanation,meta\n";
  for (const auto& r : records) {
    std::string meta;
    for (const auto& [k, v] : r.meta) {
      if (!meta.empty()) meta += ';';
      meta += k + '=' + v;
    }
    if (!r.error.empty()) meta += std::string(meta.empty() ? "" : ";") + "error=" + r.error;
    out << csv_field(r.network) << ',' << csv_field(r.solver) << ',' << r.draw << ',' << r.rep << ','
        << fixed(r.wall_time, 9) << ',' << (r.hamming ? std::to_string(*r.hamming) : "") << ','
        << (r.ratio ? shortest(*r.ratio) : "") << ',' << (r.rank ? std::to_string(*r.rank) : "") << ','
        << csv_field(r.explanation) << ',' << csv_field(meta) << '\n';
  }
}

void write_summary(const std::vector<SummaryRow>& rows, std::ostream& out) {
  out << "network,solver,records,failures,mean_wall_time_s,sd_wall_time_s,mean_hamming,mean_ratio,mean_rank\n";
  for (const auto& r : rows) {
    out << csv_field(r.network) << ',' << csv_field(r.solver) << ',' << r.records << ',' << r.failures << ','
        << fixed(r.mean_time, 6) << ',' << fixed(r.sd_time, 6) << ',' << fixed(r.mean_hamming, 4) << ','
        << fixed(r.mean_ratio, 4) << ',' << fixed(r.mean_rank, 4) << '\n';
  }
}

void write_grid(const std::vector<SummaryRow>& rows, std::ostream& out) {
  std::vector<std::string> networks;
  std::vector<std::string> solvers;
  for (const auto& r : rows) {
    if (std::find(networks.begin(), networks.end(), r.network) == networks.end()) networks.push_back(r.network);
    if (std::find(solvers.begin(), solvers.end(), r.solver) == solvers.end()) solvers.push_back(r.solver);
  }
  out << std::left << std::setw(8) << "";
  for (const auto& n : networks) out << " | " << std::setw(21) << n;
  out << '\n' << std::setw(8) << "";
  for (std::size_t i = 0; i < networks.size(); ++i) out << " | " << std::setw(12) << "RT" << std::setw(9) << "Err";
  out << '\n';
  for (const auto& s : solvers) {
    out << std::setw(8) << s;
    for (const auto& n : networks) {
      auto it = std::find_if(rows.begin(), rows.end(),
                             [&](const SummaryRow& r) { return r.network == n && r.solver == s; });
      if (it == rows.end()) {
        out << " | " << std::setw(21) << "";
        continue;
      }
      out << " | " << std::setw(12) << fixed(it->mean_time, 4) << std::setw(9)
          << (s == "map" ? std::string("-") : fixed(it->mean_hamming, 2));
    }
    out << '\n';
  }
  out << std::right;
}

void report(const std::vector<BenchRecord>& records, std::ostream& out) {
  write_csv(records, out);
  const auto rows = summarize(records);
  out << "\n# summary\n";
  write_summary(rows, out);
  out << "\n# grid\n";
  write_grid(rows, out);
}

}  // namespace mfe
