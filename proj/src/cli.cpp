#include "mfe/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include "mfe/bench.hpp"
#include "mfe/bif.hpp"
#include "mfe/convert.hpp"
#include "mfe/errors.hpp"
#include "mfe/relevance.hpp"
#include "mfe/solvers.hpp"

namespace mfe::cli {
namespace {

constexpr std::uint64_t kDefaultSeed = 1;

// Flags shared by several subcommands.
struct EngineFlags {
  std::string log_space = "auto";
  double cell_budget = kDefaultCellBudget;

  void add(CLI::App& app) {
    app.add_option("--log-space", log_space,
                   "Compute in log space: auto (networks over 100 variables), on, off")
        ->check(CLI::IsMember({"auto", "on", "off"}))
        ->capture_default_str();
    app.add_option("--cell-budget", cell_budget,
                   "Largest factor, in cells, elimination may build before failing with a resource error")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  }

  LogMode mode() const { return log_space == "on" ? LogMode::kOn : log_space == "off" ? LogMode::kOff : LogMode::kAuto; }
  SolverOptions options() const { return SolverOptions{mode(), cell_budget}; }
};

struct PatchFlags {
  std::string patch = "auto";
  double epsilon = kDefaultPatchEpsilon;

  void add(CLI::App& app, const std::string& auto_meaning) {
    app.add_option("--patch", patch,
                   "Replace zero CPT entries before solving (.bif input only): auto (" + auto_meaning + "), on, off")
        ->check(CLI::IsMember({"auto", "on", "off"}))
        ->capture_default_str();
    add_epsilon(app);
  }
  void add_epsilon(CLI::App& app) {
    app.add_option("--epsilon", epsilon, "Value substituted for zero CPT entries by the determinism patch, in (0, 1e-3]")
        ->capture_default_str();
  }
};

struct ScheduleFlags {
  std::optional<double> t0, rate, tmin;
  std::optional<std::size_t> steps, restarts;

  void add(CLI::App& app) {
    app.add_option("--t0", t0, "Annealing initial temperature (default 2.0)");
    app.add_option("--rate", rate, "Annealing geometric cooling rate in (0, 1) (default 0.9)");
    app.add_option("--steps", steps, "Annealing steps per temperature level (default 10 x |H|)");
    app.add_option("--tmin", tmin, "Annealing stops below this temperature (default 0.02)");
    app.add_option("--restarts", restarts, "Annealing restarts after the first run (default 2)");
  }

  AnnealSchedule schedule(std::size_t h) const {
    AnnealSchedule s = default_schedule(h);
    if (t0) s.initial_temperature = *t0;
    if (rate) s.cooling_rate = *rate;
    if (steps) s.steps_per_temperature = *steps;
    if (tmin) s.min_temperature = *tmin;
    if (restarts) s.restarts = *restarts;
    s.validate();
    return s;
  }
};

SamplingMeasure parse_measure(const std::string& s) {
  return s == "prior" ? SamplingMeasure::kPrior : SamplingMeasure::kUniform;
}

struct Input {
  std::optional<Network> net;
  FactorGraph fg;
};

bool is_bif(const std::string& path) { return std::filesystem::path(path).extension() == ".bif"; }

Input load_input(const std::string& path, bool patch, double epsilon) {
  Input in;
  if (is_bif(path)) {
    in.net = load_bif(path);
    in.fg = to_factor_graph(patch ? patch_determinism(*in.net, epsilon) : *in.net);
  } else {
    in.fg = load_fg(path);
  }
  return in;
}

// auto -> `when_auto`; on with .fg input is an error.
bool wants_patch(const PatchFlags& flags, const std::string& path, bool when_auto) {
  if (flags.patch == "off") return false;
  if (!is_bif(path)) {
    if (flags.patch == "on") throw ValidationError("the determinism patch needs .bif input");
    return false;
  }
  return flags.patch == "on" || when_auto;
}

std::vector<VarId> resolve_h(const Input& in, const std::string& spec) {
  return in.net ? resolve_hypothesis(*in.net, spec) : resolve_list(in.fg.variables, spec);
}

std::vector<VarId> resolve_e(const Input& in, const std::string& spec) {
  return in.net ? resolve_evidence(*in.net, spec) : resolve_list(in.fg.variables, spec);
}

// "var=state,var=state" with names or ids on both sides.
Assignment parse_evidence(const std::vector<Variable>& vars, const std::string& spec) {
  Assignment e;
  std::string item;
  std::istringstream in(spec);
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ValidationError("evidence item '" + item + "' is not var=state");
    const VarId v = resolve_list(vars, item.substr(0, eq)).front();
    const std::string label = item.substr(eq + 1);
    const auto& states = vars[v].states;
    auto it = std::find(states.begin(), states.end(), label);
    std::size_t s = 0;
    if (it != states.end()) {
      s = static_cast<std::size_t>(it - states.begin());
    } else {
      const auto res = std::from_chars(label.data(), label.data() + label.size(), s);
      if (res.ec != std::errc() || res.ptr != label.data() + label.size() || s >= states.size()) {
        throw ValidationError("unknown state '" + label + "' of " + vars[v].name);
      }
    }
    if (e.contains(v)) throw ValidationError("evidence lists " + vars[v].name + " twice");
    e.set(v, static_cast<State>(s));
  }
  return e;
}

void print_result(const MapResult& r, const std::vector<Variable>& vars, std::ostream& out) {
  out << "solver: " << r.solver << '\n';
  out << "explanation: " << format_explanation(vars, r.explanation) << '\n';
  out << std::setprecision(17);
  out << "score: " << r.score << '\n';
  out << "log_score: " << r.log_score << '\n';
  out << "log_space: " << (r.log_space ? "on" : "off") << '\n';
  out << std::setprecision(6);
  out << "wall_time_s: " << r.wall_time << '\n';
  for (const auto& [k, v] : r.meta) out << "meta." << k << ": " << v << '\n';
}

// --- subcommands -----------------------------------------------------------

struct ConvertCmd {
  std::string input, output;
  PatchFlags patch;
  bool patch_flag = false;

  void add(CLI::App& app) {
    auto* sub = app.add_subcommand("convert", "Convert a BIF network into a libDAI-style .fg factor graph");
    sub->add_option("input", input, "Input .bif file")->required()->check(CLI::ExistingFile);
    sub->add_option("output", output, "Output .fg file")->required();
    sub->add_flag("--patch-determinism", patch_flag, "Replace zero CPT entries by epsilon before writing");
    patch.add_epsilon(*sub);
    sub->callback([this] { run(); });
  }

  void run() {
    const Network net = load_bif(input);
    const FactorGraph fg = to_factor_graph(patch_flag ? patch_determinism(net, patch.epsilon) : net);
    std::ofstream out(output, std::ios::binary);
    if (!out) throw Error("cannot write " + output);
    write_fg(fg, out);
    if (!out) throw Error("cannot write " + output);
  }
};

struct RelevanceCmd {
  std::string network, hypothesis, evidence_vars, evidence, out_path, measure = "uniform";
  std::size_t samples = 1000;
  std::uint64_t seed = kDefaultSeed;
  std::size_t jobs = 0;
  EngineFlags engine;
  PatchFlags patch;
  std::ostream* out = nullptr;

  void add(CLI::App& app, std::ostream& o) {
    out = &o;
    auto* sub = app.add_subcommand("relevance", "Estimate intrinsic relevance of every intermediate variable");
    sub->add_option("network", network, "Network (.bif or .fg)")->required()->check(CLI::ExistingFile);
    sub->add_option("--hypothesis", hypothesis, "Hypothesis variables: natural, roots:K or a comma list")
        ->required();
    sub->add_option("--evidence-vars", evidence_vars, "Evidence variables: natural, leaves or a comma list")
        ->required();
    sub->add_option("--evidence", evidence,
                    "Evidence values var=state,...; builds a table for these values instead of averaging over "
                    "ancestrally drawn evidence");
    sub->add_option("--samples", samples, "Samples per variable")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--seed", seed, "Seed")->capture_default_str();
    sub->add_option("--measure", measure, "Sampling measure over the other intermediates: uniform or prior")
        ->check(CLI::IsMember({"uniform", "prior"}))
        ->capture_default_str();
    sub->add_option("--jobs", jobs, "Worker threads (0 = all cores)")->capture_default_str();
    sub->add_option("--out", out_path, "Output table path")->required();
    engine.add(*sub);
    patch.add(*sub, "on for .bif input, matching the MFE solvers");
    sub->callback([this] { run(); });
  }

  void run() {
    const Input in = load_input(network, wants_patch(patch, network, true), patch.epsilon);
    MapQuery q;
    q.hypothesis = resolve_h(in, hypothesis);
    const auto e_vars = resolve_e(in, evidence_vars);
    const bool per_evidence = !evidence.empty();
    if (per_evidence) {
      q.evidence = parse_evidence(in.fg.variables, evidence);
      auto sorted_vars = e_vars;
      std::sort(sorted_vars.begin(), sorted_vars.end());
      if (q.evidence.variables() != sorted_vars) {
        throw ValidationError("--evidence must assign exactly the --evidence-vars");
      }
    } else {
      for (VarId v : e_vars) q.evidence.set(v, 0);
    }
    RelevanceOptions options{parse_measure(measure), engine.options(), jobs};
    const auto table = precompute_table(in.fg, q, samples, seed, options, per_evidence);
    std::ofstream file(out_path);
    if (!file) throw Error("cannot write " + out_path);
    write_table(table, file);
    std::size_t positive = 0;
    for (const auto& e : table.estimates) positive += e.flips > 0 ? 1 : 0;
    *out << "intermediates: " << table.estimates.size() << '\n'
         << "with_flips: " << positive << '\n'
         << "low_budget: " << (table.low_budget() ? "yes" : "no") << '\n'
         << "network_hash: " << table.network_hash << '\n';
  }
};

struct SolveCmd {
  std::string network, solver = "map", hypothesis, evidence, table_path, measure = "uniform";
  double threshold = 0.1;
  std::size_t n_samples = 1;
  std::uint64_t seed = kDefaultSeed;
  EngineFlags engine;
  PatchFlags patch;
  ScheduleFlags schedule;
  std::ostream* out = nullptr;

  void add(CLI::App& app, std::ostream& o) {
    out = &o;
    auto* sub = app.add_subcommand("solve", "Solve one MAP query");
    sub->add_option("network", network, "Network (.bif or .fg)")->required()->check(CLI::ExistingFile);
    sub->add_option("--solver", solver, "map, ann, mfe, mfe+ or mfe+a")
        ->check(CLI::IsMember({"map", "ann", "mfe", "mfe+", "mfe+a"}))
        ->capture_default_str();
    sub->add_option("--hypothesis", hypothesis, "Hypothesis variables: natural, roots:K or a comma list")
        ->required();
    sub->add_option("--evidence", evidence, "Evidence var=state,... (names or ids)");
    sub->add_option("--table", table_path, "Relevance table (required by mfe+ and mfe+a)");
    sub->add_option("--threshold", threshold, "Relevance threshold: variables at or above it are marginalised")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    sub->add_option("--n-samples", n_samples, "Sampled-MFE iterations")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--seed", seed, "Seed")->capture_default_str();
    sub->add_option("--measure", measure, "Sampling measure for irrelevant intermediates: uniform or prior")
        ->check(CLI::IsMember({"uniform", "prior"}))
        ->capture_default_str();
    engine.add(*sub);
    patch.add(*sub, "on for the MFE solvers with .bif input");
    schedule.add(*sub);
    sub->callback([this] { run(); });
  }

  void run() {
    const bool mfe_family = solver.rfind("mfe", 0) == 0;
    if ((solver == "mfe+" || solver == "mfe+a") && table_path.empty()) {
      throw CLI::ValidationError("--table", "required by " + solver);
    }
    const Input in = load_input(network, wants_patch(patch, network, mfe_family), patch.epsilon);
    MapQuery q;
    q.hypothesis = resolve_h(in, hypothesis);
    q.evidence = parse_evidence(in.fg.variables, evidence);
    q.validate(in.fg);
    const SolverOptions options = engine.options();
    MfeOptions mfe_options;
    mfe_options.samples = n_samples;
    mfe_options.measure = parse_measure(measure);
    mfe_options.solver = options;

    MapResult r;
    if (solver == "map") {
      r = exact_map(in.fg, q, options);
    } else if (solver == "ann") {
      r = annealed_map(in.fg, q, schedule.schedule(q.hypothesis.size()), seed, options);
    } else if (solver == "mfe") {
      const auto start = std::chrono::steady_clock::now();
      RelevanceOptions ropts{mfe_options.measure, options, 1};
      const Partition part = on_the_fly_partition(in.fg, q, derive_seed(seed, streams::kOnTheFly), ropts);
      r = sampled_mfe(in.fg, q, part, mfe_options, seed);
      r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    } else {
      const RelevanceTable table = load_table(table_path, content_hash(in.fg));
      const Partition part = partition_from_table(table, q, in.fg.size(), threshold);
      if (solver == "mfe+a") {
        mfe_options.inner = InnerSolver::kAnneal;
        mfe_options.schedule = schedule.schedule(q.hypothesis.size());
      }
      r = sampled_mfe(in.fg, q, part, mfe_options, seed);
    }
    print_result(r, in.fg.variables, *out);
  }
};

struct BenchCmd {
  std::string protocol_path, network, hypothesis, evidence, solvers, table_mode, evidence_dist, measure, out_path;
  std::size_t draws = 0, reps = 0, relevance_samples = 0, mfe_samples = 0, jobs = 0;
  std::uint64_t seed = 0;
  double threshold = 0.0, epsilon = 0.0;
  bool strict_timing = true;
  bool quiet = false;
  EngineFlags engine;
  ScheduleFlags schedule;
  CLI::App* sub = nullptr;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;

  void add(CLI::App& app, std::ostream& o, std::ostream& e) {
    out = &o;
    err = &e;
    sub = app.add_subcommand("bench", "Run an experiment protocol and report timings and errors");
    sub->add_option("--protocol", protocol_path, "Protocol file (key = value lines); flags below override it")
        ->check(CLI::ExistingFile);
    sub->add_option("--network", network, "Network .bif file");
    sub->add_option("--hypothesis", hypothesis, "natural, roots:K or a comma list (default natural)");
    sub->add_option("--evidence", evidence, "natural, leaves or a comma list (default natural)");
    sub->add_option("--draws", draws, "Evidence draws (default 10)");
    sub->add_option("--reps", reps, "Repetitions per draw (default 5)");
    sub->add_option("--solvers", solvers, "Comma list of map, ann, mfe, mfe+, mfe+a (default map,ann,mfe,mfe+)");
    sub->add_option("--seed", seed, "Seed (default 1)");
    sub->add_option("--relevance-samples", relevance_samples, "Samples per variable for relevance tables (default 1000)");
    sub->add_option("--threshold", threshold, "Relevance threshold for mfe+ and mfe+a (default 0.1)");
    sub->add_option("--mfe-samples", mfe_samples, "Sampled-MFE iterations (default 1)");
    sub->add_option("--table-mode", table_mode, "Relevance tables per-draw or shared (default per-draw)")
        ->check(CLI::IsMember({"per-draw", "shared"}));
    sub->add_option("--evidence-dist", evidence_dist, "Evidence distribution: ancestral or uniform (default ancestral)")
        ->check(CLI::IsMember({"ancestral", "uniform"}));
    sub->add_option("--measure", measure, "Sampling measure for intermediates: uniform or prior (default uniform)")
        ->check(CLI::IsMember({"uniform", "prior"}));
    sub->add_option("--epsilon", epsilon, "Determinism patch value for the MFE solvers (default 1e-9)");
    sub->add_option("--jobs", jobs, "Worker threads (0 = all cores)");
    sub->add_flag("--strict-timing,!--no-strict-timing", strict_timing,
                  "Serialise timed solver runs (default on)");
    sub->add_option("--out", out_path, "Write the CSV report here instead of stdout");
    sub->add_flag("--quiet", quiet, "No progress on stderr");
    engine.add(*sub);
    schedule.add(*sub);
    sub->callback([this] { run(); });
  }

  bool given(const char* name) const { return sub->count(name) > 0; }

  void run() {
    Protocol p;
    if (!protocol_path.empty()) p = load_protocol(protocol_path);
    if (given("--network")) p.network = network;
    if (p.network.empty()) throw CLI::ValidationError("--network", "needed without --protocol");
    if (given("--hypothesis")) p.hypothesis = hypothesis;
    if (given("--evidence")) p.evidence = evidence;
    if (given("--draws")) p.draws = draws;
    if (given("--reps")) p.reps = reps;
    if (given("--solvers")) {
      p.solvers.clear();
      std::istringstream in(solvers);
      for (std::string s; std::getline(in, s, ',');) {
        if (!s.empty()) p.solvers.push_back(s);
      }
    }
    if (given("--seed")) p.seed = seed;
    if (given("--relevance-samples")) p.relevance_samples = relevance_samples;
    if (given("--threshold")) p.threshold = threshold;
    if (given("--mfe-samples")) p.mfe_samples = mfe_samples;
    if (given("--table-mode")) p.table_mode = table_mode == "shared" ? TableMode::kShared : TableMode::kPerDraw;
    if (given("--evidence-dist")) {
      p.evidence_dist = evidence_dist == "uniform" ? EvidenceDist::kUniform : EvidenceDist::kAncestral;
    }
    if (given("--measure")) p.measure = parse_measure(measure);
    if (given("--epsilon")) p.epsilon = epsilon;
    if (given("--jobs")) p.jobs = jobs;
    if (given("--strict-timing") || given("--no-strict-timing")) p.strict_timing = strict_timing;
    if (given("--log-space")) p.log_mode = engine.mode();
    if (given("--cell-budget")) p.cell_budget = engine.cell_budget;
    if (schedule.t0) p.anneal_t0 = schedule.t0;
    if (schedule.rate) p.anneal_rate = schedule.rate;
    if (schedule.steps) p.anneal_steps = schedule.steps;
    if (schedule.tmin) p.anneal_tmin = schedule.tmin;
    if (schedule.restarts) p.anneal_restarts = schedule.restarts;
    p.validate();

    const auto records = run_protocol(p, BenchProgress{quiet ? nullptr : err});
    if (out_path.empty()) {
      report(records, *out);
      return;
    }
    std::ofstream file(out_path);
    if (!file) throw Error("cannot write " + out_path);
    report(records, file);
    const auto rows = summarize(records);
    write_summary(rows, *out);
    *out << '\n';
    write_grid(rows, *out);
  }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian-network MAP solvers, Most Frugal Explanation heuristics and benchmark harness", "mfe"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "mfe 1.0.0");
  ConvertCmd convert;
  RelevanceCmd relevance;
  SolveCmd solve;
  BenchCmd bench;
  convert.add(app);
  relevance.add(app, out);
  solve.add(app, out);
  bench.add(app, out, err);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  } catch (const mfe::ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kParse;
  } catch (const mfe::ValidationError& e) {
    err << "invalid input: " << e.what() << '\n';
    return kValidation;
  } catch (const mfe::ResourceError& e) {
    err << "resource limit: " << e.what() << '\n';
    return kResource;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}

}  // namespace mfe::cli
