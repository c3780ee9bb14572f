#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mfe/convert.hpp"
#include "mfe/engine.hpp"
#include "mfe/model.hpp"
#include "mfe/relevance.hpp"
#include "mfe/solvers.hpp"

namespace mfe {

enum class EvidenceDist { kAncestral, kUniform };

// `n` evidence assignments over `evidence_vars`. Ancestral draws restrict a
// forward sample of the whole network; uniform draws are redrawn until
// Pr(e) > 0 and fail with ValidationError after many zero-probability tries.
std::vector<Assignment> draw_evidence(const FactorGraph& fg, std::span<const VarId> evidence_vars, std::size_t n,
                                      std::uint64_t seed, EvidenceDist dist = EvidenceDist::kAncestral);
std::vector<Assignment> draw_evidence(const Network& net, std::span<const VarId> evidence_vars, std::size_t n,
                                      std::uint64_t seed, EvidenceDist dist = EvidenceDist::kAncestral);

// Positions where the two explanations disagree; both must cover the same
// variables.
std::size_t hamming(const Assignment& a, const Assignment& b);

struct RatioRank {
  double ratio = 0.0;
  // 1 + number of h with Pr(h, e) strictly greater.
  std::size_t rank = 0;
};

// Joint over H given e, materialised once and reused for every candidate.
class GroundTruth {
 public:
  GroundTruth(const FactorGraph& fg, const MapQuery& q, const SolverOptions& options = {});

  const Assignment& map() const noexcept { return map_; }
  double map_log_score() const noexcept { return map_log_; }
  RatioRank ratio_and_rank(const Assignment& explanation) const;

 private:
  JointTable table_;
  Assignment map_;
  double map_log_ = 0.0;
};

RatioRank ratio_and_rank(const FactorGraph& fg, const MapQuery& q, const Assignment& explanation,
                         const SolverOptions& options = {});

// --- protocol --------------------------------------------------------------

enum class TableMode { kPerDraw, kShared };

struct Protocol {
  std::filesystem::path network;
  // "natural", "roots:K", or a comma-separated list of names or ids.
  std::string hypothesis = "natural";
  // "natural", "leaves", or a list.
  std::string evidence = "natural";
  std::size_t draws = 10;
  std::size_t reps = 5;
  std::vector<std::string> solvers = {"map", "ann", "mfe", "mfe+"};
  std::uint64_t seed = 1;
  std::size_t relevance_samples = 1000;
  double threshold = 0.1;
  std::size_t mfe_samples = 1;
  TableMode table_mode = TableMode::kPerDraw;
  EvidenceDist evidence_dist = EvidenceDist::kAncestral;
  SamplingMeasure measure = SamplingMeasure::kUniform;
  LogMode log_mode = LogMode::kAuto;
  double cell_budget = kDefaultCellBudget;
  double epsilon = kDefaultPatchEpsilon;
  // Unset fields fall back to default_schedule(|H|).
  std::optional<double> anneal_t0;
  std::optional<double> anneal_rate;
  std::optional<std::size_t> anneal_steps;
  std::optional<double> anneal_tmin;
  std::optional<std::size_t> anneal_restarts;
  std::size_t jobs = 0;
  bool strict_timing = true;

  void validate() const;
  AnnealSchedule schedule(std::size_t hypothesis_size) const;
};

inline const std::vector<std::string> kSolverNames = {"map", "ann", "mfe", "mfe+", "mfe+a"};

// `key = value` lines; '#' starts a comment. Relative network paths resolve
// against `base_dir`.
Protocol parse_protocol(std::istream& in, const std::filesystem::path& base_dir = {});
Protocol load_protocol(const std::filesystem::path& path);

// Alarm's eight diagnostic, sixteen finding variables.
std::vector<VarId> natural_hypothesis(const Network& net);
std::vector<VarId> natural_evidence(const Network& net);

std::vector<VarId> resolve_hypothesis(const Network& net, const std::string& spec);
std::vector<VarId> resolve_evidence(const Network& net, const std::string& spec);
// Comma-separated names or ids.
std::vector<VarId> resolve_list(const std::vector<Variable>& vars, const std::string& spec);

struct BenchRecord {
  std::string network;
  std::string solver;
  std::size_t draw = 0;
  std::size_t rep = 0;
  double wall_time = 0.0;
  // Absent when the solver or the ground truth failed.
  std::optional<std::size_t> hamming;
  std::optional<double> ratio;
  std::optional<std::size_t> rank;
  std::string explanation;  // var=state;var=state
  std::map<std::string, std::string> meta;
  std::string error;
};

struct BenchProgress {
  std::ostream* log = nullptr;
};

std::vector<BenchRecord> run_protocol(const Protocol& p, BenchProgress progress = {});

struct SummaryRow {
  std::string network;
  std::string solver;
  std::size_t records = 0;
  std::size_t failures = 0;
  double mean_time = 0.0;
  double sd_time = 0.0;
  // Over records carrying metrics; NaN when none do.
  double mean_hamming = 0.0;
  double mean_ratio = 0.0;
  double mean_rank = 0.0;
};

// One row per (network, solver) in first-appearance order.
std::vector<SummaryRow> summarize(const std::vector<BenchRecord>& records);

std::string format_explanation(const std::vector<Variable>& vars, const Assignment& a);
void write_csv(const std::vector<BenchRecord>& records, std::ostream& out);
void write_summary(const std::vector<SummaryRow>& rows, std::ostream& out);
// Solvers as rows, networks as RT / Err column pairs.
void write_grid(const std::vector<SummaryRow>& rows, std::ostream& out);
// CSV, blank line, summary block, blank line, grid.
void report(const std::vector<BenchRecord>& records, std::ostream& out);

}  // namespace mfe
