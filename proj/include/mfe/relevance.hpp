#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mfe/errors.hpp"
#include "mfe/model.hpp"
#include "mfe/random.hpp"
#include "mfe/solvers.hpp"

namespace mfe {

struct RelevanceEstimate {
  VarId variable = 0;
  std::size_t samples = 0;
  std::size_t flips = 0;
  double relevance = 0.0;  // flips / samples
};

// Direct enumeration of Ω(H) is used up to this many joint states; larger
// hypothesis spaces go through max-product elimination with traceback.
inline constexpr double kDirectArgmaxLimit = 4096.0;

// Tables built with fewer samples per variable than this are flagged.
inline constexpr std::size_t kLowBudget = 100;

struct RelevanceOptions {
  SamplingMeasure measure = SamplingMeasure::kUniform;
  SolverOptions solver;
  // Worker threads for per-variable estimates; 0 means hardware concurrency.
  std::size_t jobs = 0;
};

// Intrinsic relevance of `target` for the query. Each sample draws the other
// intermediates; `target` flips when the tie-broken argmax over H is not the
// same for all of its states. When `evidence_values` is false the evidence
// values are redrawn ancestrally per sample, so the estimate is averaged over
// evidence.
RelevanceEstimate estimate_relevance(const FactorGraph& fg, const MapQuery& q, VarId target, std::size_t samples,
                                     std::uint64_t seed, const RelevanceOptions& options = {},
                                     bool evidence_values = true);

struct RelevanceTable {
  std::string network_hash;
  std::vector<VarId> hypothesis;
  std::vector<VarId> evidence;
  // Present when the table was built for specific evidence values.
  std::optional<std::vector<State>> evidence_values;
  std::size_t budget = 0;
  std::uint64_t seed = 0;
  SamplingMeasure measure = SamplingMeasure::kUniform;
  std::vector<RelevanceEstimate> estimates;  // sorted by variable id

  bool low_budget() const { return budget < kLowBudget; }
  const RelevanceEstimate* find(VarId v) const;
  // Throws ValidationError unless the table matches the query's variables
  // and covers its intermediates exactly once.
  void check_query(const MapQuery& q, std::size_t num_vars) const;
};

// Every intermediate estimated with stream derive_seed(seed, variable).
// `per_evidence` fixes the evidence values of `q`; otherwise they are
// averaged over.
RelevanceTable precompute_table(const FactorGraph& fg, const MapQuery& q, std::size_t samples_per_variable,
                                std::uint64_t seed, const RelevanceOptions& options = {}, bool per_evidence = true);

// I+ = relevance >= threshold.
Partition partition_from_table(const RelevanceTable& table, const MapQuery& q, std::size_t num_vars,
                               double threshold);

inline constexpr std::size_t kOnTheFlySamples = 3;

// Three samples per intermediate; I+ = variables with any flip.
Partition on_the_fly_partition(const FactorGraph& fg, const MapQuery& q, std::uint64_t seed,
                               const RelevanceOptions& options = {});

class StaleTableError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

void write_table(const RelevanceTable& table, std::ostream& out);
std::string write_table(const RelevanceTable& table);
RelevanceTable read_table(std::istream& in);
RelevanceTable read_table(const std::string& text);
// Throws StaleTableError when the table was built for another network.
RelevanceTable load_table(const std::filesystem::path& path, const std::string& expected_hash);

}  // namespace mfe
