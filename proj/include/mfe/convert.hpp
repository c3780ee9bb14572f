#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <string>

#include "mfe/model.hpp"

namespace mfe {

inline constexpr double kDefaultPatchEpsilon = 1e-9;

// Replaces every zero CPT entry by `epsilon` and removes the injected mass
// from the row's maximal entries, split equally among ties. Rows without
// zeros are untouched, so the operation is idempotent.
Network patch_determinism(const Network& net, double epsilon = kDefaultPatchEpsilon);

// One factor per CPT, scope (parents..., child).
FactorGraph to_factor_graph(const Network& net);

// Text factor-graph format: factor count, then per factor (after a blank
// line) scope size, scope ids, cardinalities, number of stored entries and
// `index value` lines. File indices run with the first scope variable
// fastest; only non-zero entries are stored. Values use the shortest
// representation that round-trips exactly.
void write_fg(const FactorGraph& fg, std::ostream& out);
std::string write_fg(const FactorGraph& fg);
FactorGraph read_fg(std::istream& in);
FactorGraph read_fg(const std::string& text);
FactorGraph load_fg(const std::filesystem::path& path);

// FNV-1a 64 of the serialised factor graph, as 16 hex digits. Used to tie
// relevance tables and bench output to the exact model they came from.
std::string content_hash(const FactorGraph& fg);

}  // namespace mfe
