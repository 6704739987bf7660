#pragma once

#include <cstddef>

#include "ikf/geom/polytope.hpp"
#include "ikf/nn/mlp.hpp"
#include "ikf/rules/rules.hpp"

namespace ikf::rules {

struct ExtractConfig {
  std::size_t max_hidden_units = 24;
  // Drop halfspaces that do not bound the final region.
  bool minimize_regions = true;
  // Regions whose inscribed ball radius is not above this are discarded.
  double min_radius = 1e-7;
  Source source = Source::receiver;
};

// Upper bound on the number of linear regions: product over hidden layers of
// sum_{i <= d} C(n_k, i) with d the input dimension.
double estimate_pattern_count(const nn::Mlp& net);

// Enumerates feasible activation patterns layer by layer and unit by unit,
// pruning empty cells with an LP, then splits each cell by the head decision.
// Rules are sorted by (pattern, decision).
RuleSet extract_rules(const nn::Mlp& net, const geom::Box& box, const ExtractConfig& cfg = {});

// Single-threaded depth-first reference for extract_rules.
RuleSet extract_rules_serial(const nn::Mlp& net, const geom::Box& box, const ExtractConfig& cfg = {});

}  // namespace ikf::rules
