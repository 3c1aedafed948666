#pragma once

#include <functional>
#include <string>
#include <vector>

namespace rsm::props {

struct PropertyResult {
  std::string name;
  bool ok = false;
  std::string detail;
};

// Each check is self-contained and deterministic.
PropertyResult finite_difference_suite();
PropertyResult grid_fuzz();
PropertyResult balls_fuzz();
PropertyResult cci_permutation_invariance();
PropertyResult gumbel_properties();
PropertyResult loss_and_hits_oracles();
PropertyResult residual_identity();
PropertyResult sequential_parallel_probe();
PropertyResult round_trips();

std::vector<PropertyResult> run_all();

}  // namespace rsm::props
