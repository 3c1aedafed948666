#pragma once

#include <string>
#include <vector>

#include "rsm/eval.hpp"

namespace rsm {

struct AggregateRow {
  std::string env;
  std::string variant;
  std::string split;
  std::vector<int> horizons;
  std::vector<double> mean;
  std::vector<double> stderr_;  // sample standard deviation / sqrt(n); 0 for n = 1
  int runs = 0;
};

// Groups reports by (env, variant, split); every report in a group must
// share the same horizons.
std::vector<AggregateRow> aggregate_reports(const std::vector<EvalReport>& reports);
// One line per group, `mean ± stderr` per horizon.
std::string render_table(const std::vector<AggregateRow>& rows);
std::string render_csv(const std::vector<AggregateRow>& rows);
// Target-slot mechanism counts per direction with the plurality marked.
std::string render_usage(const MechanismUsage& usage);

}  // namespace rsm
