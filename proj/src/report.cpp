#include "rsm/report.hpp"

#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>
#include <tuple>

namespace rsm {

std::vector<AggregateRow> aggregate_reports(const std::vector<EvalReport>& reports) {
  std::map<std::tuple<std::string, std::string, std::string>, std::vector<const EvalReport*>> groups;
  for (const auto& r : reports) groups[{r.env, r.variant, r.split}].push_back(&r);
  std::vector<AggregateRow> rows;
  for (const auto& [key, members] : groups) {
    AggregateRow row;
    std::tie(row.env, row.variant, row.split) = key;
    row.horizons = members.front()->horizons;
    row.runs = static_cast<int>(members.size());
    for (const auto* m : members) {
      if (m->horizons != row.horizons) {
        throw ValidationError("reports for " + row.env + "/" + row.variant + "/" + row.split +
                              " use different horizons");
      }
    }
    for (std::size_t h = 0; h < row.horizons.size(); ++h) {
      double sum = 0.0;
      for (const auto* m : members) sum += m->hits[h];
      const double mean = sum / row.runs;
      double ss = 0.0;
      for (const auto* m : members) ss += (m->hits[h] - mean) * (m->hits[h] - mean);
      const double se = row.runs > 1 ? std::sqrt(ss / (row.runs - 1)) / std::sqrt(static_cast<double>(row.runs)) : 0.0;
      row.mean.push_back(mean);
      row.stderr_.push_back(se);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string render_table(const std::vector<AggregateRow>& rows) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1);
  os << std::left << std::setw(8) << "env" << std::setw(13) << "variant" << std::setw(10) << "split" << std::setw(6)
     << "runs";
  std::vector<int> header = rows.empty() ? std::vector<int>{} : rows.front().horizons;
  for (int h : header) os << std::setw(16) << (std::to_string(h) + (h == 1 ? " step" : " steps"));
  os << '\n';
  for (const auto& r : rows) {
    os << std::left << std::setw(8) << r.env << std::setw(13) << r.variant << std::setw(10) << r.split << std::setw(6)
       << r.runs;
    for (std::size_t i = 0; i < r.horizons.size(); ++i) {
      std::ostringstream cell;
      cell << std::fixed << std::setprecision(1) << r.mean[i] << " ± " << r.stderr_[i];
      os << std::setw(17) << cell.str();
    }
    os << '\n';
  }
  return os.str();
}

std::string render_csv(const std::vector<AggregateRow>& rows) {
  std::ostringstream os;
  os << "env,variant,split,runs,horizon,mean,stderr\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.horizons.size(); ++i) {
      os << r.env << ',' << r.variant << ',' << r.split << ',' << r.runs << ',' << r.horizons[i] << ',' << r.mean[i]
         << ',' << r.stderr_[i] << '\n';
    }
  }
  return os.str();
}

std::string render_usage(const MechanismUsage& usage) {
  std::ostringstream os;
  os << std::left << std::setw(8) << "action";
  for (int m = 0; m < usage.mechanisms; ++m) os << std::setw(9) << ("m" + std::to_string(m));
  os << "plurality\n";
  for (int d = 0; d < envs::kNumDirections; ++d) {
    os << std::setw(8) << envs::direction_name(static_cast<envs::Direction>(d));
    for (int m = 0; m < usage.mechanisms; ++m) os << std::setw(9) << usage.at(d, true, m);
    const int p = usage.plurality(d);
    os << (p >= 0 ? "m" + std::to_string(p) : std::string("none")) << '\n';
  }
  return os.str();
}

}  // namespace rsm
