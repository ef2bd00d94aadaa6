#ifndef ETFC_REPORT_HPP
#define ETFC_REPORT_HPP

#include <string>
#include <vector>

namespace etfc {

struct RunSummary {
  std::string directory;
  std::string estimator;
  double mean_formation_error = 0.0;
  long trigger_events = 0;
  double trigger_rate = 0.0;
  long payload_scalars_total = 0;
  double recomputed_mean = 0.0;  // from the shipped trace
};

struct ReportBundle {
  std::vector<RunSummary> rows;
  std::string table_text;
};

// Reads metrics.json + trace.csv from each run directory, recomputes the mean
// formation-error norm from the trace, writes plot-data CSVs (formation error
// norm + simultaneous triggers over time, and xy trajectories per agent) and a
// comparison table (text + JSON) into out_dir.
ReportBundle build_report(const std::vector<std::string>& run_dirs, const std::string& out_dir);

}  // namespace etfc

#endif
