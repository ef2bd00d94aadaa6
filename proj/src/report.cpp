#include "etfc/report.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <sstream>

#include "etfc/errors.hpp"

namespace etfc {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Csv {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return static_cast<int>(i);
    return -1;
  }
  std::vector<int> group(const std::string& prefix) const {
    std::vector<int> idx;
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i].rfind(prefix + "_", 0) == 0) idx.push_back(static_cast<int>(i));
    return idx;
  }
};

Csv read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trace: " + path);
  Csv csv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (csv.columns.empty()) {
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) csv.columns.push_back(cell);
      continue;
    }
    std::vector<double> row;
    row.reserve(csv.columns.size());
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != csv.columns.size())
      throw ConfigError(path + ": ragged CSV row (got " + std::to_string(row.size()) + ")");
    csv.rows.push_back(std::move(row));
  }
  if (csv.columns.empty()) throw ConfigError(path + ": empty trace");
  return csv;
}

}  // namespace

ReportBundle build_report(const std::vector<std::string>& run_dirs,
                          const std::string& out_dir) {
  if (run_dirs.empty()) throw ConfigError("report needs at least one run directory");
  fs::create_directories(out_dir);
  ReportBundle bundle;

  for (const auto& dir : run_dirs) {
    const std::string metrics_path = (fs::path(dir) / "metrics.json").string();
    std::ifstream min(metrics_path);
    if (!min) throw ConfigError("missing metrics.json in " + dir);
    json jm;
    min >> jm;

    RunSummary row;
    row.directory = dir;
    row.estimator = jm.at("estimator").get<std::string>();
    row.mean_formation_error = jm.at("mean_formation_error").get<double>();
    row.trigger_events = jm.at("trigger_events").get<long>();
    row.trigger_rate = jm.at("trigger_rate").get<double>();
    row.payload_scalars_total = jm.at("payload_scalars_total").get<long>();

    const Csv trace = read_csv((fs::path(dir) / "trace.csv").string());
    const auto eta_cols = trace.group("eta");
    const auto trig_cols = trace.group("trig");
    const int t_col = trace.column("t");
    if (eta_cols.empty() || trig_cols.empty() || t_col < 0)
      throw ConfigError(dir + ": trace is missing eta/trig/t columns");

    // Plot data: t, ||eta_k||_2, simultaneous triggers.
    std::ostringstream et;
    et << "t,eta_norm,simultaneous_triggers\n";
    double mean = 0.0;
    for (const auto& r : trace.rows) {
      double sq = 0.0;
      for (int c : eta_cols) sq += r[c] * r[c];
      int trig = 0;
      for (int c : trig_cols) trig += static_cast<int>(r[c]);
      et << std::setprecision(17) << r[t_col] << ',' << std::sqrt(sq) << ',' << trig << '\n';
      mean += std::sqrt(sq);
    }
    row.recomputed_mean = trace.rows.empty() ? 0.0 : mean / trace.rows.size();

    const std::string tag = row.estimator;
    {
      std::ofstream out(fs::path(out_dir) / (tag + "_eta_trigger.csv"));
      out << et.str();
    }
    {
      // xy trajectories: reconstructed global positions when available,
      // otherwise the first two output components.
      auto gx = trace.group("gx");
      auto gy = trace.group("gy");
      std::ofstream out(fs::path(out_dir) / (tag + "_xy.csv"));
      if (!gx.empty() && gx.size() == gy.size()) {
        out << "t";
        for (std::size_t i = 0; i < gx.size(); ++i) out << ",x_" << i << ",y_" << i;
        out << '\n';
        for (const auto& r : trace.rows) {
          out << std::setprecision(17) << r[t_col];
          for (std::size_t i = 0; i < gx.size(); ++i)
            out << ',' << r[gx[i]] << ',' << r[gy[i]];
          out << '\n';
        }
      } else {
        const auto y_cols = trace.group("y");
        out << "t";
        for (std::size_t i = 0; i + 1 < y_cols.size(); i += 2)
          out << ",x_" << i / 2 << ",y_" << i / 2;
        out << '\n';
        for (const auto& r : trace.rows) {
          out << std::setprecision(17) << r[t_col];
          for (std::size_t i = 0; i + 1 < y_cols.size(); i += 2)
            out << ',' << r[y_cols[i]] << ',' << r[y_cols[i + 1]];
          out << '\n';
        }
      }
    }
    bundle.rows.push_back(row);
  }

  std::ostringstream table;
  table << "Estimator |  mean ||eta||_2 | Trigger events | Trigger rate\n";
  table << "----------+-----------------+----------------+-------------\n";
  json jrows = json::array();
  for (const auto& r : bundle.rows) {
    table << std::left << std::setw(10) << r.estimator << "| " << std::setw(16)
          << std::setprecision(6) << r.mean_formation_error << "| " << std::setw(15)
          << r.trigger_events << "| " << std::setprecision(4) << r.trigger_rate << "\n";
    jrows.push_back({{"estimator", r.estimator},
                     {"mean_formation_error", r.mean_formation_error},
                     {"recomputed_mean_formation_error", r.recomputed_mean},
                     {"trigger_events", r.trigger_events},
                     {"trigger_rate", r.trigger_rate},
                     {"payload_scalars_total", r.payload_scalars_total},
                     {"directory", r.directory}});
  }
  bundle.table_text = table.str();
  {
    std::ofstream out(fs::path(out_dir) / "report.txt");
    out << bundle.table_text;
  }
  {
    std::ofstream out(fs::path(out_dir) / "report.json");
    out << json{{"runs", jrows}}.dump(2) << "\n";
  }
  return bundle;
}

}  // namespace etfc
