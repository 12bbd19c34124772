#pragma once

#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "cpd/detection.hpp"
#include "cpd/inference.hpp"
#include "cpd/simulation.hpp"

namespace cpd {

inline constexpr int kSchemaVersion = 1;

// Comma-separated numeric table. An optional header row is detected by the
// first row failing to parse as numbers; blank lines are skipped.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;
    bool has_header = false;
};

CsvTable read_csv(const std::string& path);

// Column by 0-based index ("2") or by header name.
std::vector<double> select_column(const CsvTable& table,
                                  const std::string& selector);

// Shortest representation that round-trips the double exactly.
std::string format_double(double v);

void write_series_csv(const std::string& path, std::span<const double> values,
                      const std::string& column_name = "value");

void write_curve_csv(const std::string& path, std::span<const double> xs,
                     std::span<const double> ys, const std::string& x_name,
                     const std::string& y_name);

nlohmann::json to_json(const ArModel& model);
nlohmann::json to_json(const NuisanceEstimates& nuis);
nlohmann::json to_json(const ConfidenceInterval& ci);
nlohmann::json to_json(const QuantileTable& table);
QuantileTable quantile_table_from_json(const nlohmann::json& doc);

nlohmann::json detect_report_json(const DetectionResult& result, int T,
                                  const NuisanceEstimates& nuis,
                                  const QuantileTable& table,
                                  std::span<const ConfidenceInterval> cis);

nlohmann::json replication_report_json(const ScenarioSpec& spec,
                                       const ReplicationReport& report);

// Paper-style table row: truth, AB/RMSE for both estimators, CP columns.
std::string replication_report_csv(const ScenarioSpec& spec,
                                   const ReplicationReport& report);

} // namespace cpd
