#include "cpd/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cpd/errors.hpp"

namespace cpd {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos)
        return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ','))
        fields.push_back(trim(field));
    if (!line.empty() && line.back() == ',')
        fields.push_back("");
    return fields;
}

bool parse_double(const std::string& s, double& out) {
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end && !s.empty();
}

} // namespace

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        fail(Errc::invalid_input, "cannot open '" + path + "'");
    CsvTable table;
    std::string line;
    int line_no = 0;
    bool first_content_row = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty())
            continue;
        std::vector<std::string> fields = split_fields(line);
        if (first_content_row) {
            first_content_row = false;
            bool all_numeric = true;
            std::vector<double> row(fields.size());
            for (std::size_t i = 0; i < fields.size(); ++i)
                all_numeric = all_numeric && parse_double(fields[i], row[i]);
            table.columns.resize(fields.size());
            if (all_numeric) {
                for (std::size_t i = 0; i < row.size(); ++i)
                    table.columns[i].push_back(row[i]);
            } else {
                table.has_header = true;
                table.header = fields;
            }
            continue;
        }
        if (fields.size() != table.columns.size())
            fail(Errc::invalid_input,
                 path + ":" + std::to_string(line_no) + ": expected " +
                     std::to_string(table.columns.size()) + " fields, got " +
                     std::to_string(fields.size()));
        for (std::size_t i = 0; i < fields.size(); ++i) {
            double v;
            if (!parse_double(fields[i], v))
                fail(Errc::invalid_input,
                     path + ":" + std::to_string(line_no) +
                         ": not a number: '" + fields[i] + "'");
            table.columns[i].push_back(v);
        }
    }
    if (table.columns.empty() ||
        (table.columns.size() > 0 && table.columns[0].empty()))
        fail(Errc::invalid_input, path + ": no data rows");
    return table;
}

std::vector<double> select_column(const CsvTable& table,
                                  const std::string& selector) {
    int index = -1;
    bool numeric = !selector.empty() &&
                   selector.find_first_not_of("0123456789") == std::string::npos;
    if (numeric) {
        index = std::stoi(selector);
    } else {
        for (std::size_t i = 0; i < table.header.size(); ++i)
            if (table.header[i] == selector)
                index = static_cast<int>(i);
        if (index < 0)
            fail(Errc::invalid_input, "no column named '" + selector + "'");
    }
    if (index < 0 || index >= static_cast<int>(table.columns.size()))
        fail(Errc::invalid_input,
             "column index " + std::to_string(index) + " out of range");
    return table.columns[index];
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_series_csv(const std::string& path, std::span<const double> values,
                      const std::string& column_name) {
    std::ofstream out(path);
    if (!out)
        fail(Errc::invalid_input, "cannot write '" + path + "'");
    out << column_name << "\n";
    for (double v : values)
        out << format_double(v) << "\n";
}

void write_curve_csv(const std::string& path, std::span<const double> xs,
                     std::span<const double> ys, const std::string& x_name,
                     const std::string& y_name) {
    if (xs.size() != ys.size())
        fail(Errc::invalid_input, "curve columns differ in length");
    std::ofstream out(path);
    if (!out)
        fail(Errc::invalid_input, "cannot write '" + path + "'");
    out << x_name << "," << y_name << "\n";
    for (std::size_t i = 0; i < xs.size(); ++i)
        out << format_double(xs[i]) << "," << format_double(ys[i]) << "\n";
}

nlohmann::json to_json(const ArModel& model) {
    return {{"p", model.order()}, {"phi", model.phi}, {"sigma2", model.sigma2}};
}

nlohmann::json to_json(const NuisanceEstimates& nuis) {
    return {{"xi2", nuis.xi2},
            {"sigma1_sq", nuis.sigma1_sq},
            {"sigma2_sq", nuis.sigma2_sq},
            {"sigma1_star_sq", nuis.sigma1_star_sq},
            {"sigma2_star_sq", nuis.sigma2_star_sq},
            {"resid_var_pre", nuis.resid_var_pre},
            {"resid_var_post", nuis.resid_var_post}};
}

nlohmann::json to_json(const ConfidenceInterval& ci) {
    return {{"level", ci.level},
            {"lower", ci.lower},
            {"upper", ci.upper},
            {"scale_c", ci.scale_c}};
}

nlohmann::json to_json(const QuantileTable& table) {
    return {{"schema_version", kSchemaVersion},
            {"params",
             {{"sigma1", table.params.sigma1},
              {"sigma2", table.params.sigma2},
              {"sigma1_star", table.params.sigma1_star},
              {"sigma2_star", table.params.sigma2_star}}},
            {"mc",
             {{"grid_radius", table.mc.grid_radius},
              {"step", table.mc.step},
              {"paths", table.mc.paths},
              {"seed", table.mc.seed}}},
            {"probs", table.probs},
            {"quantiles", table.quants},
            {"truncation_fraction", table.truncation_fraction},
            {"truncation_warning", table.truncation_warning}};
}

QuantileTable quantile_table_from_json(const nlohmann::json& doc) {
    if (!doc.contains("schema_version") ||
        doc["schema_version"].get<int>() != kSchemaVersion)
        fail(Errc::invalid_input, "unsupported quantile table schema");
    QuantileTable table;
    const auto& pr = doc.at("params");
    table.params = {pr.at("sigma1").get<double>(),
                    pr.at("sigma2").get<double>(),
                    pr.at("sigma1_star").get<double>(),
                    pr.at("sigma2_star").get<double>()};
    const auto& mc = doc.at("mc");
    table.mc.grid_radius = mc.at("grid_radius").get<double>();
    table.mc.step = mc.at("step").get<double>();
    table.mc.paths = mc.at("paths").get<int>();
    table.mc.seed = mc.at("seed").get<std::uint64_t>();
    table.probs = doc.at("probs").get<std::vector<double>>();
    table.quants = doc.at("quantiles").get<std::vector<double>>();
    table.truncation_fraction = doc.at("truncation_fraction").get<double>();
    table.truncation_warning = doc.at("truncation_warning").get<bool>();
    if (table.probs.size() != table.quants.size())
        fail(Errc::invalid_input, "probs/quantiles length mismatch");
    return table;
}

namespace {

nlohmann::json curve_json(const std::vector<LossPoint>& curve) {
    nlohmann::json arr = nlohmann::json::array();
    for (const LossPoint& pt : curve)
        arr.push_back({pt.k, pt.loss});
    return arr;
}

} // namespace

nlohmann::json detect_report_json(const DetectionResult& result, int T,
                                  const NuisanceEstimates& nuis,
                                  const QuantileTable& table,
                                  std::span<const ConfidenceInterval> cis) {
    nlohmann::json ci_arr = nlohmann::json::array();
    for (const ConfidenceInterval& ci : cis)
        ci_arr.push_back(to_json(ci));
    return {{"schema_version", kSchemaVersion},
            {"command", "detect"},
            {"T", T},
            {"k_hat", result.k_hat},
            {"k_tilde", result.k_tilde},
            {"p_common", result.p_common},
            {"model_pre", to_json(result.model_pre)},
            {"model_post", to_json(result.model_post)},
            {"xi2", nuis.xi2},
            {"nuisance", to_json(nuis)},
            {"confidence_intervals", ci_arr},
            {"mc",
             {{"grid_radius", table.mc.grid_radius},
              {"step", table.mc.step},
              {"paths", table.mc.paths},
              {"seed", table.mc.seed},
              {"truncation_fraction", table.truncation_fraction},
              {"truncation_warning", table.truncation_warning}}},
            {"loss_curve_stage1", curve_json(result.loss_curve_stage1)},
            {"loss_curve_stage2", curve_json(result.loss_curve_stage2)}};
}

namespace {

std::string level_key(double level) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", level);
    return buf;
}

} // namespace

nlohmann::json replication_report_json(const ScenarioSpec& spec,
                                       const ReplicationReport& report) {
    nlohmann::json coverage = nlohmann::json::object();
    nlohmann::json lengths = nlohmann::json::object();
    for (const auto& [level, value] : report.coverage)
        coverage[level_key(level)] = value;
    for (const auto& [level, value] : report.ci_mean_length)
        lengths[level_key(level)] = value;
    nlohmann::json reasons = nlohmann::json::object();
    for (const auto& [reason, count] : report.failure_reasons)
        reasons[reason] = count;
    nlohmann::json spec_doc = {{"scenario", scenario_name(spec.id)},
                               {"sigma", spec.sigma},
                               {"T", spec.T},
                               {"k_star", spec.k_star},
                               {"burn_in", spec.burn_in},
                               {"splice", spec.splice == SplicePolicy::continuous
                                              ? "continuous"
                                              : "restart"}};
    if (spec.theta)
        spec_doc["theta"] = *spec.theta;
    if (spec.phi)
        spec_doc["phi"] = *spec.phi;
    return {{"schema_version", kSchemaVersion},
            {"command", "simulate"},
            {"spec", spec_doc},
            {"reps", report.reps},
            {"ab_hat", report.ab_hat},
            {"ab_tilde", report.ab_tilde},
            {"rmse_hat", report.rmse_hat},
            {"rmse_tilde", report.rmse_tilde},
            {"coverage", coverage},
            {"ci_mean_length", lengths},
            {"failures", {{"count", report.failure_count}, {"reasons", reasons}}}};
}

std::string replication_report_csv(const ScenarioSpec& spec,
                                   const ReplicationReport& report) {
    auto cp = [&](double level) -> std::string {
        auto it = report.coverage.find(level);
        return it == report.coverage.end() ? "" : format_double(it->second);
    };
    std::ostringstream out;
    out << "truth,ab_hat,ab_tilde,rmse_hat,rmse_tilde,cp90,cp95,cp99\n";
    out << spec.k_star << "," << format_double(report.ab_hat) << ","
        << format_double(report.ab_tilde) << ","
        << format_double(report.rmse_hat) << ","
        << format_double(report.rmse_tilde) << "," << cp(0.90) << ","
        << cp(0.95) << "," << cp(0.99) << "\n";
    return out.str();
}

} // namespace cpd
