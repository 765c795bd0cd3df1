#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "entarrow/factorization.hpp"

namespace entarrow {

inline constexpr int kSchemaVersion = 1;

std::string code_version();

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

// Output of one experiment run. `wall_seconds` is informational and never
// written to disk, so files from identical configs are byte-identical.
struct RunRecord {
    std::string experiment;
    std::uint64_t seed = 0;
    nlohmann::json config;  // normalized echo, enough to re-run
    std::string code_version;
    double wall_seconds = 0.0;
    std::vector<Table> tables;
    nlohmann::json summary = nlohmann::json::object();
    nlohmann::json verdicts = nlohmann::json::array();
};

// 17 significant digits, '.' decimal separator, independent of locale.
std::string format_number(double v);

// RFC-4180 style: header row, CRLF line endings, no quoting needed for numbers.
std::string to_csv(const Table& table);
Table parse_csv(const std::string& text, std::string name = {});

nlohmann::json verdict_to_json(const EphVerdict& verdict);

enum class ExportFormat { Csv, Json };

// Csv writes <experiment>_<seed>_<table>.csv per table; Json writes
// <experiment>_<seed>_summary.json, _config.json and, for eph runs,
// _verdict.json. Returns the written paths. IoError when unwritable.
std::vector<std::filesystem::path> export_record(const RunRecord& record, ExportFormat format,
                                                 const std::filesystem::path& dir);

}  // namespace entarrow
