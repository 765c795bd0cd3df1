#include "entarrow/records.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "entarrow/errors.hpp"

#ifndef ENTARROW_VERSION
#define ENTARROW_VERSION "0.0.0"
#endif

namespace entarrow {

namespace {

std::string stem(const RunRecord& r) { return r.experiment + "_" + std::to_string(r.seed); }

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << content;
    out.close();
    if (!out) throw IoError("write failed for " + path.string());
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    cells.push_back(cur);
    return cells;
}

}  // namespace

std::string code_version() { return ENTARROW_VERSION; }

std::string format_number(double v) {
    char buf[64];
    // to_chars ignores the global locale
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

std::string to_csv(const Table& table) {
    std::string out;
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        if (c) out += ',';
        out += table.columns[c];
    }
    out += "\r\n";
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out += ',';
            out += format_number(row[c]);
        }
        out += "\r\n";
    }
    return out;
}

Table parse_csv(const std::string& text, std::string name) {
    Table t;
    t.name = std::move(name);
    std::istringstream in(text);
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (header) {
            t.columns = std::move(cells);
            header = false;
            continue;
        }
        if (cells.size() != t.columns.size()) throw UsageError("parse_csv: ragged row");
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) {
            double v = 0.0;
            auto res = std::from_chars(c.data(), c.data() + c.size(), v);
            if (res.ec != std::errc() || res.ptr != c.data() + c.size())
                throw UsageError("parse_csv: bad number '" + c + "'");
            row.push_back(v);
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

nlohmann::json verdict_to_json(const EphVerdict& v) {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["variant"] = to_string(v.variant);
    j["status"] = to_string(v.status);
    j["extremal_value"] = v.extremal_value;
    j["bound"] = v.bound;
    j["tolerance"] = v.tolerance;
    j["restarts_used"] = v.restarts_used;
    j["optimizer_improved"] = v.optimizer_improved;

    nlohmann::json w = nullptr;
    if (v.witness) {
        const Factorization& f = *v.witness;
        w = nlohmann::json::object();
        w["dims"] = f.dims();
        if (!f.label().empty()) w["label"] = f.label();
        switch (f.kind()) {
            case Factorization::Kind::Identity:
                w["kind"] = "identity";
                break;
            case Factorization::Kind::FactorPermutation:
                w["kind"] = "permutation";
                w["source_dims"] = f.source_dims();
                w["permutation"] = f.order();
                break;
            case Factorization::Kind::Unitary:
                w["kind"] = "unitary";
                w["generator_coefficients"] = f.generator();
                break;
        }
    }
    j["witness_parameters"] = w;
    return j;
}

std::vector<std::filesystem::path> export_record(const RunRecord& record, ExportFormat format,
                                                 const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());

    std::vector<std::filesystem::path> written;
    if (format == ExportFormat::Csv) {
        for (const auto& t : record.tables) {
            auto p = dir / (stem(record) + "_" + t.name + ".csv");
            write_file(p, to_csv(t));
            written.push_back(std::move(p));
        }
        return written;
    }

    nlohmann::json summary;
    summary["schema_version"] = kSchemaVersion;
    summary["experiment"] = record.experiment;
    summary["seed"] = record.seed;
    summary["code_version"] = record.code_version;
    summary["summary"] = record.summary;
    summary["verdicts"] = record.verdicts;
    auto p = dir / (stem(record) + "_summary.json");
    write_file(p, summary.dump(2) + "\n");
    written.push_back(p);

    p = dir / (stem(record) + "_config.json");
    write_file(p, record.config.dump(2) + "\n");
    written.push_back(p);

    if (record.experiment == "eph" && !record.verdicts.empty()) {
        p = dir / (stem(record) + "_verdict.json");
        write_file(p, record.verdicts.front().dump(2) + "\n");
        written.push_back(p);
    }
    return written;
}

}  // namespace entarrow
