#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "entarrow/errors.hpp"
#include "entarrow/experiments.hpp"
#include "entarrow/records.hpp"

using namespace entarrow;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const char* env = std::getenv("ENTARROW_TEST_TMP");
    fs::path p = fs::path(env ? env : fs::temp_directory_path().string()) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

json base(const std::string& experiment, json params) {
    return {{"schema_version", 1}, {"experiment", experiment}, {"seed", 7}, {"params", std::move(params)}};
}

std::string config_error_field(const json& j) {
    try {
        parse_config(j);
    } catch (const ConfigError& e) {
        return e.path();
    }
    return "<none>";
}

// Frozen from tests/oracles/typicality_oracle.py (numpy, seed 20240501).
constexpr double kOracleMeanSingleSide2x16 = 0.646835;
constexpr double kOracleMeanSingleSide8x8 = 1.588597;

}  // namespace

// ----------------------------------------------------------------- typicality

TEST_CASE("typicality on 2 x 16 matches the Monte Carlo baseline") {
    const auto st = typicality(2, 16, 10000, 1);
    CHECK(std::abs(st.mean_single_side() / kOracleMeanSingleSide2x16 - 1.0) < 0.02);
    CHECK(st.min <= st.mean);
    CHECK(st.mean <= st.max);
    CHECK(st.max <= st.max_entropy + 1e-12);
    CHECK(st.fraction_below >= 0.0);
    CHECK(st.fraction_below <= 1.0);
    CHECK(st.samples.size() == 10000);
    CHECK(st.restriction_dim == 0);
}

TEST_CASE("typicality on 8 x 8: near-product states are rare") {
    const auto st = typicality(8, 8, 2000, 2);
    CHECK(st.fraction_below < 1e-3);
    // Haar states sit near 76% of the maximum, so the 0.9 cut is rarely reached.
    CHECK(st.mean_single_side() == doctest::Approx(kOracleMeanSingleSide8x8).epsilon(0.02));
    CHECK(st.max_entropy == doctest::Approx(2.0 * std::log(8.0)));
}

TEST_CASE("restriction to a product-state span suppresses entanglement") {
    // Basis states 0 and 1 are |0>|0> and |0>|1>; their span is a product with |0>.
    auto d = MacrostateDecomposition::from_basis_partition(
        {{0, 1}, [] {
             std::vector<std::size_t> rest;
             for (std::size_t i = 2; i < 64; ++i) rest.push_back(i);
             return rest;
         }()},
        HilbertSpace({8, 8}));
    const auto st = typicality(8, 8, 200, 3, SubspaceRestriction{d, 0});
    CHECK(st.restriction_dim == 2);
    CHECK(st.mean < 1e-10);
    CHECK_THROWS_AS(typicality(8, 8, 200, 3, SubspaceRestriction{MacrostateDecomposition::from_basis_partition(
                                                                       {{0}, [] {
                                                                            std::vector<std::size_t> rest;
                                                                            for (std::size_t i = 1; i < 64; ++i)
                                                                                rest.push_back(i);
                                                                            return rest;
                                                                        }()},
                                                                       HilbertSpace({8, 8})),
                                                                   0}),
                    UsageError);
    CHECK_THROWS_AS(typicality(2, 2, 99, 1), UsageError);
}

TEST_CASE("typicality is seed-deterministic") {
    const auto a = typicality(3, 5, 300, 11);
    const auto b = typicality(3, 5, 300, 11);
    CHECK(a.samples == b.samples);
}

TEST_CASE("property: standard error halves per quadrupling, scales as 1/sqrt(n)") {
    // Three doublings: n, 2n, 4n, 8n.
    std::vector<double> se;
    for (std::size_t n : {1000, 2000, 4000, 8000}) se.push_back(typicality(2, 16, n, 5).standard_error);
    for (std::size_t k = 1; k < se.size(); ++k) {
        const double ratio = se[k - 1] / se[k];
        CHECK(ratio == doctest::Approx(std::sqrt(2.0)).epsilon(0.15));
    }
}

// -------------------------------------------------------------------- config

TEST_CASE("config validation names the offending field") {
    CHECK(config_error_field(base("nope", json::object())) == "experiment");
    CHECK(config_error_field(base("arrow", {{"n_env", 20}})) == "params.n_env");
    CHECK(config_error_field(base("arrow", {{"bogus", 1}})) == "params.bogus");
    CHECK(config_error_field(base("arrow", {{"t_max", "long"}})) == "params.t_max");
    CHECK(config_error_field(base("cl", {{"dt", 1.0}})) == "params.dt");
    CHECK(config_error_field(base("cl", {{"terms", {"unitary", "magic"}}})) == "params.terms[1]");
    CHECK(config_error_field(base("cl", {{"initial", {{"kind", "square"}}}})) == "params.initial.kind");
    CHECK(config_error_field(base("typicality", {{"n_samples", 10}})) == "params.n_samples");
    CHECK(config_error_field(base("eph", {{"variant", "EPH_9"}})) == "params.variant");
    CHECK(config_error_field(base("eph", {{"state", {{"kind", "bell_ancilla"}}},
                                          {"class", {{"kind", "full_unitary"}, {"dims", {2, 2}}}}})) ==
          "params.class");
    json no_version = base("arrow", json::object());
    no_version.erase("schema_version");
    CHECK(config_error_field(no_version) == "schema_version");
    CHECK(config_error_field(base("arrow", json::object())) == "<none>");
}

TEST_CASE("config echo round-trips") {
    const auto cfg = parse_config(base("cl", {{"gamma", 0.2}, {"snapshot_times", {0.0, 0.5}}}));
    const auto again = parse_config(to_json(cfg));
    CHECK(to_json(again) == to_json(cfg));
    CHECK(std::get<ClParams>(again.params).dt > 0.0);

    const auto eph = parse_config(base("eph", {{"state", {{"kind", "bell_ancilla"}}},
                                               {"variant", "EPH_m"},
                                               {"factorization", {{"kind", "identity"}, {"dims", {4, 2}}}}}));
    CHECK(to_json(parse_config(to_json(eph))) == to_json(eph));
}

TEST_CASE("load_config reports unreadable and malformed files") {
    const auto dir = scratch("load_config");
    CHECK_THROWS_AS(load_config((dir / "missing.json").string()), ConfigError);
    std::ofstream(dir / "bad.json") << "{ not json";
    CHECK_THROWS_AS(load_config((dir / "bad.json").string()), ConfigError);
}

// ---------------------------------------------------------------- experiments

TEST_CASE("arrow experiment") {
    const auto rec = run(parse_config(base("arrow", {{"n_env", 8}})));
    REQUIRE(rec.tables.size() == 1);
    const auto& t = rec.tables[0];
    CHECK(t.name == "overlap");
    CHECK(t.columns == std::vector<std::string>{"t", "re_r", "im_r", "abs_r", "s_ent"});
    CHECK(t.rows.size() == 61);
    CHECK(t.rows[0][3] == doctest::Approx(1.0));
    CHECK(rec.summary["reversal_roundtrip_error"].get<double>() < 1e-8);
    CHECK(std::abs(rec.summary["reversal_final_s_ent"].get<double>()) < 1e-8);
    CHECK(rec.summary["hilbert_dim"] == 512);
    CHECK(rec.summary["decoherence_reached"] == true);
}

TEST_CASE("cl experiment in the dephasing-dominated regime") {
    const auto rec = run(parse_config(base(
        "cl", {{"gamma", 1.0}, {"temperature", 12.5}, {"t_final", 0.01}, {"snapshot_every", 5}, {"snapshot_times", {0.0}}})));
    const double predicted = rec.summary["predicted_ratio"].get<double>();
    CHECK(predicted == doctest::Approx(100.0));
    CHECK(std::abs(rec.summary["ratio"].get<double>() / predicted - 1.0) < 0.05);
    CHECK(rec.summary["min_eig_series"].size() == rec.tables[0].rows.size());
    REQUIRE(rec.tables.size() == 2);
    CHECK(rec.tables[1].name == "snapshots");
    CHECK(rec.tables[1].rows.size() == 128 * 128);
}

TEST_CASE("cl experiment without friction records the fit failure") {
    const auto rec = run(parse_config(base("cl", {{"gamma", 0.0}, {"t_final", 0.05}})));
    CHECK(rec.summary["ratio"].is_null());
    CHECK(rec.summary.contains("fit_error"));
}

TEST_CASE("eph experiment") {
    const auto rec = run(parse_config(base(
        "eph", {{"state", {{"kind", "bell_ancilla"}}},
                {"variant", "EPH_0"},
                {"class", {{"kind", "full_unitary"}, {"dims", {2, 2, 2}}, {"restarts", 2}}}})));
    CHECK(rec.summary["status"] == "Refuted");
    REQUIRE(rec.verdicts.size() == 1);
    const auto& v = rec.verdicts[0];
    CHECK(v["schema_version"] == 1);
    CHECK(v["variant"] == "EPH_0");
    CHECK(v["witness_parameters"]["kind"] == "unitary");
    CHECK(v["witness_parameters"]["generator_coefficients"].size() == 64);
    CHECK(v["restarts_used"] == 2);
}

TEST_CASE("typicality experiment with a restriction") {
    std::vector<std::size_t> rest;
    for (std::size_t i = 2; i < 64; ++i) rest.push_back(i);
    const auto rec = run(parse_config(base(
        "typicality", {{"dim_a", 8}, {"dim_b", 8}, {"n_samples", 100}, {"restriction", {{"macrostates", {{0, 1}, rest}}, {"index", 0}}}})));
    CHECK(rec.summary["restriction_dim"] == 2);
    CHECK(rec.summary["mean"].get<double>() < 1e-10);
}

// -------------------------------------------------------------------- export

TEST_CASE("csv round-trip reproduces the formatted series") {
    Table t{"demo", {"t", "v"}, {{0.1, 1.0 / 3.0}, {1e-300, -2.5e10}, {0.0, std::acos(-1.0)}}};
    const auto text = to_csv(t);
    CHECK(text.substr(0, 5) == "t,v\r\n");
    const auto back = parse_csv(text, "demo");
    REQUIRE(back.rows.size() == t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i)
        for (std::size_t j = 0; j < 2; ++j) CHECK(back.rows[i][j] == t.rows[i][j]);
    CHECK(to_csv(back) == text);
    CHECK(format_number(0.1) == "0.10000000000000001");
}

TEST_CASE("export writes named files and is byte-identical across reruns") {
    const auto cfg = parse_config(base("arrow", {{"n_env", 4}, {"n_times", 11}}));
    const auto d1 = scratch("export_a");
    const auto d2 = scratch("export_b");
    for (const auto& d : {d1, d2}) {
        const auto rec = run(cfg);
        export_record(rec, ExportFormat::Csv, d);
        export_record(rec, ExportFormat::Json, d);
    }
    for (const char* name : {"arrow_7_overlap.csv", "arrow_7_summary.json", "arrow_7_config.json"}) {
        REQUIRE(fs::exists(d1 / name));
        CHECK(slurp(d1 / name) == slurp(d2 / name));
    }
    const auto summary = json::parse(slurp(d1 / "arrow_7_summary.json"));
    CHECK(summary["schema_version"] == 1);
    // The echoed config re-runs to the same outputs.
    const auto echoed = parse_config(json::parse(slurp(d1 / "arrow_7_config.json")));
    CHECK(to_csv(run(echoed).tables[0]) == slurp(d1 / "arrow_7_overlap.csv"));
}

TEST_CASE("eph export writes a verdict file") {
    const auto d = scratch("export_eph");
    const auto rec = run(parse_config(base("eph", {{"state", {{"kind", "bell_ancilla"}}},
                                                   {"variant", "EPH_0R"},
                                                   {"class", {{"kind", "qubit_permutations"}, {"n_qubits", 3}, {"dims", {4, 2}}}}})));
    export_record(rec, ExportFormat::Json, d);
    REQUIRE(fs::exists(d / "eph_7_verdict.json"));
    const auto v = json::parse(slurp(d / "eph_7_verdict.json"));
    CHECK(v["status"] == "Refuted");
    CHECK(v["witness_parameters"]["kind"] == "permutation");
    CHECK(v["witness_parameters"].contains("permutation"));
}

TEST_CASE("export to an unwritable path fails with IoError") {
    const auto d = scratch("export_io");
    std::ofstream(d / "file") << "x";
    const auto rec = run(parse_config(base("arrow", {{"n_env", 2}, {"n_times", 3}})));
    CHECK_THROWS_AS(export_record(rec, ExportFormat::Csv, d / "file" / "sub"), IoError);
}
