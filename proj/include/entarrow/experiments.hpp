#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "entarrow/caldeira_leggett.hpp"
#include "entarrow/entropy.hpp"
#include "entarrow/factorization.hpp"
#include "entarrow/records.hpp"

namespace entarrow {

// ---------------------------------------------------------------- typicality

struct SubspaceRestriction {
    MacrostateDecomposition decomposition;
    std::size_t index = 0;
};

// "Near-product" and "highly entangled" cuts, as fractions of the maximal
// bipartite S_ent = 2 log min(dim_A, dim_B).
inline constexpr double kLowEntanglementFraction = 0.1;
inline constexpr double kHighEntanglementFraction = 0.9;

struct TypicalityStats {
    std::size_t n_samples = 0;
    double mean = 0.0;  // of S_ent (both sides summed)
    double variance = 0.0;
    double min = 0.0;
    double max = 0.0;
    double standard_error = 0.0;
    double max_entropy = 0.0;
    double fraction_below = 0.0;  // S_ent < low_fraction * max_entropy
    double fraction_high = 0.0;   // S_ent >= high_fraction * max_entropy
    double low_fraction = kLowEntanglementFraction;
    double high_fraction = kHighEntanglementFraction;
    std::size_t restriction_dim = 0;  // 0 = whole space
    std::vector<double> samples;

    double mean_single_side() const { return 0.5 * mean; }
};

// Haar samples on C^{dim_a} (x) C^{dim_b}, optionally restricted to one
// macrostate subspace. Sample i uses derive_seed(seed, i).
TypicalityStats typicality(std::size_t dim_a, std::size_t dim_b, std::size_t n_samples, std::uint64_t seed,
                           const std::optional<SubspaceRestriction>& restriction = std::nullopt);

// ------------------------------------------------------------ configuration

struct ArrowParams {
    std::size_t n_env = 8;
    double coupling_lo = 0.5;
    double coupling_hi = 1.5;
    double t_max = 3.0;
    std::size_t n_times = 61;
    double threshold = 0.05;
};

struct ClInitial {
    std::string kind = "cat";  // "cat" | "gaussian"
    double center_a = -1.0;
    double center_b = 1.0;
    double width = 0.3;
    double momentum = 0.0;
};

struct ClParams {
    std::size_t grid_points = cl::kDefaultGridPoints;
    double dx = 0.1;
    cl::CLParameters physics;
    ClInitial initial;
    double separation = 2.0;
    double t_final = 1.0;
    double dt = 0.0;  // 0: 0.9 x stability bound
    cl::Terms terms = cl::kAllTerms;
    std::size_t snapshot_every = 10;
    std::vector<double> snapshot_times;  // kernels dumped to the snapshot CSV
};

struct TypicalityParams {
    std::size_t dim_a = 2;
    std::size_t dim_b = 16;
    std::size_t n_samples = 10000;
    std::optional<std::vector<std::vector<std::size_t>>> macrostates;  // basis-index blocks
    std::size_t restriction_index = 0;
};

struct EphParams {
    nlohmann::json state;  // {"kind": ...}
    std::string variant = "EPH_0";
    double m = 0.0;
    double tol = 1e-6;
    nlohmann::json factorization;  // EPH_m only
    nlohmann::json factorization_class;
};

struct ExperimentConfig {
    std::string experiment;
    std::uint64_t seed = 0;
    std::string output_dir = ".";
    std::variant<ArrowParams, ClParams, TypicalityParams, EphParams> params;
};

// Schema validation; throws ConfigError naming the offending field.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
// Normalized echo with every default filled in.
nlohmann::json to_json(const ExperimentConfig& config);

// Builders used by the eph experiment; exposed for tests.
PureState state_from_json(const nlohmann::json& j, std::uint64_t seed);
Factorization factorization_from_json(const nlohmann::json& j);
FactorizationClass factorization_class_from_json(const nlohmann::json& j, std::uint64_t seed);

// Dispatches to the named experiment. Downstream errors are rethrown with
// the experiment name prefixed, keeping their type.
RunRecord run(const ExperimentConfig& config);

}  // namespace entarrow
