#include "entarrow/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>

#include "entarrow/dynamics.hpp"
#include "entarrow/errors.hpp"
#include "parallel.hpp"

namespace entarrow {

using nlohmann::json;

// ================================================================ typicality

TypicalityStats typicality(std::size_t dim_a, std::size_t dim_b, std::size_t n_samples, std::uint64_t seed,
                           const std::optional<SubspaceRestriction>& restriction) {
    if (dim_a < 1 || dim_b < 1) throw UsageError("typicality: dimensions must be >= 1");
    if (n_samples < 100) throw UsageError("typicality: need at least 100 samples");
    const HilbertSpace space({dim_a, dim_b});

    Mat basis;
    if (restriction) {
        const auto& d = restriction->decomposition;
        if (d.space().total_dim() != space.total_dim())
            throw UsageError("typicality: restriction lives on a different dimension");
        if (restriction->index >= d.size()) throw UsageError("typicality: restriction index out of range");
        if (d.rank(restriction->index) < 2) throw UsageError("typicality: restriction subspace smaller than 2");
        basis = d.basis(restriction->index);
    }

    TypicalityStats st;
    st.n_samples = n_samples;
    st.samples.resize(n_samples);
    st.restriction_dim = restriction ? static_cast<std::size_t>(basis.cols()) : 0;
    const std::array<std::size_t, 2> dims{dim_a, dim_b};
    detail::parallel_for(n_samples, [&](std::size_t i) {
        const auto s = derive_seed(seed, i);
        const PureState psi = restriction ? haar_sample_in_subspace(basis, space, s) : haar_sample(space, s);
        st.samples[i] = factor_entropy_sum(psi.amplitudes(), dims);
    });

    const double n = static_cast<double>(n_samples);
    double sum = 0.0;
    for (double v : st.samples) sum += v;
    st.mean = sum / n;
    double ss = 0.0;
    for (double v : st.samples) ss += (v - st.mean) * (v - st.mean);
    st.variance = ss / (n - 1.0);
    st.standard_error = std::sqrt(st.variance / n);
    const auto [lo, hi] = std::minmax_element(st.samples.begin(), st.samples.end());
    st.min = *lo;
    st.max = *hi;
    st.max_entropy = 2.0 * std::log(static_cast<double>(std::min(dim_a, dim_b)));
    std::size_t below = 0, high = 0;
    for (double v : st.samples) {
        if (v < st.low_fraction * st.max_entropy) ++below;
        if (v >= st.high_fraction * st.max_entropy) ++high;
    }
    st.fraction_below = static_cast<double>(below) / n;
    st.fraction_high = static_cast<double>(high) / n;
    return st;
}

// ============================================================ config parsing

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void check_object(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path, "expected an object");
}

void allow_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
    check_object(j, path);
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : j.items())
        if (!ok.count(k)) throw ConfigError(join(path, k), "unknown field");
}

bool is_index(const json& v) {
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

double get_number(const json& j, const std::string& path, const char* key, std::optional<double> fallback) {
    if (!j.contains(key)) {
        if (fallback) return *fallback;
        throw ConfigError(join(path, key), "required field missing");
    }
    const auto& v = j.at(key);
    if (!v.is_number()) throw ConfigError(join(path, key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(join(path, key), "must be finite");
    return d;
}

std::uint64_t get_uint(const json& j, const std::string& path, const char* key, std::optional<std::uint64_t> fallback) {
    if (!j.contains(key)) {
        if (fallback) return *fallback;
        throw ConfigError(join(path, key), "required field missing");
    }
    const auto& v = j.at(key);
    if (!is_index(v))
        throw ConfigError(join(path, key), "expected a non-negative integer");
    return v.get<std::uint64_t>();
}

std::string get_string(const json& j, const std::string& path, const char* key, std::optional<std::string> fallback) {
    if (!j.contains(key)) {
        if (fallback) return *fallback;
        throw ConfigError(join(path, key), "required field missing");
    }
    const auto& v = j.at(key);
    if (!v.is_string()) throw ConfigError(join(path, key), "expected a string");
    return v.get<std::string>();
}

bool get_bool(const json& j, const std::string& path, const char* key, bool fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_boolean()) throw ConfigError(join(path, key), "expected a boolean");
    return v.get<bool>();
}

std::vector<std::size_t> get_sizes(const json& j, const std::string& path, const char* key) {
    if (!j.contains(key)) throw ConfigError(join(path, key), "required field missing");
    const auto& v = j.at(key);
    if (!v.is_array() || v.empty()) throw ConfigError(join(path, key), "expected a non-empty integer array");
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!is_index(v[i]))
            throw ConfigError(join(path, key) + "[" + std::to_string(i) + "]", "expected a non-negative integer");
        out.push_back(v[i].get<std::size_t>());
    }
    return out;
}

std::vector<double> get_numbers(const json& j, const std::string& path, const char* key) {
    if (!j.contains(key)) return {};
    const auto& v = j.at(key);
    if (!v.is_array()) throw ConfigError(join(path, key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) throw ConfigError(join(path, key) + "[" + std::to_string(i) + "]", "expected a number");
        out.push_back(v[i].get<double>());
    }
    return out;
}

void require(bool ok, const std::string& path, const std::string& what) {
    if (!ok) throw ConfigError(path, what);
}

// Runs a builder and turns its UsageError into a ConfigError at `path`.
template <class Fn>
auto as_config(const std::string& path, Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const UsageError& e) {
        throw ConfigError(path, e.what());
    }
}

ArrowParams parse_arrow(const json& j, const std::string& path) {
    allow_keys(j, path, {"n_env", "coupling_lo", "coupling_hi", "t_max", "n_times", "threshold"});
    ArrowParams p;
    p.n_env = get_uint(j, path, "n_env", p.n_env);
    p.coupling_lo = get_number(j, path, "coupling_lo", p.coupling_lo);
    p.coupling_hi = get_number(j, path, "coupling_hi", p.coupling_hi);
    p.t_max = get_number(j, path, "t_max", p.t_max);
    p.n_times = get_uint(j, path, "n_times", p.n_times);
    p.threshold = get_number(j, path, "threshold", p.threshold);
    require(p.n_env >= 1 && p.n_env <= 11, join(path, "n_env"), "must lie in [1, 11]");
    require(p.coupling_lo > 0.0, join(path, "coupling_lo"), "must be > 0");
    require(p.coupling_hi >= p.coupling_lo, join(path, "coupling_hi"), "must be >= coupling_lo");
    require(p.t_max > 0.0, join(path, "t_max"), "must be > 0");
    require(p.n_times >= 2, join(path, "n_times"), "must be >= 2");
    require(p.threshold > 0.0 && p.threshold < 1.0, join(path, "threshold"), "must lie in (0, 1)");
    return p;
}

cl::Terms parse_terms(const json& j, const std::string& path) {
    if (!j.contains("terms")) return cl::kAllTerms;
    const auto& v = j.at("terms");
    const std::string p = join(path, "terms");
    require(v.is_array() && !v.empty(), p, "expected a non-empty array of term names");
    cl::Terms t = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string ip = p + "[" + std::to_string(i) + "]";
        require(v[i].is_string(), ip, "expected a string");
        const auto s = v[i].get<std::string>();
        if (s == "unitary") t |= cl::kUnitary;
        else if (s == "dissipation") t |= cl::kDissipation;
        else if (s == "decoherence") t |= cl::kDecoherence;
        else throw ConfigError(ip, "unknown term '" + s + "'");
    }
    return t;
}

ClParams parse_cl(const json& j, const std::string& path) {
    allow_keys(j, path,
               {"grid_points", "dx", "mass", "gamma", "temperature", "omega", "hbar", "k_B", "initial", "separation",
                "t_final", "dt", "terms", "snapshot_every", "snapshot_times"});
    ClParams p;
    p.grid_points = get_uint(j, path, "grid_points", p.grid_points);
    p.dx = get_number(j, path, "dx", p.dx);
    p.physics.mass = get_number(j, path, "mass", 1.0);
    p.physics.gamma = get_number(j, path, "gamma", 0.1);
    p.physics.temperature = get_number(j, path, "temperature", 1.0);
    p.physics.omega = get_number(j, path, "omega", 1.0);
    p.physics.constants.hbar = get_number(j, path, "hbar", 1.0);
    p.physics.constants.k_B = get_number(j, path, "k_B", 1.0);
    p.separation = get_number(j, path, "separation", p.separation);
    p.t_final = get_number(j, path, "t_final", p.t_final);
    p.dt = get_number(j, path, "dt", 0.0);
    p.terms = parse_terms(j, path);
    p.snapshot_every = get_uint(j, path, "snapshot_every", p.snapshot_every);
    p.snapshot_times = get_numbers(j, path, "snapshot_times");

    if (j.contains("initial")) {
        const std::string ip = join(path, "initial");
        const auto& init = j.at("initial");
        allow_keys(init, ip, {"kind", "center_a", "center_b", "center", "width", "momentum"});
        p.initial.kind = get_string(init, ip, "kind", p.initial.kind);
        require(p.initial.kind == "cat" || p.initial.kind == "gaussian", join(ip, "kind"),
                "must be 'cat' or 'gaussian'");
        if (p.initial.kind == "gaussian") {
            p.initial.center_a = get_number(init, ip, "center", 0.0);
            p.initial.center_b = p.initial.center_a;
        } else {
            p.initial.center_a = get_number(init, ip, "center_a", p.initial.center_a);
            p.initial.center_b = get_number(init, ip, "center_b", p.initial.center_b);
        }
        p.initial.width = get_number(init, ip, "width", p.initial.width);
        p.initial.momentum = get_number(init, ip, "momentum", p.initial.momentum);
        require(p.initial.width > 0.0, join(ip, "width"), "must be > 0");
    }

    as_config(join(path, "grid_points"), [&] { return cl::PositionGrid(p.grid_points, p.dx); });
    as_config(path, [&] {
        p.physics.validate();
        return 0;
    });
    const cl::PositionGrid grid(p.grid_points, p.dx);
    require(p.separation >= 0.0 && p.separation <= grid.extent(), join(path, "separation"),
            "must lie within the grid extent");
    require(p.t_final > 0.0, join(path, "t_final"), "must be > 0");
    require(p.snapshot_every >= 1, join(path, "snapshot_every"), "must be >= 1");
    const double dt_max = cl::max_stable_dt(grid, p.physics, p.terms);
    if (p.dt == 0.0) p.dt = 0.9 * dt_max;
    require(p.dt > 0.0 && p.dt <= dt_max, join(path, "dt"),
            "must lie in (0, " + format_number(dt_max) + "] (stability bound)");
    return p;
}

TypicalityParams parse_typicality(const json& j, const std::string& path) {
    allow_keys(j, path, {"dim_a", "dim_b", "n_samples", "restriction"});
    TypicalityParams p;
    p.dim_a = get_uint(j, path, "dim_a", p.dim_a);
    p.dim_b = get_uint(j, path, "dim_b", p.dim_b);
    p.n_samples = get_uint(j, path, "n_samples", p.n_samples);
    require(p.dim_a >= 1, join(path, "dim_a"), "must be >= 1");
    require(p.dim_b >= 1, join(path, "dim_b"), "must be >= 1");
    require(p.dim_a * p.dim_b <= kMaxDynamicsDim, path, "dim_a * dim_b exceeds 4096");
    require(p.n_samples >= 100, join(path, "n_samples"), "must be >= 100");
    if (j.contains("restriction")) {
        const std::string rp = join(path, "restriction");
        const auto& r = j.at("restriction");
        allow_keys(r, rp, {"macrostates", "index"});
        const std::string mp = join(rp, "macrostates");
        require(r.contains("macrostates") && r.at("macrostates").is_array(), mp, "expected an array of index blocks");
        std::vector<std::vector<std::size_t>> blocks;
        for (std::size_t b = 0; b < r.at("macrostates").size(); ++b) {
            const auto& blk = r.at("macrostates")[b];
            const std::string bp = mp + "[" + std::to_string(b) + "]";
            require(blk.is_array(), bp, "expected an array of basis indices");
            std::vector<std::size_t> idx;
            for (const auto& v : blk) {
                require(is_index(v), bp, "expected non-negative integers");
                idx.push_back(v.get<std::size_t>());
            }
            blocks.push_back(std::move(idx));
        }
        p.restriction_index = get_uint(r, rp, "index", 0);
        const auto decomposition = as_config(mp, [&] {
            return MacrostateDecomposition::from_basis_partition(blocks, HilbertSpace({p.dim_a, p.dim_b}));
        });
        require(p.restriction_index < decomposition.size(), join(rp, "index"), "out of range");
        require(decomposition.rank(p.restriction_index) >= 2, join(rp, "index"),
                "restriction subspace smaller than 2");
        p.macrostates = std::move(blocks);
    }
    return p;
}

PureState state_at(const json& j, const std::string& path, std::uint64_t seed) {
    check_object(j, path);
    const std::string kind = get_string(j, path, "kind", std::nullopt);
    if (kind == "bell_ancilla") {
        allow_keys(j, path, {"kind"});
        Vec v = Vec::Zero(8);
        v(2) = v(4) = 1.0 / std::sqrt(2.0);  // (|01> + |10>)|0>
        return PureState(v, HilbertSpace({2, 2, 2}));
    }
    if (kind == "basis") {
        allow_keys(j, path, {"kind", "dims", "index"});
        return PureState::basis(HilbertSpace(get_sizes(j, path, "dims")), get_uint(j, path, "index", 0));
    }
    if (kind == "haar") {
        allow_keys(j, path, {"kind", "dims"});
        return haar_sample(HilbertSpace(get_sizes(j, path, "dims")), derive_seed(seed, 0x57A7E));
    }
    if (kind == "amplitudes") {
        allow_keys(j, path, {"kind", "dims", "re", "im"});
        HilbertSpace space(get_sizes(j, path, "dims"));
        const auto re = get_numbers(j, path, "re");
        auto im = get_numbers(j, path, "im");
        if (im.empty()) im.assign(re.size(), 0.0);
        if (re.size() != space.total_dim() || im.size() != re.size())
            throw ConfigError(path, "amplitude arrays must have length " + std::to_string(space.total_dim()));
        Vec v(static_cast<Eigen::Index>(re.size()));
        for (std::size_t i = 0; i < re.size(); ++i) v(static_cast<Eigen::Index>(i)) = cplx(re[i], im[i]);
        return PureState::normalized(std::move(v), std::move(space));
    }
    throw ConfigError(join(path, "kind"), "unknown state kind '" + kind + "'");
}

Factorization factorization_at(const json& j, const std::string& path) {
    check_object(j, path);
    const std::string kind = get_string(j, path, "kind", std::nullopt);
    if (kind == "identity") {
        allow_keys(j, path, {"kind", "dims"});
        return Factorization::identity(get_sizes(j, path, "dims"));
    }
    if (kind == "permutation") {
        allow_keys(j, path, {"kind", "source_dims", "order", "dims"});
        return Factorization::permutation(get_sizes(j, path, "source_dims"),
                                          get_sizes(j, path, "order"),
                                          get_sizes(j, path, "dims"));
    }
    throw ConfigError(join(path, "kind"), "unknown factorization kind '" + kind + "'");
}

FactorizationClass class_at(const json& j, const std::string& path, std::uint64_t seed) {
    check_object(j, path);
    const std::string kind = get_string(j, path, "kind", std::nullopt);
    const auto build = [&]() -> FactorizationClass {
        if (kind == "single") {
            allow_keys(j, path, {"kind", "factorization"});
            require(j.contains("factorization"), join(path, "factorization"), "required field missing");
            return SingleFactorization{factorization_at(j.at("factorization"), join(path, "factorization"))};
        }
        if (kind == "qubit_permutations") {
            allow_keys(j, path, {"kind", "n_qubits", "dims"});
            return QubitPermutations{get_uint(j, path, "n_qubits", std::nullopt), get_sizes(j, path, "dims")};
        }
        if (kind == "spatial_blocks") {
            allow_keys(j, path, {"kind", "block_size", "chain_length", "offsets"});
            return SpatialBlocks{get_uint(j, path, "block_size", std::nullopt),
                                 get_uint(j, path, "chain_length", std::nullopt), get_bool(j, path, "offsets", false)};
        }
        if (kind == "full_unitary") {
            allow_keys(j, path, {"kind", "dims", "restarts", "step_tolerance", "max_iterations", "fd_step"});
            FullUnitary fu;
            fu.dims = get_sizes(j, path, "dims");
            fu.options.restarts = get_uint(j, path, "restarts", fu.options.restarts);
            fu.options.step_tolerance = get_number(j, path, "step_tolerance", fu.options.step_tolerance);
            fu.options.max_iterations = get_uint(j, path, "max_iterations", fu.options.max_iterations);
            fu.options.fd_step = get_number(j, path, "fd_step", fu.options.fd_step);
            fu.options.seed = seed;
            std::size_t d = 1;
            for (auto x : fu.dims) d *= x;
            require(d <= 16, join(path, "dims"), "full unitary search is limited to total dimension 16");
            return fu;
        }
        throw ConfigError(join(path, "kind"), "unknown class kind '" + kind + "'");
    };
    FactorizationClass cls = build();
    as_config(path, [&] {
        validate(cls);
        return 0;
    });
    return cls;
}

EphParams parse_eph(const json& j, const std::string& path, std::uint64_t seed) {
    allow_keys(j, path, {"state", "variant", "m", "tol", "factorization", "class"});
    EphParams p;
    p.variant = get_string(j, path, "variant", p.variant);
    static const std::set<std::string> variants{"EPH_m", "EPH_0", "EPH_0R", "EPH_leq_m", "EPH_leq_mR"};
    require(variants.count(p.variant) > 0, join(path, "variant"), "unknown EPH variant '" + p.variant + "'");
    p.m = get_number(j, path, "m", 0.0);
    p.tol = get_number(j, path, "tol", p.tol);
    require(p.m >= 0.0, join(path, "m"), "must be >= 0");
    require(p.tol > 0.0, join(path, "tol"), "must be > 0");

    require(j.contains("state"), join(path, "state"), "required field missing");
    p.state = j.at("state");
    const PureState psi = as_config(join(path, "state"), [&] { return state_at(p.state, join(path, "state"), seed); });

    if (p.variant == "EPH_m") {
        require(j.contains("factorization"), join(path, "factorization"), "required for EPH_m");
        p.factorization = j.at("factorization");
        const auto f = as_config(join(path, "factorization"), [&] { return factorization_at(p.factorization, join(path, "factorization")); });
        require(f.total_dim() == psi.dim(), join(path, "factorization"), "dimension does not match the state");
    } else {
        require(j.contains("class"), join(path, "class"), "required for " + p.variant);
        p.factorization_class = j.at("class");
        const auto cls =
            as_config(join(path, "class"), [&] { return class_at(p.factorization_class, join(path, "class"), seed); });
        require(class_total_dim(cls) == psi.dim(), join(path, "class"), "dimension does not match the state");
    }
    return p;
}

}  // namespace

PureState state_from_json(const json& j, std::uint64_t seed) { return state_at(j, "state", seed); }

Factorization factorization_from_json(const json& j) { return factorization_at(j, "factorization"); }

FactorizationClass factorization_class_from_json(const json& j, std::uint64_t seed) {
    return class_at(j, "class", seed);
}

ExperimentConfig parse_config(const json& j) {
    allow_keys(j, "", {"schema_version", "experiment", "seed", "output_dir", "params"});
    const auto version = get_uint(j, "", "schema_version", std::nullopt);
    require(version == static_cast<std::uint64_t>(kSchemaVersion), "schema_version",
            "unsupported schema version " + std::to_string(version));
    ExperimentConfig c;
    c.experiment = get_string(j, "", "experiment", std::nullopt);
    c.seed = get_uint(j, "", "seed", 0);
    c.output_dir = get_string(j, "", "output_dir", ".");
    const json params = j.contains("params") ? j.at("params") : json::object();
    if (c.experiment == "arrow") c.params = parse_arrow(params, "params");
    else if (c.experiment == "cl") c.params = parse_cl(params, "params");
    else if (c.experiment == "typicality") c.params = parse_typicality(params, "params");
    else if (c.experiment == "eph") c.params = parse_eph(params, "params", c.seed);
    else throw ConfigError("experiment", "unknown experiment '" + c.experiment + "'");
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot read config file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("malformed JSON: ") + e.what());
    }
    return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["experiment"] = c.experiment;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;
    json p;
    if (const auto* a = std::get_if<ArrowParams>(&c.params)) {
        p = {{"n_env", a->n_env},           {"coupling_lo", a->coupling_lo}, {"coupling_hi", a->coupling_hi},
             {"t_max", a->t_max},           {"n_times", a->n_times},         {"threshold", a->threshold}};
    } else if (const auto* q = std::get_if<ClParams>(&c.params)) {
        json terms = json::array();
        if (q->terms & cl::kUnitary) terms.push_back("unitary");
        if (q->terms & cl::kDissipation) terms.push_back("dissipation");
        if (q->terms & cl::kDecoherence) terms.push_back("decoherence");
        json init = {{"kind", q->initial.kind}, {"width", q->initial.width}, {"momentum", q->initial.momentum}};
        if (q->initial.kind == "gaussian") {
            init["center"] = q->initial.center_a;
        } else {
            init["center_a"] = q->initial.center_a;
            init["center_b"] = q->initial.center_b;
        }
        p = {{"grid_points", q->grid_points},
             {"dx", q->dx},
             {"mass", q->physics.mass},
             {"gamma", q->physics.gamma},
             {"temperature", q->physics.temperature},
             {"omega", q->physics.omega},
             {"hbar", q->physics.constants.hbar},
             {"k_B", q->physics.constants.k_B},
             {"initial", init},
             {"separation", q->separation},
             {"t_final", q->t_final},
             {"dt", q->dt},
             {"terms", terms},
             {"snapshot_every", q->snapshot_every},
             {"snapshot_times", q->snapshot_times}};
    } else if (const auto* t = std::get_if<TypicalityParams>(&c.params)) {
        p = {{"dim_a", t->dim_a}, {"dim_b", t->dim_b}, {"n_samples", t->n_samples}};
        if (t->macrostates) p["restriction"] = {{"macrostates", *t->macrostates}, {"index", t->restriction_index}};
    } else if (const auto* e = std::get_if<EphParams>(&c.params)) {
        p = {{"state", e->state}, {"variant", e->variant}, {"m", e->m}, {"tol", e->tol}};
        if (e->variant == "EPH_m") p["factorization"] = e->factorization;
        else p["class"] = e->factorization_class;
    }
    j["params"] = p;
    return j;
}

// =============================================================== experiments

namespace {

std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
        v[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

void run_arrow(const ArrowParams& p, std::uint64_t seed, RunRecord& rec) {
    const SpinBath bath = build_spin_bath(p.n_env, p.coupling_lo, p.coupling_hi, seed);
    const auto times = linspace(0.0, p.t_max, p.n_times);
    const auto overlaps = environment_overlap(bath.model, bath.hamiltonian, times);
    const PureState psi0 = spin_bath_initial_state(p.n_env);
    const auto system_env = Factorization::identity({2, std::size_t{1} << p.n_env});
    const auto s_ent = entanglement_trajectory(psi0, bath.hamiltonian, system_env, times);

    Table t{"overlap", {"t", "re_r", "im_r", "abs_r", "s_ent"}, {}};
    std::vector<OverlapSample> series;
    for (std::size_t i = 0; i < times.size(); ++i) {
        t.rows.push_back({times[i], overlaps[i].real(), overlaps[i].imag(), std::abs(overlaps[i]), s_ent[i]});
        series.push_back({times[i], overlaps[i]});
    }
    rec.tables.push_back(std::move(t));

    const auto t_dec = decoherence_time(series, p.threshold);
    const PureState forward = evolve(psi0, bath.hamiltonian, p.t_max);
    const PureState back = evolve(forward, bath.hamiltonian, -p.t_max);

    rec.summary["n_env"] = p.n_env;
    rec.summary["hilbert_dim"] = bath.hamiltonian.dim();
    rec.summary["couplings"] = bath.model.couplings;
    rec.summary["threshold"] = p.threshold;
    rec.summary["decoherence_time"] = t_dec ? json(*t_dec) : json(nullptr);
    rec.summary["decoherence_reached"] = t_dec.has_value();
    rec.summary["s_ent_at_t_max"] = s_ent.back();
    rec.summary["s_ent_max"] = *std::max_element(s_ent.begin(), s_ent.end());
    rec.summary["reversal_roundtrip_error"] = (back.amplitudes() - psi0.amplitudes()).norm();
    rec.summary["reversal_final_s_ent"] = entanglement_entropy(back, system_env);
}

void run_cl(const ClParams& p, RunRecord& rec) {
    const cl::PositionGrid grid(p.grid_points, p.dx);
    const double hbar = p.physics.constants.hbar;
    const cl::CLState rho0 =
        p.initial.kind == "gaussian"
            ? cl::gaussian_state(grid, p.initial.center_a, p.initial.width, p.initial.momentum, hbar)
            : cl::cat_state(grid, p.initial.center_a, p.initial.center_b, p.initial.width, p.initial.momentum, hbar);
    const auto traj = cl::integrate(rho0, p.physics, p.t_final, p.dt, p.terms, p.snapshot_every);
    const auto coherence = cl::coherence_series(traj, p.separation);

    Table t{"coherence", {"t", "coherence", "min_eig", "trace", "purity", "mean_x", "mean_p"}, {}};
    json min_eig = json::array();
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto& s = traj[i].state;
        const double me = cl::positivity_min_eig(s);
        min_eig.push_back(me);
        t.rows.push_back({traj[i].t, coherence[i], me, s.trace(), s.purity(), s.mean_position(), s.mean_momentum(hbar)});
    }
    rec.tables.push_back(std::move(t));

    if (!p.snapshot_times.empty()) {
        Table snap{"snapshots", {"t", "x", "y", "re_rho", "im_rho"}, {}};
        for (double want : p.snapshot_times) {
            const auto it = std::min_element(traj.begin(), traj.end(), [&](const auto& a, const auto& b) {
                return std::abs(a.t - want) < std::abs(b.t - want);
            });
            const auto& rho = it->state.rho();
            for (std::size_t i = 0; i < grid.size(); ++i)
                for (std::size_t k = 0; k < grid.size(); ++k) {
                    const cplx v = rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
                    snap.rows.push_back({it->t, grid.x(i), grid.x(k), v.real(), v.imag()});
                }
        }
        rec.tables.push_back(std::move(snap));
    }

    rec.summary["lambda"] = p.physics.decoherence_rate();
    rec.summary["separation"] = p.separation;
    rec.summary["dt"] = p.dt;
    rec.summary["steps"] = static_cast<std::size_t>(std::ceil(p.t_final / p.dt - 1e-9));
    rec.summary["predicted_ratio"] = cl::predicted_timescale_ratio(p.physics, p.separation);
    rec.summary["min_eig_series"] = min_eig;
    double lowest = 0.0;
    for (const auto& v : min_eig) lowest = std::min(lowest, v.get<double>());
    rec.summary["min_eig_lowest"] = lowest;
    rec.summary["positivity_violated"] = lowest < -1e-6;
    try {
        const auto ts = cl::timescales(traj, p.physics, p.separation);
        rec.summary["tau_d"] = ts.tau_d;
        rec.summary["tau_r"] = ts.tau_r;
        rec.summary["ratio"] = ts.ratio;
        rec.summary["dissipation_faster"] = ts.dissipation_faster;
        rec.summary["regime"] = ts.dissipation_faster ? "dissipation_before_decoherence_unrealistic"
                                                      : "decoherence_before_dissipation";
    } catch (const FitError& e) {
        rec.summary["tau_d"] = nullptr;
        rec.summary["tau_r"] = nullptr;
        rec.summary["ratio"] = nullptr;
        rec.summary["fit_error"] = e.what();
    }
}

void run_typicality(const TypicalityParams& p, std::uint64_t seed, RunRecord& rec) {
    std::optional<SubspaceRestriction> restriction;
    if (p.macrostates)
        restriction = SubspaceRestriction{
            MacrostateDecomposition::from_basis_partition(*p.macrostates, HilbertSpace({p.dim_a, p.dim_b})),
            p.restriction_index};
    const auto st = typicality(p.dim_a, p.dim_b, p.n_samples, seed, restriction);

    Table t{"samples", {"index", "s_ent"}, {}};
    for (std::size_t i = 0; i < st.samples.size(); ++i) t.rows.push_back({static_cast<double>(i), st.samples[i]});
    rec.tables.push_back(std::move(t));

    rec.summary["n_samples"] = st.n_samples;
    rec.summary["mean"] = st.mean;
    rec.summary["mean_single_side"] = st.mean_single_side();
    rec.summary["variance"] = st.variance;
    rec.summary["standard_error"] = st.standard_error;
    rec.summary["min"] = st.min;
    rec.summary["max"] = st.max;
    rec.summary["max_entropy"] = st.max_entropy;
    rec.summary["low_fraction_threshold"] = st.low_fraction;
    rec.summary["high_fraction_threshold"] = st.high_fraction;
    rec.summary["fraction_below"] = st.fraction_below;
    rec.summary["fraction_high"] = st.fraction_high;
    rec.summary["restriction_dim"] = st.restriction_dim;
}

void run_eph(const EphParams& p, std::uint64_t seed, RunRecord& rec) {
    const PureState psi = state_from_json(p.state, seed);
    EphSpec spec;
    if (p.variant == "EPH_m") {
        spec = EphSpec::exact(factorization_from_json(p.factorization), p.m, p.tol);
    } else {
        auto cls = factorization_class_from_json(p.factorization_class, seed);
        if (p.variant == "EPH_0") spec = EphSpec::zero(std::move(cls), p.tol);
        else if (p.variant == "EPH_0R") spec = EphSpec::zero_on_class(std::move(cls), p.tol);
        else if (p.variant == "EPH_leq_m") spec = EphSpec::bounded(std::move(cls), p.m, p.tol);
        else spec = EphSpec::bounded_on_class(std::move(cls), p.m, p.tol);
    }
    const EphVerdict v = check_eph(psi, spec);
    rec.verdicts.push_back(verdict_to_json(v));
    rec.summary["variant"] = to_string(v.variant);
    rec.summary["status"] = to_string(v.status);
    rec.summary["extremal_value"] = v.extremal_value;
    rec.summary["bound"] = v.bound;
    rec.summary["state_dim"] = psi.dim();
}

template <class E>
[[noreturn]] void rethrow_with(const std::string& ctx, const E& e) {
    throw E(ctx + e.what());
}

}  // namespace

RunRecord run(const ExperimentConfig& config) {
    RunRecord rec;
    rec.experiment = config.experiment;
    rec.seed = config.seed;
    rec.config = to_json(config);
    rec.code_version = code_version();
    const auto start = std::chrono::steady_clock::now();
    const std::string ctx = config.experiment + " experiment (seed " + std::to_string(config.seed) + "): ";
    try {
        std::visit(
            [&](const auto& p) {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, ArrowParams>) run_arrow(p, config.seed, rec);
                else if constexpr (std::is_same_v<T, ClParams>) run_cl(p, rec);
                else if constexpr (std::is_same_v<T, TypicalityParams>) run_typicality(p, config.seed, rec);
                else run_eph(p, config.seed, rec);
            },
            config.params);
    } catch (const ConfigError&) {
        throw;
    } catch (const PositivityError& e) {
        rethrow_with(ctx, e);
    } catch (const NoMacrostateError& e) {
        rethrow_with(ctx, e);
    } catch (const IntegrationError& e) {
        rethrow_with(ctx, e);
    } catch (const FitError& e) {
        rethrow_with(ctx, e);
    } catch (const IoError& e) {
        rethrow_with(ctx, e);
    } catch (const UsageError& e) {
        rethrow_with(ctx, e);
    }
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

}  // namespace entarrow
