#ifndef CSB_CONFIG_HPP
#define CSB_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "csb/core.hpp"
#include "csb/io.hpp"
#include "csb/loss.hpp"
#include "csb/models.hpp"
#include "csb/oat.hpp"
#include "csb/rng.hpp"
#include "csb/shrink.hpp"

namespace csb {

// Configuration problems get their own type so the CLI can map them to a
// dedicated exit code.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FactorSpec {
    std::string name;
    Interval range{0.0, 1.0};
    std::optional<double> nominal;
};

struct DataSpec {
    enum class Kind { none, file, synthetic };
    Kind kind = Kind::none;
    std::string file;
    double noise = 0.0;  // multiplicative: y * (1 + noise * N(0,1))
    std::optional<std::uint64_t> seed;
};

// A box for UA/SA runs: either the factor search ranges or explicit
// per-factor intervals (possibly pulled from an emitted csb.csv).
struct BoxSpec {
    bool use_ranges = true;
    std::vector<Interval> intervals;  // aligned with the factor table when explicit
};

struct FitBlock {
    std::size_t n_starts = 100;
    double tol = 1e-6;
    std::size_t max_evals = 1000;
    double filter = 0.10;
    std::optional<std::uint64_t> seed;
};

struct SaBlock {
    std::size_t n = 3000;
    BoxSpec box;
    std::optional<std::uint64_t> seed;
};

struct UaBlock {
    std::size_t n = 1000;
    BoxSpec box;
    bool envelope = true;
    std::optional<std::uint64_t> seed;
};

struct ConvergeBlock {
    std::vector<std::size_t> sizes = {500, 1000, 2000, 4000};
};

struct ProblemConfig {
    std::string model = "dengue";
    double total_humans = 340000.0;
    double initial_infected_humans = 100.0;
    std::vector<FactorSpec> factors;
    std::vector<double> grid_points;
    LossConfig loss{};
    double lambda = 1.3;  // stored as a multiplier regardless of input units
    DataSpec data{};
    FitBlock fit{};
    OatConfig oat{};
    ShrinkConfig shrink{};
    bool shrink_seed_set = false;
    SaBlock sa{};
    UaBlock ua{};
    ConvergeBlock converge{};
    IntegratorConfig integrator{};
    std::uint64_t seed = 0;
};

inline TimeGrid grid(const ProblemConfig& cfg) { return TimeGrid(cfg.grid_points); }

inline Orthotope search_box(const ProblemConfig& cfg) {
    std::vector<std::string> names;
    std::vector<Interval> ranges;
    for (const auto& f : cfg.factors) {
        names.push_back(f.name);
        ranges.push_back(f.range);
    }
    return Orthotope(std::move(names), std::move(ranges));
}

inline FactorVector nominal_vector(const ProblemConfig& cfg) {
    FactorVector x;
    x.reserve(cfg.factors.size());
    for (const auto& f : cfg.factors) {
        if (!f.nominal)
            throw ConfigError("factor '" + f.name +
                              "': no nominal value (set one in the config or point "
                              "nominal_file at a fit artifact)");
        x.push_back(*f.nominal);
    }
    return x;
}

inline Orthotope box_for(const BoxSpec& spec, const ProblemConfig& cfg) {
    if (spec.use_ranges) return search_box(cfg);
    std::vector<std::string> names;
    for (const auto& f : cfg.factors) names.push_back(f.name);
    return Orthotope(std::move(names), spec.intervals);
}

inline ModelDefinition make_model(const ProblemConfig& cfg) {
    ModelDefinition m;
    if (cfg.model == "dengue")
        m = dengue_model(cfg.total_humans, cfg.initial_infected_humans);
    else if (cfg.model == "identity")
        m = identity_model();
    else if (cfg.model == "additive")
        m = additive_model();
    else if (cfg.model == "interaction")
        m = interaction_model();
    else
        throw ConfigError("unknown model '" + cfg.model +
                          "' (expected dengue, identity, additive or interaction)");
    if (cfg.factors.size() != m.factor_names.size())
        throw ConfigError("model '" + cfg.model + "' takes " +
                          std::to_string(m.factor_names.size()) + " factors, config lists " +
                          std::to_string(cfg.factors.size()));
    for (std::size_t i = 0; i < cfg.factors.size(); ++i)
        if (cfg.factors[i].name != m.factor_names[i])
            throw ConfigError("factor " + std::to_string(i) + " must be named '" +
                              m.factor_names[i] + "' for model '" + cfg.model + "', got '" +
                              cfg.factors[i].name + "'");
    return m;
}

namespace detail {

inline std::string json_line_context(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return "line " + std::to_string(line);
}

inline void expect_keys(const nlohmann::json& j, const std::string& where,
                        std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) ok = true;
        if (!ok) throw ConfigError(where + ": unknown key '" + it.key() + "'");
    }
}

inline double need_number(const nlohmann::json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + ": missing '" + std::string(key) + "'");
    if (!j[key].is_number()) throw ConfigError(where + ": '" + key + "' must be a number");
    return j[key].get<double>();
}

inline double opt_number(const nlohmann::json& j, const char* key, double fallback,
                         const std::string& where) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw ConfigError(where + ": '" + key + "' must be a number");
    return j[key].get<double>();
}

inline std::size_t opt_size(const nlohmann::json& j, const char* key, std::size_t fallback,
                            const std::string& where) {
    const double v = opt_number(j, key, static_cast<double>(fallback), where);
    if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v)))
        throw ConfigError(where + ": '" + key + "' must be a non-negative integer");
    return static_cast<std::size_t>(v);
}

inline std::optional<std::uint64_t> opt_seed(const nlohmann::json& j, const char* key,
                                             const std::string& where) {
    if (!j.contains(key)) return std::nullopt;
    if (!j[key].is_number_integer() && !j[key].is_number_unsigned())
        throw ConfigError(where + ": '" + key + "' must be an integer seed");
    return j[key].get<std::uint64_t>();
}

inline BoxSpec parse_box(const nlohmann::json& j, const std::vector<FactorSpec>& factors,
                         const std::string& where) {
    BoxSpec spec;
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "ranges") return spec;
        throw ConfigError(where + ": expected \"ranges\", a {factor: [lo,hi]} object, or "
                          "{\"from_csv\": path}");
    }
    if (!j.is_object()) throw ConfigError(where + ": expected string or object");
    spec.use_ranges = false;
    if (j.contains("from_csv")) {
        const std::string path = j["from_csv"].get<std::string>();
        std::ifstream f(path);
        if (!f) throw ConfigError(where + ": cannot open '" + path + "'");
        std::string line;
        if (!std::getline(f, line)) throw ConfigError(where + ": '" + path + "' is empty");
        std::vector<std::string> cols;
        std::stringstream hs(line);
        std::string tok;
        while (std::getline(hs, tok, ',')) cols.push_back(tok);
        std::size_t ci_name = cols.size(), ci_lo = cols.size(), ci_hi = cols.size();
        for (std::size_t i = 0; i < cols.size(); ++i) {
            if (cols[i] == "factor") ci_name = i;
            if (cols[i] == "lower") ci_lo = i;
            if (cols[i] == "upper") ci_hi = i;
        }
        if (ci_name == cols.size() || ci_lo == cols.size() || ci_hi == cols.size())
            throw ConfigError(where + ": '" + path +
                              "' needs factor, lower and upper columns");
        std::vector<std::string> names;
        std::vector<Interval> ivs;
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            std::vector<std::string> cells;
            std::stringstream ls(line);
            while (std::getline(ls, tok, ',')) cells.push_back(tok);
            if (cells.size() < cols.size())
                throw ConfigError(where + ": short row in '" + path + "'");
            names.push_back(cells[ci_name]);
            try {
                ivs.emplace_back(std::stod(cells[ci_lo]), std::stod(cells[ci_hi]));
            } catch (const std::exception& e) {
                throw ConfigError(where + ": bad interval for '" + names.back() + "' in '" +
                                  path + "': " + e.what());
            }
        }
        for (const auto& fac : factors) {
            bool found = false;
            for (std::size_t i = 0; i < names.size(); ++i)
                if (names[i] == fac.name) {
                    spec.intervals.push_back(ivs[i]);
                    found = true;
                    break;
                }
            if (!found)
                throw ConfigError(where + ": '" + path + "' has no row for factor '" +
                                  fac.name + "'");
        }
        return spec;
    }
    for (const auto& fac : factors) {
        if (!j.contains(fac.name))
            throw ConfigError(where + ": missing interval for factor '" + fac.name + "'");
        const auto& iv = j[fac.name];
        if (!iv.is_array() || iv.size() != 2)
            throw ConfigError(where + ": factor '" + fac.name + "' must map to [lo, hi]");
        spec.intervals.emplace_back(iv[0].get<double>(), iv[1].get<double>());
    }
    if (j.size() != factors.size())
        throw ConfigError(where + ": object lists a factor the config does not declare");
    return spec;
}

}  // namespace detail

inline ProblemConfig parse_config(const std::string& text, const std::string& source_name) {
    using nlohmann::json;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(source_name + ": " + detail::json_line_context(text, e.byte) + ": " +
                          e.what());
    }
    // A manifest embeds the resolved config it ran with; accept it directly so
    // a run can be reproduced straight from its artifact.
    if (j.is_object() && j.contains("command") && j.contains("config")) j = j["config"];
    if (!j.is_object()) throw ConfigError(source_name + ": top level must be an object");

    detail::expect_keys(j, source_name,
                        {"model", "model_constants", "factors", "nominal_file", "grid", "loss",
                         "lambda", "data", "fit", "oat", "shrink", "sa", "ua", "converge",
                         "integrator", "seed"});

    ProblemConfig cfg;
    if (j.contains("model")) cfg.model = j["model"].get<std::string>();

    if (j.contains("model_constants")) {
        const auto& mc = j["model_constants"];
        detail::expect_keys(mc, "model_constants", {"total_humans", "initial_infected_humans"});
        cfg.total_humans = detail::opt_number(mc, "total_humans", cfg.total_humans,
                                              "model_constants");
        cfg.initial_infected_humans = detail::opt_number(
            mc, "initial_infected_humans", cfg.initial_infected_humans, "model_constants");
    }

    if (!j.contains("factors") || !j["factors"].is_array() || j["factors"].empty())
        throw ConfigError(source_name + ": 'factors' must be a non-empty array");
    for (const auto& fj : j["factors"]) {
        detail::expect_keys(fj, "factors", {"name", "range", "nominal"});
        FactorSpec f;
        if (!fj.contains("name")) throw ConfigError("factors: entry without 'name'");
        f.name = fj["name"].get<std::string>();
        const std::string where = "factor '" + f.name + "'";
        if (!fj.contains("range") || !fj["range"].is_array() || fj["range"].size() != 2)
            throw ConfigError(where + ": 'range' must be [lo, hi]");
        try {
            f.range = Interval(fj["range"][0].get<double>(), fj["range"][1].get<double>());
        } catch (const std::exception& e) {
            throw ConfigError(where + ": " + e.what());
        }
        if (fj.contains("nominal")) {
            f.nominal = detail::need_number(fj, "nominal", where);
            if (!f.range.contains(*f.nominal))
                throw ConfigError(where + ": nominal " + fmt17(*f.nominal) +
                                  " lies outside range [" + fmt17(f.range.lower) + ", " +
                                  fmt17(f.range.upper) + "]");
        }
        cfg.factors.push_back(std::move(f));
    }

    if (j.contains("nominal_file")) {
        const std::string path = j["nominal_file"].get<std::string>();
        std::ifstream f(path);
        if (!f) throw ConfigError("nominal_file: cannot open '" + path + "'");
        std::stringstream buf;
        buf << f.rdbuf();
        json nj;
        try {
            nj = json::parse(buf.str());
        } catch (const json::parse_error& e) {
            throw ConfigError("nominal_file '" + path + "': " + e.what());
        }
        if (!nj.contains("factors") || !nj["factors"].is_object())
            throw ConfigError("nominal_file '" + path + "': expected a 'factors' object");
        for (auto& fac : cfg.factors) {
            if (fac.nominal) continue;  // explicit config nominal wins
            if (!nj["factors"].contains(fac.name))
                throw ConfigError("nominal_file '" + path + "': no entry for factor '" +
                                  fac.name + "'");
            const double v = nj["factors"][fac.name].get<double>();
            if (!fac.range.contains(v))
                throw ConfigError("factor '" + fac.name + "': nominal " + fmt17(v) +
                                  " from '" + path + "' lies outside its range");
            fac.nominal = v;
        }
    }

    if (!j.contains("grid")) throw ConfigError(source_name + ": missing 'grid'");
    {
        const auto& gj = j["grid"];
        detail::expect_keys(gj, "grid", {"start", "stop", "step", "points"});
        try {
            if (gj.contains("points")) {
                cfg.grid_points = gj["points"].get<std::vector<double>>();
                (void)TimeGrid(cfg.grid_points);  // enforce the grid invariants now
            } else {
                const double start = detail::need_number(gj, "start", "grid");
                const double stop = detail::need_number(gj, "stop", "grid");
                const double step = detail::need_number(gj, "step", "grid");
                cfg.grid_points = TimeGrid::regular(start, stop, step).points;
            }
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError(std::string("grid: ") + e.what());
        }
    }

    if (j.contains("loss")) {
        detail::expect_keys(j["loss"], "loss", {"alpha"});
        cfg.loss.alpha = detail::opt_number(j["loss"], "alpha", cfg.loss.alpha, "loss");
        if (!(cfg.loss.alpha >= 1.0) || !std::isfinite(cfg.loss.alpha))
            throw ConfigError("loss: 'alpha' must be finite and >= 1");
    }

    if (j.contains("lambda")) {
        const auto& lj = j["lambda"];
        if (!lj.is_object() || lj.size() != 1 ||
            !(lj.contains("percent") || lj.contains("multiplier")))
            throw ConfigError("lambda: give units explicitly, {\"percent\": 30} or "
                              "{\"multiplier\": 1.3}");
        cfg.lambda = lj.contains("percent")
                         ? 1.0 + detail::need_number(lj, "percent", "lambda") / 100.0
                         : detail::need_number(lj, "multiplier", "lambda");
        if (!(cfg.lambda > 0.0) || !std::isfinite(cfg.lambda))
            throw ConfigError("lambda: must resolve to a positive finite multiplier");
    }

    if (j.contains("data")) {
        const auto& dj = j["data"];
        detail::expect_keys(dj, "data", {"file", "synthetic"});
        if (dj.contains("file") == dj.contains("synthetic"))
            throw ConfigError("data: give exactly one of 'file' or 'synthetic'");
        if (dj.contains("file")) {
            cfg.data.kind = DataSpec::Kind::file;
            cfg.data.file = dj["file"].get<std::string>();
        } else {
            cfg.data.kind = DataSpec::Kind::synthetic;
            const auto& sj = dj["synthetic"];
            detail::expect_keys(sj, "data.synthetic", {"noise", "seed"});
            cfg.data.noise = detail::opt_number(sj, "noise", 0.0, "data.synthetic");
            if (cfg.data.noise < 0.0)
                throw ConfigError("data.synthetic: 'noise' must be >= 0");
            cfg.data.seed = detail::opt_seed(sj, "seed", "data.synthetic");
        }
    }

    if (j.contains("fit")) {
        const auto& fj = j["fit"];
        detail::expect_keys(fj, "fit", {"n_starts", "tol", "max_evals", "filter", "seed"});
        cfg.fit.n_starts = detail::opt_size(fj, "n_starts", cfg.fit.n_starts, "fit");
        cfg.fit.tol = detail::opt_number(fj, "tol", cfg.fit.tol, "fit");
        cfg.fit.max_evals = detail::opt_size(fj, "max_evals", cfg.fit.max_evals, "fit");
        cfg.fit.filter = detail::opt_number(fj, "filter", cfg.fit.filter, "fit");
        cfg.fit.seed = detail::opt_seed(fj, "seed", "fit");
        if (cfg.fit.n_starts < 1) throw ConfigError("fit: 'n_starts' must be >= 1");
        if (!(cfg.fit.tol > 0.0)) throw ConfigError("fit: 'tol' must be > 0");
        if (cfg.fit.filter < 0.0) throw ConfigError("fit: 'filter' must be >= 0");
        if (cfg.fit.max_evals < cfg.factors.size() + 2)
            throw ConfigError("fit: 'max_evals' must cover at least one simplex (k+2)");
    }

    if (j.contains("oat")) {
        const auto& oj = j["oat"];
        detail::expect_keys(oj, "oat", {"up", "down", "imax", "band"});
        cfg.oat.up = detail::opt_number(oj, "up", cfg.oat.up, "oat");
        cfg.oat.down = detail::opt_number(oj, "down", cfg.oat.down, "oat");
        cfg.oat.imax = detail::opt_size(oj, "imax", cfg.oat.imax, "oat");
        cfg.oat.band = detail::opt_number(oj, "band", cfg.oat.band, "oat");
    }
    cfg.oat.lambda = cfg.lambda;

    if (j.contains("shrink")) {
        const auto& sj = j["shrink"];
        detail::expect_keys(sj, "shrink", {"n", "imax", "eta", "xi", "delta", "seed"});
        cfg.shrink.n = detail::opt_size(sj, "n", cfg.shrink.n, "shrink");
        cfg.shrink.imax = detail::opt_size(sj, "imax", cfg.shrink.imax, "shrink");
        cfg.shrink.eta = detail::opt_number(sj, "eta", cfg.shrink.eta, "shrink");
        cfg.shrink.xi = detail::opt_number(sj, "xi", cfg.shrink.xi, "shrink");
        cfg.shrink.delta = detail::opt_number(sj, "delta", cfg.shrink.delta, "shrink");
        if (auto s = detail::opt_seed(sj, "seed", "shrink")) {
            cfg.shrink.seed = *s;
            cfg.shrink_seed_set = true;
        }
    }
    cfg.shrink.lambda = cfg.lambda;

    if (j.contains("sa")) {
        const auto& sj = j["sa"];
        detail::expect_keys(sj, "sa", {"n", "box", "seed"});
        cfg.sa.n = detail::opt_size(sj, "n", cfg.sa.n, "sa");
        if (sj.contains("box")) cfg.sa.box = detail::parse_box(sj["box"], cfg.factors, "sa.box");
        cfg.sa.seed = detail::opt_seed(sj, "seed", "sa");
    }

    if (j.contains("ua")) {
        const auto& uj = j["ua"];
        detail::expect_keys(uj, "ua", {"n", "box", "envelope", "seed"});
        cfg.ua.n = detail::opt_size(uj, "n", cfg.ua.n, "ua");
        if (uj.contains("box")) cfg.ua.box = detail::parse_box(uj["box"], cfg.factors, "ua.box");
        if (uj.contains("envelope")) cfg.ua.envelope = uj["envelope"].get<bool>();
        cfg.ua.seed = detail::opt_seed(uj, "seed", "ua");
    }

    if (j.contains("converge")) {
        const auto& cj = j["converge"];
        detail::expect_keys(cj, "converge", {"sizes"});
        if (cj.contains("sizes")) {
            cfg.converge.sizes = cj["sizes"].get<std::vector<std::size_t>>();
            if (cfg.converge.sizes.empty())
                throw ConfigError("converge: 'sizes' must be non-empty");
            for (std::size_t i = 1; i < cfg.converge.sizes.size(); ++i)
                if (cfg.converge.sizes[i] <= cfg.converge.sizes[i - 1])
                    throw ConfigError("converge: 'sizes' must be strictly increasing");
        }
    }

    if (j.contains("integrator")) {
        const auto& ij = j["integrator"];
        detail::expect_keys(ij, "integrator", {"rel_tol", "abs_tol", "max_steps"});
        cfg.integrator.rel_tol =
            detail::opt_number(ij, "rel_tol", cfg.integrator.rel_tol, "integrator");
        cfg.integrator.abs_tol =
            detail::opt_number(ij, "abs_tol", cfg.integrator.abs_tol, "integrator");
        cfg.integrator.max_steps =
            detail::opt_size(ij, "max_steps", cfg.integrator.max_steps, "integrator");
        if (!(cfg.integrator.rel_tol > 0.0) || !(cfg.integrator.abs_tol > 0.0))
            throw ConfigError("integrator: tolerances must be > 0");
        if (cfg.integrator.max_steps < 1)
            throw ConfigError("integrator: 'max_steps' must be >= 1");
    }

    if (auto s = detail::opt_seed(j, "seed", source_name)) cfg.seed = *s;

    // Structural checks that need the whole config.
    try {
        make_model(cfg);
        validate(cfg.oat);
        validate(cfg.shrink);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(source_name + ": " + e.what());
    }
    if (cfg.sa.n < 16) throw ConfigError("sa: 'n' must be >= 16");
    for (std::size_t s : cfg.converge.sizes)
        if (s < 16) throw ConfigError("converge: every size must be >= 16");
    if (cfg.ua.n < 1) throw ConfigError("ua: 'n' must be >= 1");
    return cfg;
}

inline ProblemConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    return parse_config(buf.str(), path);
}

// Fill every optional seed from the root seed via named sub-streams, so one
// integer pins the whole run while explicit per-block seeds still win.
inline void resolve_seeds(ProblemConfig& cfg) {
    if (!cfg.data.seed) cfg.data.seed = substream_seed(cfg.seed, "data");
    if (!cfg.fit.seed) cfg.fit.seed = substream_seed(cfg.seed, "fit");
    if (!cfg.shrink_seed_set) {
        cfg.shrink.seed = substream_seed(cfg.seed, "shrink");
        cfg.shrink_seed_set = true;
    }
    if (!cfg.sa.seed) cfg.sa.seed = substream_seed(cfg.seed, "sa");
    if (!cfg.ua.seed) cfg.ua.seed = substream_seed(cfg.seed, "ua");
}

// Canonical serialization of the resolved config: fixed key order, fmt17
// numbers. Feeding the result back through parse_config reproduces the same
// object, which is what makes manifests replayable.
inline std::string serialize_config(const ProblemConfig& cfg) {
    io::JsonObj root;
    root.add("model", cfg.model);
    {
        io::JsonObj mc;
        mc.add("total_humans", cfg.total_humans);
        mc.add("initial_infected_humans", cfg.initial_infected_humans);
        root.raw("model_constants", mc.str());
    }
    {
        io::JsonArr facs;
        for (const auto& f : cfg.factors) {
            io::JsonObj fj;
            fj.add("name", f.name);
            fj.raw("range", io::JsonArr().add(f.range.lower).add(f.range.upper).str());
            if (f.nominal) fj.add("nominal", *f.nominal);
            facs.raw(fj.str());
        }
        root.raw("factors", facs.str());
    }
    {
        io::JsonArr pts;
        for (double t : cfg.grid_points) pts.add(t);
        root.raw("grid", io::JsonObj().raw("points", pts.str()).str());
    }
    root.raw("loss", io::JsonObj().add("alpha", cfg.loss.alpha).str());
    root.raw("lambda", io::JsonObj().add("multiplier", cfg.lambda).str());
    if (cfg.data.kind == DataSpec::Kind::file) {
        root.raw("data", io::JsonObj().add("file", cfg.data.file).str());
    } else if (cfg.data.kind == DataSpec::Kind::synthetic) {
        io::JsonObj sj;
        sj.add("noise", cfg.data.noise);
        if (cfg.data.seed) sj.add("seed", *cfg.data.seed);
        root.raw("data", io::JsonObj().raw("synthetic", sj.str()).str());
    }
    {
        io::JsonObj fj;
        fj.add("n_starts", cfg.fit.n_starts);
        fj.add("tol", cfg.fit.tol);
        fj.add("max_evals", cfg.fit.max_evals);
        fj.add("filter", cfg.fit.filter);
        if (cfg.fit.seed) fj.add("seed", *cfg.fit.seed);
        root.raw("fit", fj.str());
    }
    {
        io::JsonObj oj;
        oj.add("up", cfg.oat.up);
        oj.add("down", cfg.oat.down);
        oj.add("imax", cfg.oat.imax);
        oj.add("band", cfg.oat.band);
        root.raw("oat", oj.str());
    }
    {
        io::JsonObj sj;
        sj.add("n", cfg.shrink.n);
        sj.add("imax", cfg.shrink.imax);
        sj.add("eta", cfg.shrink.eta);
        sj.add("xi", cfg.shrink.xi);
        sj.add("delta", cfg.shrink.delta);
        if (cfg.shrink_seed_set) sj.add("seed", cfg.shrink.seed);
        root.raw("shrink", sj.str());
    }
    auto box_json = [&](const BoxSpec& b) {
        if (b.use_ranges) return std::string("\"ranges\"");
        io::JsonObj bj;
        for (std::size_t i = 0; i < cfg.factors.size(); ++i)
            bj.raw(cfg.factors[i].name,
                   io::JsonArr().add(b.intervals[i].lower).add(b.intervals[i].upper).str());
        return bj.str();
    };
    {
        io::JsonObj sj;
        sj.add("n", cfg.sa.n);
        sj.raw("box", box_json(cfg.sa.box));
        if (cfg.sa.seed) sj.add("seed", *cfg.sa.seed);
        root.raw("sa", sj.str());
    }
    {
        io::JsonObj uj;
        uj.add("n", cfg.ua.n);
        uj.raw("box", box_json(cfg.ua.box));
        uj.add("envelope", cfg.ua.envelope);
        if (cfg.ua.seed) uj.add("seed", *cfg.ua.seed);
        root.raw("ua", uj.str());
    }
    {
        io::JsonArr sizes;
        for (std::size_t s : cfg.converge.sizes) sizes.add(s);
        root.raw("converge", io::JsonObj().raw("sizes", sizes.str()).str());
    }
    {
        io::JsonObj ij;
        ij.add("rel_tol", cfg.integrator.rel_tol);
        ij.add("abs_tol", cfg.integrator.abs_tol);
        ij.add("max_steps", cfg.integrator.max_steps);
        root.raw("integrator", ij.str());
    }
    root.add("seed", cfg.seed);
    return root.str();
}

inline std::string config_hash(const ProblemConfig& cfg) {
    const std::string s = serialize_config(cfg);
    const std::uint64_t h = fnv1a(s);
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace csb

#endif
