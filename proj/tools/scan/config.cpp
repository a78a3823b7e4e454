#include "config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

namespace qvdp::scan {

using nlohmann::json;

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

const std::vector<std::pair<Mode, std::string>>& mode_names()
{
    static const std::vector<std::pair<Mode, std::string>> names = {
        {Mode::steady, "steady"}, {Mode::evolve, "evolve"},   {Mode::sweep, "sweep"},
        {Mode::phase2d, "phase2d"}, {Mode::sde, "sde"},       {Mode::chimera, "chimera"},
        {Mode::negativity, "negativity"},
    };
    return names;
}

const std::set<std::string> all_parameters = {"epsilon_over_k1", "K", "V", "d"};

std::set<std::string> parameters_for(Mode m)
{
    if (m == Mode::chimera)
        return {"V", "d", "K"};
    return {"epsilon_over_k1", "K"};
}

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

struct Bound {
    double v;
    bool strict;
};

std::string describe(std::optional<Bound> lo, std::optional<Bound> hi)
{
    std::string s = lo ? (lo->strict ? "(" : "[") + fmt(lo->v) : "(-inf";
    s += ", ";
    s += hi ? fmt(hi->v) + (hi->strict ? ")" : "]") : "inf)";
    return s;
}

/// Reads keys of one JSON object and rejects anything it was not asked for.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object())
            throw ConfigError("config: " + where() + " must be an object");
    }

    bool has(const char* key) const { return j_.contains(key); }

    const json* raw(const char* key)
    {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    void real(const char* key, double& out, std::optional<Bound> lo = std::nullopt,
              std::optional<Bound> hi = std::nullopt)
    {
        const json* v = raw(key);
        if (!v)
            return;
        if (!v->is_number())
            throw ConfigError("config: " + name(key) + " must be a number");
        const double x = v->get<double>();
        const bool ok = std::isfinite(x) && (!lo || (lo->strict ? x > lo->v : x >= lo->v)) &&
                        (!hi || (hi->strict ? x < hi->v : x <= hi->v));
        if (!ok)
            throw ConfigError("config: " + name(key) + " = " + fmt(x) + " out of range; accepted " +
                              describe(lo, hi));
        out = x;
    }

    template <class Int>
    void integer(const char* key, Int& out, long long lo, long long hi)
    {
        const json* v = raw(key);
        if (!v)
            return;
        if (!v->is_number_integer())
            throw ConfigError("config: " + name(key) + " must be an integer");
        const long long x = v->is_number_unsigned() ? static_cast<long long>(v->get<unsigned long long>())
                                                    : v->get<long long>();
        if (x < lo || x > hi)
            throw ConfigError("config: " + name(key) + " = " + std::to_string(x) + " out of range; accepted [" +
                              std::to_string(lo) + ", " + std::to_string(hi) + "]");
        out = static_cast<Int>(x);
    }

    void unsigned64(const char* key, std::uint64_t& out, std::uint64_t lo = 0)
    {
        const json* v = raw(key);
        if (!v)
            return;
        if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0))
            throw ConfigError("config: " + name(key) + " must be a non-negative integer");
        const auto x = v->get<std::uint64_t>();
        if (x < lo)
            throw ConfigError("config: " + name(key) + " = " + std::to_string(x) + " out of range; accepted >= " +
                              std::to_string(lo));
        out = x;
    }

    void boolean(const char* key, bool& out)
    {
        const json* v = raw(key);
        if (!v)
            return;
        if (!v->is_boolean())
            throw ConfigError("config: " + name(key) + " must be true or false");
        out = v->get<bool>();
    }

    void string(const char* key, std::string& out)
    {
        const json* v = raw(key);
        if (!v)
            return;
        if (!v->is_string())
            throw ConfigError("config: " + name(key) + " must be a string");
        out = v->get<std::string>();
    }

    void finish() const
    {
        for (const auto& [k, _] : j_.items())
            if (!seen_.count(k)) {
                std::string accepted;
                for (const auto& s : seen_)
                    accepted += (accepted.empty() ? "" : ", ") + s;
                throw ConfigError("config: unknown key \"" + k + "\"" + (path_.empty() ? "" : " in " + path_) +
                                  "; accepted keys: " + accepted);
            }
    }

    std::string name(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    std::string where() const { return path_.empty() ? "top level" : path_; }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

constexpr int max_cutoff = 200;

void parse_system(const json& j, RunConfig& cfg)
{
    ObjectReader r(j, "system");
    std::string topo = to_string(cfg.spec.topology);
    r.string("topology", topo);
    if (topo == "single")
        cfg.spec.topology = Topology::single;
    else if (topo == "conjugate_pair")
        cfg.spec.topology = Topology::conjugate_pair;
    else
        throw ConfigError("config: system.topology = \"" + topo + "\" not supported; accepted: single, conjugate_pair");
    r.real("omega", cfg.spec.omega);
    r.real("K", cfg.spec.kerr, Bound{0.0, false});
    r.real("k1", cfg.spec.k1, Bound{0.0, true});
    r.real("k2", cfg.spec.k2, Bound{0.0, true});
    double eps_ratio = cfg.spec.epsilon / cfg.spec.k1;
    r.real("epsilon_over_k1", eps_ratio, Bound{0.0, false});
    cfg.spec.epsilon = eps_ratio * cfg.spec.k1;
    int n_max = cfg.spec.cutoff.n_max();
    r.integer("n_max", n_max, 1, max_cutoff);
    cfg.spec.cutoff = FockCutoff(n_max);
    r.finish();
}

void parse_ring(const json& j, RunConfig& cfg)
{
    ObjectReader r(j, "ring");
    r.integer("N", cfg.ring.n, 3, 100000);
    r.integer("d", cfg.ring.range, 1, 100000);
    r.real("V", cfg.ring.v);
    r.real("K", cfg.ring.kerr, Bound{0.0, false});
    r.real("k1", cfg.ring.k1, Bound{0.0, true});
    r.real("k2", cfg.ring.k2, Bound{0.0, true});
    int n_max = cfg.ring.cutoff.n_max();
    r.integer("n_max", n_max, 1, max_cutoff);
    cfg.ring.cutoff = FockCutoff(n_max);
    r.finish();
    if (2 * cfg.ring.range >= cfg.ring.n)
        throw ConfigError("config: ring.d = " + std::to_string(cfg.ring.range) + " out of range; accepted [1, N/2) for N=" +
                          std::to_string(cfg.ring.n));
}

SweepAxis parse_axis(const json& j, std::size_t idx, Mode mode)
{
    const std::string path = "sweep[" + std::to_string(idx) + "]";
    ObjectReader r(j, path);
    SweepAxis a;
    if (!r.has("parameter") || !r.has("min") || !r.has("max") || !r.has("count"))
        throw ConfigError("config: " + path + " needs parameter, min, max and count");
    r.string("parameter", a.parameter);
    if (!all_parameters.count(a.parameter))
        throw ConfigError("config: " + path + ".parameter = \"" + a.parameter +
                          "\" unknown; accepted: epsilon_over_k1, K, V, d");
    const auto allowed = parameters_for(mode);
    if (!allowed.count(a.parameter)) {
        std::string acc;
        for (const auto& s : allowed)
            acc += (acc.empty() ? "" : ", ") + s;
        throw ConfigError("config: " + path + ".parameter = \"" + a.parameter + "\" cannot be swept in " +
                          to_string(mode) + " mode; accepted: " + acc);
    }
    r.real("min", a.min);
    r.real("max", a.max);
    r.integer("count", a.count, 2, 100000);
    r.finish();
    if (a.parameter != "V" && a.min < 0.0)
        throw ConfigError("config: " + path + ".min = " + fmt(a.min) + " out of range; " + a.parameter + " must be >= 0");
    if (a.parameter == "d") {
        for (int i = 0; i < a.count; ++i) {
            const double v = a.value(i);
            if (std::abs(v - std::round(v)) > 1e-9)
                throw ConfigError("config: " + path + " for d must hit integers only (value " + fmt(v) + ")");
        }
    }
    return a;
}

void parse_grid(const json& j, RunConfig& cfg)
{
    ObjectReader r(j, "grid");
    r.real("x_min", cfg.grid.x_min);
    r.real("x_max", cfg.grid.x_max);
    r.real("y_min", cfg.grid.y_min);
    r.real("y_max", cfg.grid.y_max);
    r.integer("nx", cfg.grid.nx, 16, 100000);
    r.integer("ny", cfg.grid.ny, 16, 100000);
    r.finish();
    try {
        cfg.grid.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: grid: ") + e.what());
    }
}

void parse_classify(const json& j, RunConfig& cfg)
{
    ObjectReader r(j, "classify");
    r.real("rel_threshold", cfg.classify.rel_threshold, Bound{0.0, true}, Bound{1.0, false});
    r.real("y_tol", cfg.classify.y_tol, Bound{0.0, true});
    r.real("ring_min_radius", cfg.classify.ring_min_radius, Bound{0.0, false});
    r.real("min_ring_coverage", cfg.classify.min_ring_coverage, Bound{0.0, false},
           Bound{2.0 * std::numbers::pi, false});
    r.finish();
}

void parse_solver(const json& j, RunConfig& cfg)
{
    ObjectReader r(j, "solver");
    std::string m = cfg.solver.method == SteadySolver::automatic ? "automatic"
                    : cfg.solver.method == SteadySolver::sparse_lu ? "sparse_lu"
                                                                   : "gmres";
    r.string("method", m);
    if (m == "automatic")
        cfg.solver.method = SteadySolver::automatic;
    else if (m == "sparse_lu")
        cfg.solver.method = SteadySolver::sparse_lu;
    else if (m == "gmres")
        cfg.solver.method = SteadySolver::gmres;
    else
        throw ConfigError("config: solver.method = \"" + m + "\" unknown; accepted: automatic, sparse_lu, gmres");
    r.real("residual_tol", cfg.solver.residual_tol, Bound{0.0, true});
    r.integer("direct_solve_max_dim", cfg.solver.direct_solve_max_dim, 1, 100000000);
    r.real("gmres_tol", cfg.solver.gmres_tol, Bound{0.0, true});
    r.real("fallback_time", cfg.solver.fallback_time, Bound{0.0, true});
    r.finish();
}

void parse_evolve(const json& j, RunConfig& cfg)
{
    ObjectReader r(j, "evolve");
    r.real("t_final", cfg.evolve.t_final, Bound{0.0, true});
    r.real("dt", cfg.evolve.dt, Bound{0.0, true});
    r.real("sample_every", cfg.evolve.sample_every, Bound{0.0, true});
    r.finish();
}

void parse_sde(const json& j, RunConfig& cfg)
{
    ObjectReader r(j, "sde");
    r.real("dt", cfg.sde.dt, Bound{0.0, true});
    r.unsigned64("steps", cfg.sde.steps, 1);
    r.real("burn_in_fraction", cfg.sde.burn_in_fraction, Bound{0.0, false}, Bound{1.0, true});
    r.unsigned64("trajectories", cfg.sde.trajectories, 1);
    r.integer("bins", cfg.sde.bins, 3, 1000000);
    r.unsigned64("trajectory_stride", cfg.sde.trajectory_stride);
    r.finish();
}

void parse_chimera(const json& j, RunConfig& cfg)
{
    ObjectReader r(j, "chimera");
    r.integer("coherent_count", cfg.chimera.coherent_count, 0, 100000);
    if (r.has("amplitude")) {
        double a = 0.0;
        r.real("amplitude", a, Bound{0.0, false});
        cfg.chimera.amplitude = a;
    }
    r.real("t_final", cfg.chimera.t_final, Bound{0.0, false});
    r.real("dt", cfg.chimera.dt, Bound{0.0, true});
    r.boolean("predictor_corrector", cfg.chimera.predictor_corrector);
    r.boolean("dump_husimi", cfg.chimera.dump_husimi);
    r.finish();
}

std::vector<SweepAxis> default_axes(Mode m)
{
    switch (m) {
    case Mode::sweep:
        return {{"epsilon_over_k1", 0.0, 3.0, 31}};
    case Mode::phase2d:
    case Mode::negativity:
        return {{"epsilon_over_k1", 0.0, 3.0, 16}, {"K", 0.0, 1.0, 11}};
    default:
        return {};
    }
}

void check_axis_count(const RunConfig& cfg)
{
    const auto n = cfg.axes.size();
    auto fail = [&](const std::string& need) {
        throw ConfigError("config: " + to_string(cfg.mode) + " mode needs " + need + " sweep axes, got " +
                          std::to_string(n));
    };
    switch (cfg.mode) {
    case Mode::steady:
    case Mode::evolve:
        if (n != 0)
            fail("0");
        break;
    case Mode::sweep:
        if (n != 1)
            fail("exactly 1");
        break;
    case Mode::phase2d:
        if (n != 2)
            fail("exactly 2");
        break;
    case Mode::negativity:
    case Mode::sde:
    case Mode::chimera:
        if (n > 2)
            fail("at most 2");
        break;
    }
    if (n == 2 && cfg.axes[0].parameter == cfg.axes[1].parameter)
        throw ConfigError("config: sweep axes must name different parameters");
}

}  // namespace

std::string to_string(Mode m)
{
    for (const auto& [k, v] : mode_names())
        if (k == m)
            return v;
    return "unknown";
}

std::optional<Mode> mode_from_string(const std::string& s)
{
    for (const auto& [k, v] : mode_names())
        if (v == s)
            return k;
    return std::nullopt;
}

double SweepAxis::value(int i) const
{
    if (i == count - 1)
        return max;
    return min + (max - min) * static_cast<double>(i) / static_cast<double>(count - 1);
}

SteadyStateOptions SolverConfig::options() const
{
    SteadyStateOptions o;
    o.solver = method;
    o.residual_tol = residual_tol;
    o.direct_solve_max_dim = direct_solve_max_dim;
    o.gmres_tol = gmres_tol;
    o.fallback_time = fallback_time;
    return o;
}

double ChimeraConfig::resolved_amplitude(const RingSpec& ring) const
{
    return amplitude ? *amplitude : std::sqrt(ring.k1 / (2.0 * ring.k2));
}

SystemSpec RunConfig::default_system()
{
    SystemSpec s;
    s.topology = Topology::conjugate_pair;
    s.cutoff = FockCutoff(16);
    return s;
}

RunConfig parse_config(const json& j, std::optional<Mode> mode)
{
    ObjectReader top(j, "");
    RunConfig cfg;

    std::string mode_str;
    top.string("mode", mode_str);
    if (!mode_str.empty()) {
        const auto m = mode_from_string(mode_str);
        if (!m)
            throw ConfigError("config: mode = \"" + mode_str +
                              "\" unknown; accepted: steady, evolve, sweep, phase2d, sde, chimera, negativity");
        if (mode && *mode != *m)
            throw ConfigError("config: mode = \"" + mode_str + "\" conflicts with subcommand " + to_string(*mode));
        cfg.mode = *m;
    } else if (mode) {
        cfg.mode = *mode;
    } else {
        throw ConfigError("config: mode missing; accepted: steady, evolve, sweep, phase2d, sde, chimera, negativity");
    }

    top.string("output_dir", cfg.output_dir);
    if (cfg.output_dir.empty())
        throw ConfigError("config: output_dir must not be empty");
    top.unsigned64("seed", cfg.seed);
    top.boolean("dump_fields", cfg.dump_fields);
    top.boolean("check_boundary", cfg.check_boundary);

    if (const json* v = top.raw("system"))
        parse_system(*v, cfg);
    if (const json* v = top.raw("ring"))
        parse_ring(*v, cfg);
    if (const json* v = top.raw("grid"))
        parse_grid(*v, cfg);
    if (const json* v = top.raw("classify"))
        parse_classify(*v, cfg);
    if (const json* v = top.raw("solver"))
        parse_solver(*v, cfg);
    if (const json* v = top.raw("evolve"))
        parse_evolve(*v, cfg);
    if (const json* v = top.raw("sde"))
        parse_sde(*v, cfg);
    if (const json* v = top.raw("chimera"))
        parse_chimera(*v, cfg);

    if (const json* v = top.raw("sweep")) {
        if (!v->is_array())
            throw ConfigError("config: sweep must be an array of axes");
        for (std::size_t i = 0; i < v->size(); ++i)
            cfg.axes.push_back(parse_axis((*v)[i], i, cfg.mode));
    } else {
        cfg.axes = default_axes(cfg.mode);
    }
    top.finish();

    check_axis_count(cfg);
    if (cfg.chimera.coherent_count > cfg.ring.n)
        throw ConfigError("config: chimera.coherent_count = " + std::to_string(cfg.chimera.coherent_count) +
                          " out of range; accepted [0, " + std::to_string(cfg.ring.n) + "]");
    if (cfg.mode == Mode::negativity && cfg.spec.topology != Topology::conjugate_pair)
        throw ConfigError("config: negativity mode needs system.topology = conjugate_pair");
    if (cfg.mode == Mode::sde && cfg.spec.topology != Topology::conjugate_pair)
        throw ConfigError("config: sde mode needs system.topology = conjugate_pair");
    if (cfg.check_boundary && cfg.mode != Mode::phase2d)
        throw ConfigError("config: check_boundary applies to phase2d mode only");
    try {
        cfg.spec.validate();
        cfg.ring.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

RunConfig load_config(const std::string& path, std::optional<Mode> mode)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("config: cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config: " + path + ": " + e.what());
    }
    return parse_config(j, mode);
}

json to_json(const RunConfig& cfg)
{
    json j;
    j["mode"] = to_string(cfg.mode);
    j["output_dir"] = cfg.output_dir;
    j["seed"] = cfg.seed;
    j["dump_fields"] = cfg.dump_fields;
    j["check_boundary"] = cfg.check_boundary;
    j["system"] = {
        {"topology", to_string(cfg.spec.topology)},
        {"omega", cfg.spec.omega},
        {"K", cfg.spec.kerr},
        {"k1", cfg.spec.k1},
        {"k2", cfg.spec.k2},
        {"epsilon_over_k1", cfg.spec.epsilon / cfg.spec.k1},
        {"n_max", cfg.spec.cutoff.n_max()},
    };
    j["ring"] = {
        {"N", cfg.ring.n},   {"d", cfg.ring.range}, {"V", cfg.ring.v},
        {"K", cfg.ring.kerr}, {"k1", cfg.ring.k1},  {"k2", cfg.ring.k2},
        {"n_max", cfg.ring.cutoff.n_max()},
    };
    j["sweep"] = json::array();
    for (const auto& a : cfg.axes)
        j["sweep"].push_back({{"parameter", a.parameter}, {"min", a.min}, {"max", a.max}, {"count", a.count}});
    j["grid"] = {
        {"x_min", cfg.grid.x_min}, {"x_max", cfg.grid.x_max}, {"y_min", cfg.grid.y_min},
        {"y_max", cfg.grid.y_max}, {"nx", cfg.grid.nx},       {"ny", cfg.grid.ny},
    };
    j["classify"] = {
        {"rel_threshold", cfg.classify.rel_threshold},
        {"y_tol", cfg.classify.y_tol},
        {"ring_min_radius", cfg.classify.ring_min_radius},
        {"min_ring_coverage", cfg.classify.min_ring_coverage},
    };
    j["solver"] = {
        {"method", cfg.solver.method == SteadySolver::automatic ? "automatic"
                   : cfg.solver.method == SteadySolver::sparse_lu ? "sparse_lu"
                                                                  : "gmres"},
        {"residual_tol", cfg.solver.residual_tol},
        {"direct_solve_max_dim", cfg.solver.direct_solve_max_dim},
        {"gmres_tol", cfg.solver.gmres_tol},
        {"fallback_time", cfg.solver.fallback_time},
    };
    j["evolve"] = {{"t_final", cfg.evolve.t_final}, {"dt", cfg.evolve.dt}, {"sample_every", cfg.evolve.sample_every}};
    j["sde"] = {
        {"dt", cfg.sde.dt},
        {"steps", cfg.sde.steps},
        {"burn_in_fraction", cfg.sde.burn_in_fraction},
        {"trajectories", cfg.sde.trajectories},
        {"bins", cfg.sde.bins},
        {"trajectory_stride", cfg.sde.trajectory_stride},
    };
    j["chimera"] = {
        {"coherent_count", cfg.chimera.coherent_count},
        {"amplitude", cfg.chimera.resolved_amplitude(cfg.ring)},
        {"t_final", cfg.chimera.t_final},
        {"dt", cfg.chimera.dt},
        {"predictor_corrector", cfg.chimera.predictor_corrector},
        {"dump_husimi", cfg.chimera.dump_husimi},
    };
    return j;
}

void apply_parameter(RunConfig& cfg, const std::string& name, double value)
{
    if (name == "epsilon_over_k1") {
        cfg.spec.epsilon = value * cfg.spec.k1;
    } else if (name == "K") {
        cfg.spec.kerr = value;
        cfg.ring.kerr = value;
    } else if (name == "V") {
        cfg.ring.v = value;
    } else if (name == "d") {
        cfg.ring.range = static_cast<int>(std::lround(value));
    } else {
        throw ConfigError("config: unknown sweep parameter \"" + name + "\"; accepted: epsilon_over_k1, K, V, d");
    }
}

}  // namespace qvdp::scan
