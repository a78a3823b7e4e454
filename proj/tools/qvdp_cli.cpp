// qvdp: steady states, sweeps, phase diagrams, negativity scans, stochastic
// and chimera runs for coupled Kerr-vdP oscillators.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "scan/config.hpp"
#include "scan/runs.hpp"

namespace {

using nlohmann::json;
using qvdp::scan::Mode;

struct Flags {
    std::string config;
    std::optional<std::string> output_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> topology;
    std::optional<double> omega, kerr, k1, k2, epsilon_over_k1;
    std::optional<int> n_max;
    std::vector<std::string> sweep;
    std::optional<int> grid_n;
    bool dump_fields = false;
    bool check_boundary = false;
    std::optional<int> ring_n, ring_d;
    std::optional<double> ring_v;
    std::optional<int> coherent_count;
    std::optional<double> t_final;
    std::optional<std::uint64_t> steps, trajectories;
};

json axis_from_flag(const std::string& s)
{
    // parameter:min:max:count
    std::vector<std::string> parts;
    std::size_t start = 0;
    for (std::size_t pos; (pos = s.find(':', start)) != std::string::npos; start = pos + 1)
        parts.push_back(s.substr(start, pos - start));
    parts.push_back(s.substr(start));
    if (parts.size() != 4)
        throw qvdp::scan::ConfigError("--sweep \"" + s + "\": expected parameter:min:max:count");
    try {
        std::size_t used = 0;
        const long long count = std::stoll(parts[3], &used);
        if (used != parts[3].size())
            throw std::invalid_argument("count");
        return {{"parameter", parts[0]}, {"min", std::stod(parts[1])}, {"max", std::stod(parts[2])}, {"count", count}};
    } catch (const std::logic_error&) {
        throw qvdp::scan::ConfigError("--sweep \"" + s + "\": min/max must be numbers and count an integer");
    }
}

json merged_config(const Flags& f, Mode mode)
{
    json j = json::object();
    if (!f.config.empty()) {
        std::ifstream in(f.config);
        if (!in)
            throw qvdp::scan::ConfigError("config: cannot open " + f.config);
        try {
            j = json::parse(in);
        } catch (const json::parse_error& e) {
            throw qvdp::scan::ConfigError("config: " + f.config + ": " + e.what());
        }
        if (!j.is_object())
            throw qvdp::scan::ConfigError("config: " + f.config + " must hold a JSON object");
    }
    auto set = [&](const char* section, const char* key, const auto& v) {
        if (!v)
            return;
        if (section)
            j[section][key] = *v;
        else
            j[key] = *v;
    };
    set(nullptr, "output_dir", f.output_dir);
    set(nullptr, "seed", f.seed);
    if (f.dump_fields)
        j["dump_fields"] = true;
    if (f.check_boundary)
        j["check_boundary"] = true;
    set("system", "topology", f.topology);
    set("system", "omega", f.omega);
    set("system", "k1", f.k1);
    set("system", "k2", f.k2);
    set("system", "epsilon_over_k1", f.epsilon_over_k1);
    set("system", "n_max", f.n_max);
    set(mode == Mode::chimera ? "ring" : "system", "K", f.kerr);
    set("ring", "N", f.ring_n);
    set("ring", "d", f.ring_d);
    set("ring", "V", f.ring_v);
    set("chimera", "coherent_count", f.coherent_count);
    if (f.t_final)
        j[mode == Mode::chimera ? "chimera" : "evolve"]["t_final"] = *f.t_final;
    set("sde", "steps", f.steps);
    set("sde", "trajectories", f.trajectories);
    if (f.grid_n) {
        j["grid"]["nx"] = *f.grid_n;
        j["grid"]["ny"] = *f.grid_n;
    }
    if (!f.sweep.empty()) {
        j["sweep"] = json::array();
        for (const auto& s : f.sweep)
            j["sweep"].push_back(axis_from_flag(s));
    }
    return j;
}

void add_options(CLI::App* sub, Flags& f, Mode mode)
{
    sub->add_option("-c,--config", f.config, "JSON configuration file")->check(CLI::ExistingFile);
    sub->add_option("-o,--output-dir", f.output_dir, "Output directory");
    sub->add_option("--seed", f.seed, "Random seed");
    sub->add_option("--sweep", f.sweep, "Sweep axis parameter:min:max:count (repeatable)");
    sub->add_option("--grid-n", f.grid_n, "Phase-space grid points per axis");
    sub->add_option("--K", f.kerr, "Kerr parameter");
    if (mode == Mode::chimera) {
        sub->add_option("--N", f.ring_n, "Ring size");
        sub->add_option("--d", f.ring_d, "Coupling range");
        sub->add_option("--V", f.ring_v, "Coupling strength");
        sub->add_option("--coherent-count", f.coherent_count, "Sites starting in phase");
        sub->add_option("--t-final", f.t_final, "Evolution time");
        return;
    }
    sub->add_option("--topology", f.topology, "single or conjugate_pair");
    sub->add_option("--omega", f.omega, "Natural frequency");
    sub->add_option("--k1", f.k1, "Linear pumping rate");
    sub->add_option("--k2", f.k2, "Nonlinear damping rate");
    sub->add_option("--epsilon-over-k1", f.epsilon_over_k1, "Coupling strength in units of k1");
    sub->add_option("--n-max", f.n_max, "Fock cutoff per oscillator");
    sub->add_flag("--dump-fields", f.dump_fields, "Write per-point Wigner grids");
    if (mode == Mode::phase2d)
        sub->add_flag("--check-boundary", f.check_boundary, "Report QOD boundary monotonicity");
    if (mode == Mode::evolve)
        sub->add_option("--t-final", f.t_final, "Evolution time");
    if (mode == Mode::sde) {
        sub->add_option("--steps", f.steps, "Euler-Maruyama steps per trajectory");
        sub->add_option("--trajectories", f.trajectories, "Trajectories per point");
    }
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Coupled quantum van der Pol oscillators with Kerr nonlinearity"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("qvdp ") + QVDP_VERSION);
    app.footer(std::string("Worker threads: set ") + qvdp::scan::threads_env + " (default: all cores).");

    Flags flags;
    std::vector<std::pair<CLI::App*, Mode>> subs;
    const std::pair<const char*, const char*> descr[] = {
        {"steady", "Steady state, Wigner/Husimi grids and lobe classification"},
        {"evolve", "Time evolution from the vacuum"},
        {"sweep", "1-D bifurcation sweep"},
        {"phase2d", "2-D classification diagram"},
        {"sde", "Noisy-classical stationary histograms"},
        {"chimera", "Mean-field ring and coherence profile"},
        {"negativity", "Steady-state negativity scan"},
    };
    for (const auto& [name, text] : descr) {
        const Mode m = *qvdp::scan::mode_from_string(name);
        CLI::App* sub = app.add_subcommand(name, text);
        add_options(sub, flags, m);
        subs.emplace_back(sub, m);
    }

    CLI11_PARSE(app, argc, argv);

    try {
        Mode mode = Mode::steady;
        for (const auto& [sub, m] : subs)
            if (sub->parsed())
                mode = m;
        const qvdp::scan::RunConfig cfg = qvdp::scan::parse_config(merged_config(flags, mode), mode);
        const int threads = qvdp::scan::thread_count_from_env();
        const auto res = qvdp::scan::execute(cfg, threads);
        std::fprintf(stderr, "qvdp %s: %zu point(s), %zu failed; outputs in %s\n", qvdp::scan::to_string(mode).c_str(),
                     res.points, res.failed, cfg.output_dir.c_str());
        return res.failed == 0 ? 0 : 1;
    } catch (const qvdp::scan::ConfigError& e) {
        std::fprintf(stderr, "qvdp: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "qvdp: error: %s\n", e.what());
        return 1;
    }
}
