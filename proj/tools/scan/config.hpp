#pragma once

// Run configuration for the qvdp driver: strict JSON parsing, defaults and
// the manifest echo.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qvdp/chimera.hpp"
#include "qvdp/lindblad.hpp"
#include "qvdp/phasespace.hpp"

namespace qvdp::scan {

enum class Mode { steady, evolve, sweep, phase2d, sde, chimera, negativity };

std::string to_string(Mode m);
std::optional<Mode> mode_from_string(const std::string& s);

/// Raised for every malformed or out-of-range configuration entry.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SweepAxis {
    /// One of epsilon_over_k1, K, V, d.
    std::string parameter;
    double min = 0.0;
    double max = 0.0;
    int count = 2;

    double value(int i) const;
};

struct SolverConfig {
    SteadySolver method = SteadySolver::automatic;
    double residual_tol = 1e-8;
    int direct_solve_max_dim = 3000;
    double gmres_tol = 1e-12;
    double fallback_time = 400.0;

    SteadyStateOptions options() const;
};

struct EvolveConfig {
    double t_final = 20.0;
    double dt = 1e-3;
    double sample_every = 0.1;
};

struct SdeConfig {
    double dt = 1e-3;
    std::uint64_t steps = 2'000'000;
    double burn_in_fraction = 0.1;
    std::uint64_t trajectories = 1;
    int bins = 100;
    /// Write every n-th state of trajectory 0 per point; 0 disables.
    std::uint64_t trajectory_stride = 0;
};

struct ChimeraConfig {
    int coherent_count = 21;
    /// Defaults to the classical limit-cycle radius sqrt(k1 / 2 k2).
    std::optional<double> amplitude;
    double t_final = 1.0;
    double dt = 1e-3;
    bool predictor_corrector = false;
    bool dump_husimi = true;

    double resolved_amplitude(const RingSpec& ring) const;
};

struct RunConfig {
    Mode mode = Mode::steady;
    SystemSpec spec = default_system();
    RingSpec ring;
    std::vector<SweepAxis> axes;
    PhaseGrid grid;
    ClassifyOptions classify;
    SolverConfig solver;
    EvolveConfig evolve;
    SdeConfig sde;
    ChimeraConfig chimera;
    std::string output_dir = "out";
    std::uint64_t seed = 1;
    bool dump_fields = false;
    bool check_boundary = false;

    /// Conjugately coupled pair at omega=2, k1=1, k2=0.2, n_max=16.
    static SystemSpec default_system();
};

/// Strictly parses a configuration object. Missing keys take defaults,
/// unknown keys and out-of-range values raise ConfigError naming the key.
/// If `mode` is given it must agree with any "mode" key in `j`.
RunConfig parse_config(const nlohmann::json& j, std::optional<Mode> mode = std::nullopt);

/// Reads and parses a JSON file.
RunConfig load_config(const std::string& path, std::optional<Mode> mode = std::nullopt);

/// Fully resolved configuration, every default spelled out. Feeding the
/// result back to parse_config reproduces the same RunConfig.
nlohmann::json to_json(const RunConfig& cfg);

/// Sets a sweep parameter on the configuration.
void apply_parameter(RunConfig& cfg, const std::string& name, double value);

}  // namespace qvdp::scan
