#pragma once

// Run modes of the qvdp driver. Each run_* evaluates its points in parallel
// and returns rows in sweep order; execute() writes CSV, field dumps and the
// manifest from a single thread so outputs are byte-identical across runs
// and thread counts.

#include <atomic>
#include <iosfwd>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "config.hpp"
#include "qvdp/chimera.hpp"
#include "qvdp/phasespace.hpp"
#include "qvdp/semiclassical.hpp"

namespace qvdp::scan {

/// Name of the environment variable holding the worker thread count.
inline constexpr const char* threads_env = "QVDP_THREADS";

/// Worker count from QVDP_THREADS, else the hardware concurrency.
int thread_count_from_env();

/// Calls f(i) for i in [0, n) on up to `threads` workers. f must not throw.
template <class F>
void parallel_for(std::size_t n, int threads, F&& f)
{
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++)
            f(i);
    };
    const auto t = static_cast<std::size_t>(std::max(1, threads));
    if (t == 1 || n <= 1) {
        worker();
        return;
    }
    std::vector<std::jthread> pool;
    for (std::size_t k = 0; k < std::min(t, n); ++k)
        pool.emplace_back(worker);
}

/// Points of the sweep grid in row-major order (first axis slowest).
std::vector<std::vector<double>> sweep_points(const std::vector<SweepAxis>& axes);

struct PointStatus {
    bool ok = true;
    std::string message;
};

struct QuantumRow {
    std::vector<double> params;
    PointStatus status;
    Regime classification = Regime::unknown;
    double delta_y = 0.0;
    int n_maxima = 0;
    double mean_n1 = 0.0;
    std::string method;
    double residual = 0.0;
    /// Wigner field of oscillator 1, kept when dump_fields is set.
    std::optional<PhaseField> wigner;
};

struct SweepTable {
    std::vector<std::string> axes;
    std::vector<QuantumRow> rows;
    std::size_t failed() const;
};

SweepTable run_sweep(const RunConfig& cfg, int threads = 1);
SweepTable run_phase2d(const RunConfig& cfg, int threads = 1);

struct BoundaryPoint {
    double kerr = 0.0;
    /// Smallest swept epsilon/k1 classified QOD at this K.
    std::optional<double> epsilon_star;
};

struct BoundaryCheck {
    std::vector<BoundaryPoint> points;
    /// epsilon* nondecreasing in K over the values where QOD was found.
    bool monotone = true;
};

/// Requires an (epsilon_over_k1, K) phase diagram.
BoundaryCheck qod_boundary(const SweepTable& table);

struct NegativityRow {
    std::vector<double> params;
    PointStatus status;
    double negativity = 0.0;
    double min_pt_eigenvalue = 0.0;
    double mean_n1 = 0.0;
    std::string method;
    double residual = 0.0;
};

struct NegativityTable {
    std::vector<std::string> axes;
    std::vector<NegativityRow> rows;
    std::size_t failed() const;
};

NegativityTable run_negativity(const RunConfig& cfg, int threads = 1);

struct SdeRow {
    std::vector<double> params;
    PointStatus status;
    int modes = 0;
    double delta_y = 0.0;
    std::size_t samples = 0;
    Histogram hist;
    std::vector<SdeState> trajectory;
};

struct SdeTable {
    std::vector<std::string> axes;
    std::vector<SdeRow> rows;
    std::size_t failed() const;
};

SdeTable run_sde(const RunConfig& cfg, int threads = 1);

struct ChimeraRow {
    std::vector<double> params;
    PointStatus status;
    std::optional<double> cv_coherent;
    std::optional<double> cv_incoherent;
    double mean_anisotropy = 0.0;
    std::vector<SiteCoherence> profile;
    std::vector<PhaseField> husimi;
};

struct ChimeraTable {
    std::vector<std::string> axes;
    std::vector<ChimeraRow> rows;
    std::size_t failed() const;
};

ChimeraTable run_chimera(const RunConfig& cfg, int threads = 1);

struct SteadyReport {
    QuantumRow row;
    std::optional<double> negativity;
    std::optional<PhaseField> husimi;
    LobeReport lobes;
};

SteadyReport run_steady(const RunConfig& cfg);

struct EvolveSample {
    double t = 0.0;
    double mean_n1 = 0.0;
    double mean_n2 = 0.0;
};

struct EvolveReport {
    PointStatus status;
    std::vector<EvolveSample> samples;
    std::optional<PhaseField> wigner;
    LobeReport lobes;
};

/// Evolves the vacuum to evolve.t_final, sampling mean photon numbers.
EvolveReport run_evolve(const RunConfig& cfg);

// Output ---------------------------------------------------------------------

/// Fixed "%.10g" rendering used by every CSV writer.
std::string format_number(double v);

void write_csv(const SweepTable& t, std::ostream& os);
void write_csv(const NegativityTable& t, std::ostream& os);
void write_csv(const SdeTable& t, std::ostream& os);
void write_csv(const ChimeraTable& t, std::ostream& os);
void write_profile_csv(const std::vector<SiteCoherence>& profile, std::ostream& os);
void write_histogram_csv(const Histogram& h, std::ostream& os);

struct ExecuteResult {
    std::size_t points = 0;
    std::size_t failed = 0;
    std::vector<std::string> outputs;
    nlohmann::json manifest;
};

/// Runs the configured mode, writing everything below cfg.output_dir
/// (created if missing) including manifest.json.
ExecuteResult execute(const RunConfig& cfg, int threads);

}  // namespace qvdp::scan
