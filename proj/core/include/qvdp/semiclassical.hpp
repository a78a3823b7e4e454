#pragma once

// Noisy-classical model of the conjugately coupled pair: the amplitude
// equation, the truncated-Wigner (Fokker-Planck) drift and diffusion, an
// Euler-Maruyama integrator for dX = mu dt + sqrt(D) dW, and histogram
// analysis of the stationary quadratures.

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "qvdp/lindblad.hpp"

namespace qvdp {

/// Quadratures X = (x1, y1, x2, y2), alpha_j = x_j + i y_j.
struct SdeState {
    double x1 = 0.0;
    double y1 = 0.0;
    double x2 = 0.0;
    double y2 = 0.0;

    std::array<double, 4> as_array() const { return {x1, y1, x2, y2}; }
    static SdeState from_array(const std::array<double, 4>& v) { return {v[0], v[1], v[2], v[3]}; }
    bool finite() const;
    friend bool operator==(const SdeState&, const SdeState&) = default;
};

using Vec4 = std::array<double, 4>;

/// Classical amplitude equation for (alpha_1, alpha_2).
std::pair<cplx, cplx> classical_rhs(cplx alpha1, cplx alpha2, const SystemSpec& spec);

/// Fokker-Planck drift vector (mu_x1, mu_y1, mu_x2, mu_y2).
Vec4 drift(const SdeState& x, const SystemSpec& spec);

/// nu_j = k1/2 + k2 (2 |alpha_j|^2 - 1) + epsilon/2.
double noise_intensity(double x, double y, const SystemSpec& spec);

/// Diagonal of D = 1/2 diag(nu1, nu1, nu2, nu2). Throws if any nu_j < 0.
Vec4 diffusion(const SdeState& x, const SystemSpec& spec);

struct EmOptions {
    /// Multiplies sigma; 0 gives the deterministic drift flow (test hook).
    double noise_scale = 1.0;
    /// Independent stream index (e.g. trajectory number) under the same seed.
    std::uint64_t stream = 0;
    /// Keep every n-th state (the initial state is always kept).
    std::size_t record_every = 1;
    double divergence_limit = 1e6;
};

struct Trajectory {
    double dt = 0.0;
    /// Spacing between stored samples is dt * record_every.
    std::size_t record_every = 1;
    std::vector<SdeState> samples;
    std::uint64_t seed = 0;
};

/// Thrown when |X| exceeds the divergence limit.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(std::size_t step, const std::string& what) : std::runtime_error(what), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

/// Euler-Maruyama: X_{n+1} = X_n + mu dt + sigma sqrt(dt) xi_n, where xi_n
/// are standard normals drawn from Philox keyed by `seed` with counter
/// (step, stream). Bitwise reproducible for fixed arguments.
Trajectory em_integrate(const SdeState& x0, const SystemSpec& spec, double dt, std::size_t n_steps,
                        std::uint64_t seed, const EmOptions& opts = {});

/// Visitor form of em_integrate: calls visit(step, state) after every step.
template <class Visitor>
SdeState em_run(const SdeState& x0, const SystemSpec& spec, double dt, std::size_t n_steps, std::uint64_t seed,
                const EmOptions& opts, Visitor&& visit);

/// Uniform on [-2, 2]^4, reproducible from (seed, stream).
SdeState random_initial_state(std::uint64_t seed, std::uint64_t stream = 0);

struct StationaryOptions {
    double dt = 1e-3;
    std::size_t steps = 2'000'000;
    double burn_in_fraction = 0.1;
    std::size_t trajectories = 1;
};

/// y1 samples after burn-in, from random initial conditions; trajectories
/// are concatenated in stream order.
std::vector<double> stationary_y1(const SystemSpec& spec, std::uint64_t seed, const StationaryOptions& opts = {});

struct Histogram {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<double> counts;

    double bin_width() const { return (hi - lo) / static_cast<double>(counts.size()); }
    double center(std::size_t i) const { return lo + (static_cast<double>(i) + 0.5) * bin_width(); }
};

Histogram histogram(std::span<const double> samples, int n_bins);

struct BimodalityReport {
    int modes = 1;
    double delta_y = 0.0;
    std::vector<double> peaks;
    Histogram hist;
};

/// Peaks of the 3-bin moving average exceeding both neighbours and half the
/// smoothed maximum. Two neighbouring peaks count separately only if the
/// smoothed histogram between them falls below (1 - min_dip) times the lower
/// of the two. delta_y separates the two outermost peaks. Needs at least 10^4
/// samples.
BimodalityReport bimodality(std::span<const double> samples, int n_bins = 100, double min_dip = 0.1);

}  // namespace qvdp

#include "qvdp/philox.hpp"

namespace qvdp {

template <class Visitor>
SdeState em_run(const SdeState& x0, const SystemSpec& spec, double dt, std::size_t n_steps, std::uint64_t seed,
                const EmOptions& opts, Visitor&& visit)
{
    if (!(dt > 0.0))
        throw std::invalid_argument("em_integrate: dt must be > 0");
    const Philox4x32 rng(seed);
    const double sqdt = std::sqrt(dt);
    Vec4 x = x0.as_array();
    for (std::size_t n = 0; n < n_steps; ++n) {
        const SdeState s = SdeState::from_array(x);
        const Vec4 mu = drift(s, spec);
        Vec4 sig{0.0, 0.0, 0.0, 0.0};
        if (opts.noise_scale != 0.0) {
            const Vec4 dd = diffusion(s, spec);
            for (int k = 0; k < 4; ++k)
                sig[k] = opts.noise_scale * std::sqrt(dd[k]);
        }
        const auto xi = rng.normals({static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(n >> 32),
                                     static_cast<std::uint32_t>(opts.stream),
                                     static_cast<std::uint32_t>(opts.stream >> 32)});
        double r2 = 0.0;
        for (int k = 0; k < 4; ++k) {
            x[k] += mu[k] * dt + sig[k] * sqdt * xi[k];
            r2 += x[k] * x[k];
        }
        if (!(r2 <= opts.divergence_limit * opts.divergence_limit))
            throw DivergenceError(n + 1, "em_integrate: trajectory diverged at step " + std::to_string(n + 1));
        visit(n + 1, SdeState::from_array(x));
    }
    return SdeState::from_array(x);
}

}  // namespace qvdp
