#include "qvdp/semiclassical.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qvdp {

bool SdeState::finite() const
{
    return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) && std::isfinite(y2);
}

std::pair<cplx, cplx> classical_rhs(cplx alpha1, cplx alpha2, const SystemSpec& spec)
{
    const cplx i(0.0, 1.0);
    auto one = [&](cplx a, cplx other) {
        const double r2 = std::norm(a);
        return -i * (spec.omega + 2.0 * spec.kerr * r2) * a + (spec.k1 / 2.0 - spec.k2 * r2) * a -
               (spec.epsilon / 2.0) * ((a + std::conj(a)) + i * (other - std::conj(other)));
    };
    return {one(alpha1, alpha2), one(alpha2, alpha1)};
}

Vec4 drift(const SdeState& s, const SystemSpec& spec)
{
    auto one = [&](double x, double y, double y_other, double& mx, double& my) {
        const double r2 = x * x + y * y;
        const double rot = spec.omega + 2.0 * spec.kerr * r2;
        const double gain = spec.k1 / 2.0 - spec.k2 * (r2 - 1.0);
        mx = rot * y + (gain - spec.epsilon) * x + spec.epsilon * y_other;
        my = -rot * x + gain * y;
    };
    Vec4 mu{};
    one(s.x1, s.y1, s.y2, mu[0], mu[1]);
    one(s.x2, s.y2, s.y1, mu[2], mu[3]);
    return mu;
}

double noise_intensity(double x, double y, const SystemSpec& spec)
{
    return spec.k1 / 2.0 + spec.k2 * (2.0 * (x * x + y * y) - 1.0) + spec.epsilon / 2.0;
}

Vec4 diffusion(const SdeState& s, const SystemSpec& spec)
{
    const double nu1 = noise_intensity(s.x1, s.y1, spec);
    const double nu2 = noise_intensity(s.x2, s.y2, spec);
    if (nu1 < 0.0 || nu2 < 0.0)
        throw std::domain_error("diffusion: negative noise intensity (nu1=" + std::to_string(nu1) +
                                ", nu2=" + std::to_string(nu2) + ")");
    return {0.5 * nu1, 0.5 * nu1, 0.5 * nu2, 0.5 * nu2};
}

Trajectory em_integrate(const SdeState& x0, const SystemSpec& spec, double dt, std::size_t n_steps,
                        std::uint64_t seed, const EmOptions& opts)
{
    if (!x0.finite())
        throw std::invalid_argument("em_integrate: non-finite initial state");
    const std::size_t every = std::max<std::size_t>(1, opts.record_every);
    Trajectory traj;
    traj.dt = dt;
    traj.record_every = every;
    traj.seed = seed;
    traj.samples.reserve(n_steps / every + 1);
    traj.samples.push_back(x0);
    em_run(x0, spec, dt, n_steps, seed, opts, [&](std::size_t step, const SdeState& s) {
        if (step % every == 0)
            traj.samples.push_back(s);
    });
    return traj;
}

SdeState random_initial_state(std::uint64_t seed, std::uint64_t stream)
{
    // Counter word 3 tags initial-condition draws apart from the noise stream.
    const Philox4x32 rng(seed);
    const auto u = rng.uniforms({0u, 0u, static_cast<std::uint32_t>(stream), 0x1C1C1C1Cu});
    return {4.0 * u[0] - 2.0, 4.0 * u[1] - 2.0, 4.0 * u[2] - 2.0, 4.0 * u[3] - 2.0};
}

std::vector<double> stationary_y1(const SystemSpec& spec, std::uint64_t seed, const StationaryOptions& opts)
{
    if (!(opts.burn_in_fraction >= 0.0 && opts.burn_in_fraction < 1.0))
        throw std::invalid_argument("stationary_y1: burn_in_fraction must lie in [0, 1)");
    const auto burn = static_cast<std::size_t>(opts.burn_in_fraction * static_cast<double>(opts.steps));
    std::vector<double> out;
    out.reserve((opts.steps - burn) * opts.trajectories);
    for (std::size_t t = 0; t < opts.trajectories; ++t) {
        EmOptions em;
        em.stream = t;
        em_run(random_initial_state(seed, t), spec, opts.dt, opts.steps, seed, em,
               [&](std::size_t step, const SdeState& s) {
                   if (step > burn)
                       out.push_back(s.y1);
               });
    }
    return out;
}

Histogram histogram(std::span<const double> samples, int n_bins)
{
    if (n_bins < 3)
        throw std::invalid_argument("histogram: need at least 3 bins");
    if (samples.empty())
        throw std::invalid_argument("histogram: no samples");
    const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
    Histogram h;
    h.lo = *mn;
    h.hi = *mx;
    if (!(h.hi > h.lo)) {
        h.lo -= 0.5;
        h.hi += 0.5;
    }
    h.counts.assign(static_cast<std::size_t>(n_bins), 0.0);
    const double w = h.bin_width();
    for (double v : samples) {
        auto b = static_cast<long>((v - h.lo) / w);
        b = std::clamp<long>(b, 0, n_bins - 1);
        h.counts[static_cast<std::size_t>(b)] += 1.0;
    }
    return h;
}

BimodalityReport bimodality(std::span<const double> samples, int n_bins, double min_dip)
{
    if (samples.size() < 10'000)
        throw std::invalid_argument("bimodality: need at least 10^4 samples, got " + std::to_string(samples.size()));
    BimodalityReport rep;
    rep.hist = histogram(samples, n_bins);
    const auto& c = rep.hist.counts;
    const std::size_t n = c.size();

    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = c[i];
        int cnt = 1;
        if (i > 0) {
            acc += c[i - 1];
            ++cnt;
        }
        if (i + 1 < n) {
            acc += c[i + 1];
            ++cnt;
        }
        s[i] = acc / cnt;
    }
    const double smax = *std::max_element(s.begin(), s.end());
    std::vector<std::size_t> cand;
    for (std::size_t i = 0; i < n; ++i) {
        const double left = i > 0 ? s[i - 1] : 0.0;
        const double right = i + 1 < n ? s[i + 1] : 0.0;
        if (s[i] > left && s[i] >= right && s[i] >= 0.5 * smax)
            cand.push_back(i);
    }
    // Neighbouring candidates without a clear dip between them are sampling
    // wiggles on one hump; keep the taller.
    for (bool merged = true; merged && cand.size() > 1;) {
        merged = false;
        for (std::size_t k = 0; k + 1 < cand.size(); ++k) {
            const std::size_t p = cand[k], q = cand[k + 1];
            const double dip = *std::min_element(s.begin() + static_cast<long>(p), s.begin() + static_cast<long>(q) + 1);
            if (dip > (1.0 - min_dip) * std::min(s[p], s[q])) {
                cand.erase(cand.begin() + static_cast<long>(s[p] >= s[q] ? k + 1 : k));
                merged = true;
                break;
            }
        }
    }
    for (std::size_t i : cand)
        rep.peaks.push_back(rep.hist.center(i));
    if (rep.peaks.size() >= 2) {
        rep.modes = 2;
        rep.delta_y = rep.peaks.back() - rep.peaks.front();
    } else {
        rep.modes = 1;
        rep.delta_y = 0.0;
    }
    return rep;
}

}  // namespace qvdp
