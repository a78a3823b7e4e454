#include "qvdp/chimera.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "qvdp/lindblad.hpp"
#include "qvdp/phasespace.hpp"
#include "qvdp/philox.hpp"

namespace qvdp {

void RingSpec::validate() const
{
    if (n < 3)
        throw std::invalid_argument("RingSpec: N must be >= 3, got " + std::to_string(n));
    if (range < 1 || 2 * range >= n)
        throw std::invalid_argument("RingSpec: coupling range d must satisfy 1 <= d < N/2, got d=" +
                                    std::to_string(range) + " for N=" + std::to_string(n));
    if (!std::isfinite(v) || !std::isfinite(kerr) || kerr < 0.0)
        throw std::invalid_argument("RingSpec: V must be finite and K >= 0");
    if (!(k1 > 0.0) || !(k2 > 0.0) || !std::isfinite(k1) || !std::isfinite(k2))
        throw std::invalid_argument("RingSpec: k1 and k2 must be finite and > 0");
}

namespace {

struct SiteOps {
    ComplexOperator a;
    ComplexOperator ad;
    ComplexOperator kerr_term;
    std::vector<Dissipator> ds;
};

SiteOps site_ops(const RingSpec& ring)
{
    SiteOps o;
    o.a = annihilation(ring.cutoff);
    o.ad = creation(ring.cutoff);
    const ComplexOperator n = number_op(ring.cutoff);
    o.kerr_term = cplx(ring.kerr) * (n * n);
    o.ds = {{o.ad, 2.0 * ring.k1}, {o.a * o.a, 2.0 * ring.k2}};
    return o;
}

cplx mean_of(const DenseMatrix& rho, const SparseMatrix& a)
{
    // Tr(rho a) = sum_n sqrt(n) rho(n, n-1)
    cplx s = 0.0;
    for (int k = 0; k < a.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(a, k); it; ++it)
            s += it.value() * rho(it.col(), it.row());
    return s;
}

DenseMatrix rk4(const ComplexOperator& h, const std::vector<Dissipator>& ds, const DenseMatrix& rho, double dt)
{
    const DenseMatrix k1 = master_rhs(h, ds, rho);
    const DenseMatrix k2 = master_rhs(h, ds, rho + 0.5 * dt * k1);
    const DenseMatrix k3 = master_rhs(h, ds, rho + 0.5 * dt * k2);
    const DenseMatrix k4 = master_rhs(h, ds, rho + dt * k3);
    return rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void check_state(const MeanFieldState& s, const RingSpec& ring)
{
    if (static_cast<int>(s.rhos.size()) != ring.n || static_cast<int>(s.means.size()) != ring.n)
        throw std::invalid_argument("mean_field_step: state has " + std::to_string(s.rhos.size()) +
                                    " sites, ring has " + std::to_string(ring.n));
    for (const auto& r : s.rhos)
        if (r.dim() != ring.cutoff.dim())
            throw std::invalid_argument("mean_field_step: site dimension does not match the cutoff");
}

std::vector<DensityMatrix> advance(const std::vector<DensityMatrix>& rhos, std::span<const cplx> means,
                                   const RingSpec& ring, const SiteOps& ops, double dt)
{
    std::vector<DensityMatrix> out;
    out.reserve(rhos.size());
    for (int j = 0; j < ring.n; ++j) {
        const cplx f = coupling_field(ring, means, j);
        const ComplexOperator h = ops.kerr_term + std::conj(f) * ops.a + f * ops.ad;
        DenseMatrix next = rk4(h, ops.ds, rhos[j].matrix(), dt);
        if (!next.allFinite())
            throw std::runtime_error("mean_field_step: non-finite state at oscillator " + std::to_string(j));
        out.push_back(DensityMatrix::normalized(std::move(next), {ring.cutoff.dim()}));
    }
    return out;
}

std::vector<cplx> refresh_means(const std::vector<DensityMatrix>& rhos, const SparseMatrix& a)
{
    std::vector<cplx> means(rhos.size());
    for (std::size_t j = 0; j < rhos.size(); ++j) {
        means[j] = mean_of(rhos[j].matrix(), a);
        if (!std::isfinite(means[j].real()) || !std::isfinite(means[j].imag()))
            throw std::runtime_error("mean_field_step: non-finite <a> at oscillator " + std::to_string(j));
    }
    return means;
}

}  // namespace

MeanFieldState mean_field_state(const RingSpec& ring, std::span<const ComplexVector> kets)
{
    ring.validate();
    if (static_cast<int>(kets.size()) != ring.n)
        throw std::invalid_argument("mean_field_state: expected " + std::to_string(ring.n) + " kets");
    MeanFieldState s;
    for (const auto& k : kets)
        s.rhos.push_back(DensityMatrix::pure(k, {ring.cutoff.dim()}));
    s.means = refresh_means(s.rhos, annihilation(ring.cutoff).sparse());
    return s;
}

MeanFieldState init_chimera(const RingSpec& ring, int coherent_count, double amplitude, std::uint64_t seed)
{
    ring.validate();
    if (coherent_count < 0 || coherent_count > ring.n)
        throw std::invalid_argument("init_chimera: coherent_count must lie in [0, " + std::to_string(ring.n) +
                                    "], got " + std::to_string(coherent_count));
    const Philox4x32 rng(seed);
    std::vector<ComplexVector> kets;
    kets.reserve(ring.n);
    for (int j = 0; j < ring.n; ++j) {
        double phi = 0.0;
        if (j >= coherent_count)
            phi = 2.0 * std::numbers::pi * rng.uniforms({static_cast<std::uint32_t>(j), 0u, 0u, 0xC4u})[0];
        double deficit = 0.0;
        kets.push_back(coherent_ket(std::polar(amplitude, phi), ring.cutoff, &deficit));
        if (deficit > 1e-4)
            throw std::invalid_argument("init_chimera: amplitude " + std::to_string(amplitude) +
                                        " loses " + std::to_string(deficit) + " of the norm at n_max=" +
                                        std::to_string(ring.cutoff.n_max()));
    }
    return mean_field_state(ring, kets);
}

cplx coupling_field(const RingSpec& ring, std::span<const cplx> means, int site)
{
    cplx f = 0.0;
    for (int o = -ring.range; o <= ring.range; ++o) {
        if (o == 0)
            continue;
        f += means[static_cast<std::size_t>(((site + o) % ring.n + ring.n) % ring.n)];
    }
    return f * (ring.v / (2.0 * ring.range));
}

MeanFieldState mean_field_step(const MeanFieldState& state, const RingSpec& ring, double dt,
                               const MeanFieldOptions& opts)
{
    check_state(state, ring);
    if (!(dt > 0.0))
        throw std::invalid_argument("mean_field_step: dt must be > 0");
    const SiteOps ops = site_ops(ring);
    const SparseMatrix a = ops.a.sparse();

    MeanFieldState next;
    next.rhos = advance(state.rhos, state.means, ring, ops, dt);
    next.means = refresh_means(next.rhos, a);
    if (opts.predictor_corrector) {
        std::vector<cplx> mid(state.means.size());
        for (std::size_t j = 0; j < mid.size(); ++j)
            mid[j] = 0.5 * (state.means[j] + next.means[j]);
        next.rhos = advance(state.rhos, mid, ring, ops, dt);
        next.means = refresh_means(next.rhos, a);
    }
    next.time = state.time + dt;
    return next;
}

MeanFieldState evolve_mean_field(MeanFieldState state, const RingSpec& ring, double t_final, double dt,
                                 const MeanFieldOptions& opts)
{
    if (!(t_final >= 0.0) || !(dt > 0.0))
        throw std::invalid_argument("evolve_mean_field: need t_final >= 0 and dt > 0");
    const double t_end = state.time + t_final;
    const auto steps = static_cast<long>(std::ceil(t_final / dt - 1e-9));
    for (long s = 0; s < steps; ++s) {
        const double h = std::min(dt, t_end - state.time);
        if (h <= 0.0)
            break;
        state = mean_field_step(state, ring, h, opts);
    }
    state.time = t_end;
    return state;
}

std::vector<SiteCoherence> coherence_profile(const MeanFieldState& state)
{
    std::vector<SiteCoherence> out;
    out.reserve(state.rhos.size());
    for (const auto& r : state.rhos) {
        const SqueezingInfo sq = squeezing(r);
        out.push_back({sq.angle, sq.anisotropy});
    }
    return out;
}

std::optional<double> circular_variance(std::span<const SiteCoherence> profile, int first, int last)
{
    if (first < 0 || last > static_cast<int>(profile.size()) || first > last)
        throw std::out_of_range("circular_variance: window [" + std::to_string(first) + ", " + std::to_string(last) +
                                ") outside profile of size " + std::to_string(profile.size()));
    cplx acc = 0.0;
    int count = 0;
    for (int j = first; j < last; ++j) {
        if (!profile[j].angle)
            continue;
        acc += std::polar(1.0, 2.0 * *profile[j].angle);
        ++count;
    }
    if (count == 0)
        return std::nullopt;
    return 1.0 - std::abs(acc) / count;
}

double mean_anisotropy(std::span<const SiteCoherence> profile)
{
    if (profile.empty())
        return 0.0;
    double s = 0.0;
    for (const auto& p : profile)
        s += p.anisotropy;
    return s / static_cast<double>(profile.size());
}

}  // namespace qvdp
