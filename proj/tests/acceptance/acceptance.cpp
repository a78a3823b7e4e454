// Acceptance suite. Usage: acceptance [P1 ... P6 | all]
//
// Prints detail lines for each criterion followed by one summary line
// "<id> PASS|FAIL <title>". Exit status is nonzero if any requested
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <unsupported/Eigen/KroneckerProduct>

#include "qvdp/chimera.hpp"
#include "qvdp/entanglement.hpp"
#include "qvdp/lindblad.hpp"
#include "qvdp/phasespace.hpp"
#include "qvdp/semiclassical.hpp"

using namespace qvdp;

namespace {

using Clock = std::chrono::steady_clock;

// Negativities below this are indistinguishable from round-off in the
// partial-transpose spectrum and are treated as exactly zero.
constexpr double negativity_floor = 1e-9;

struct Outcome {
    bool pass = true;

    void check(bool ok, const char* fmt, auto... args)
    {
        std::printf("  [%s] ", ok ? "ok" : "FAIL");
        if constexpr (sizeof...(args) == 0)
            std::fputs(fmt, stdout);
        else
            std::printf(fmt, args...);
        std::printf("\n");
        pass = pass && ok;
    }
};

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

SystemSpec pair_spec(double eps_over_k1, double kerr, int n_max = 16)
{
    SystemSpec s;
    s.topology = Topology::conjugate_pair;
    s.kerr = kerr;
    s.epsilon = eps_over_k1 * s.k1;
    s.cutoff = FockCutoff(n_max);
    return s;
}

DensityMatrix steady(const SystemSpec& spec)
{
    return steady_state(build_liouvillian(spec)).rho;
}

LobeReport lobes(const DensityMatrix& rho)
{
    return classify(wigner(partial_trace(rho, 0), PhaseGrid{}));
}

double mean_n1(const DensityMatrix& rho, FockCutoff c)
{
    return expectation(partial_trace(rho, 0), number_op(c)).real();
}

DenseMatrix random_density(int dim, std::mt19937_64& gen)
{
    std::normal_distribution<double> g;
    DenseMatrix a(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
            a(i, j) = cplx(g(gen), g(gen));
    DenseMatrix rho = a * a.adjoint();
    return rho / rho.trace();
}

// Regime labels --------------------------------------------------------------

bool p1()
{
    Outcome o;
    const auto t0 = Clock::now();
    struct Point {
        double eps, kerr;
        Regime want;
    };
    for (const Point& p : {Point{0.1, 0.0, Regime::osc}, Point{1.4, 0.0, Regime::qad}, Point{1.99, 0.0, Regime::qod},
                           Point{1.99, 0.5, Regime::qad}}) {
        const LobeReport r = lobes(steady(pair_spec(p.eps, p.kerr)));
        bool ok = r.classification == p.want;
        if (p.want == Regime::qod)
            ok = ok && r.delta_y > 0.0;
        o.check(ok, "eps/k1=%.2f K=%.2f: %s (want %s), delta_y=%.4f", p.eps, p.kerr, to_string(r.classification).c_str(),
                to_string(p.want).c_str(), r.delta_y);
    }
    const double dt = seconds_since(t0);
    o.check(dt < 600.0, "runtime %.1f s (limit 600 s)", dt);
    return o.pass;
}

// Kerr-driven QOD -> QAD transition ------------------------------------------

bool p2()
{
    Outcome o;
    const std::vector<double> ks{0.02, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.85};
    std::vector<Regime> labels;
    for (double k : ks) {
        const LobeReport r = lobes(steady(pair_spec(2.5, k)));
        labels.push_back(r.classification);
        std::printf("  eps/k1=2.50 K=%.2f: %s, delta_y=%.4f\n", k, to_string(r.classification).c_str(), r.delta_y);
    }
    o.check(labels.front() == Regime::qod, "QOD at K=0.02");
    o.check(labels.back() == Regime::qad, "QAD at K=0.85");
    std::size_t first_qad = labels.size();
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == Regime::qad) {
            first_qad = i;
            break;
        }
    const bool bracketed = first_qad > 0 && first_qad < labels.size();
    if (bracketed)
        o.check(ks[first_qad - 1] > 0.02 - 1e-12 && ks[first_qad] <= 0.85,
                "transition K* in (%.2f, %.2f], inside (0.02, 0.85)", ks[first_qad - 1], ks[first_qad]);
    else
        o.check(false, "no QOD -> QAD transition found on the K grid");
    return o.pass;
}

// Semiclassical histograms vs Wigner lobes -----------------------------------

bool p3()
{
    Outcome o;
    StationaryOptions so;
    so.steps = 2'000'000;
    so.burn_in_fraction = 0.1;
    const SystemSpec bi = pair_spec(1.99, 0.0);
    const SystemSpec uni = pair_spec(1.99, 0.5);

    const std::vector<double> y0 = stationary_y1(bi, 1, so);
    const BimodalityReport r0 = bimodality(y0);
    o.check(y0.size() >= 1'800'000, "K=0 samples after burn-in: %zu", y0.size());
    o.check(r0.modes == 2, "K=0 histogram modes: %d, delta_y=%.4f", r0.modes, r0.delta_y);

    const std::vector<double> y5 = stationary_y1(uni, 1, so);
    const BimodalityReport r5 = bimodality(y5);
    o.check(r5.modes == 1, "K=0.5 histogram modes: %d", r5.modes);

    const LobeReport w = lobes(steady(bi));
    const double rel = w.delta_y > 0.0 ? std::abs(r0.delta_y - w.delta_y) / w.delta_y : INFINITY;
    o.check(rel <= 0.2, "delta_y sde=%.4f wigner=%.4f relative difference %.3f (limit 0.2)", r0.delta_y, w.delta_y, rel);
    return o.pass;
}

// Negativity trends -----------------------------------------------------------

bool p4()
{
    Outcome o;
    auto neg = [](double eps, double k) {
        const NegativityResult r = negativity(steady(pair_spec(eps, k)));
        std::printf("  eps/k1=%.2f K=%.2f: N=%.6e, min PT eigenvalue=%.6e\n", eps, k, r.value, r.spectrum.front());
        return r.value < negativity_floor ? 0.0 : r.value;
    };
    const double n00 = neg(0.0, 0.0);
    const double n10 = neg(1.0, 0.0);
    const double n25 = neg(2.5, 0.0);
    const double n25_4 = neg(2.5, 0.4);
    const double n25_85 = neg(2.5, 0.85);
    o.check(std::abs(n00) < 1e-6, "N(eps=0) = %.3e below 1e-6", n00);
    o.check(n00 < n10 && n10 < n25, "strictly increasing in eps at K=0: %.3e < %.3e < %.3e", n00, n10, n25);
    o.check(n25 > n25_4 && n25_4 > n25_85, "strictly decreasing in K at eps/k1=2.5: %.3e > %.3e > %.3e", n25, n25_4,
            n25_85);
    return o.pass;
}

// Chimera contrast -------------------------------------------------------------

bool p5()
{
    Outcome o;
    const auto t0 = Clock::now();
    RingSpec ring;
    ring.n = 50;
    ring.range = 10;
    ring.v = 1.2;
    const int coherent = 21;
    const double amp = std::sqrt(ring.k1 / (2.0 * ring.k2));

    ring.kerr = 0.0;
    MeanFieldState s0 = evolve_mean_field(init_chimera(ring, coherent, amp, 1), ring, 1.0);
    const auto prof0 = coherence_profile(s0);
    const auto cv_coh = circular_variance(prof0, 0, 21);
    const auto cv_inc = circular_variance(prof0, 21, 49);
    if (cv_coh && cv_inc)
        o.check(*cv_coh <= 0.5 * *cv_inc, "K=0: cv(1-21)=%.4f, cv(22-49)=%.4f, ratio %.3f (limit 0.5)", *cv_coh, *cv_inc,
                *cv_coh / *cv_inc);
    else
        o.check(false, "K=0: circular variance undefined (all sites isotropic in a window)");

    ring.kerr = 1.0;
    MeanFieldState s1 = evolve_mean_field(init_chimera(ring, coherent, amp, 1), ring, 1.0);
    const double an = mean_anisotropy(coherence_profile(s1));
    o.check(an < 0.1, "K=1: mean anisotropy %.5f (limit 0.1)", an);

    const double dt = seconds_since(t0);
    o.check(dt < 900.0, "runtime %.1f s (limit 900 s)", dt);
    return o.pass;
}

// Property suite -----------------------------------------------------------------

bool p6()
{
    Outcome o;
    std::mt19937_64 gen(20240611);

    {
        double worst_trace = 0.0, worst_oracle = 0.0;
        for (const auto& [eps, k] : {std::pair{0.0, 0.0}, {1.4, 0.3}, {2.5, 0.85}}) {
            const SystemSpec spec = pair_spec(eps, k, 6);
            const Liouvillian l = build_liouvillian(spec);
            const ComplexOperator h = hamiltonian(spec);
            const auto ds = dissipators(spec);
            for (int rep = 0; rep < 3; ++rep) {
                const DenseMatrix rho = random_density(spec.hilbert_dim(), gen);
                const DenseMatrix a = l.apply(rho);
                const DenseMatrix b = master_rhs(h, ds, rho);
                worst_trace = std::max(worst_trace, std::abs(a.trace()));
                worst_oracle = std::max(worst_oracle, (a - b).cwiseAbs().maxCoeff());
            }
        }
        o.check(worst_trace < 1e-10, "trace preservation: max |Tr L(rho)| = %.2e", worst_trace);
        o.check(worst_oracle < 1e-10, "superoperator vs direct RHS: max diff %.2e", worst_oracle);
    }

    {
        const SystemSpec spec = pair_spec(0.0, 0.3);
        const DensityMatrix rho = steady(spec);
        const DensityMatrix r1 = partial_trace(rho, 0);
        const DensityMatrix r2 = partial_trace(rho, 1);
        const DensityMatrix prod(kroneckerProduct(r1.matrix(), r2.matrix()).eval(), rho.subsystem_dims());
        const double td = trace_distance(rho, prod);
        o.check(td < 1e-6, "eps=0 factorization: trace distance %.2e", td);
    }

    {
        double worst = 0.0;
        for (const auto& [eps, k] :
             {std::pair{0.1, 0.0}, {1.4, 0.0}, {1.99, 0.0}, {1.99, 0.5}, {2.5, 0.02}, {2.5, 0.85}}) {
            const double a = mean_n1(steady(pair_spec(eps, k, 16)), FockCutoff(16));
            const double b = mean_n1(steady(pair_spec(eps, k, 19)), FockCutoff(19));
            const double rel = std::abs(a - b) / std::abs(b);
            std::printf("  <n1> eps/k1=%.2f K=%.2f: n_max=16 %.6f, n_max=19 %.6f\n", eps, k, a, b);
            worst = std::max(worst, rel);
        }
        o.check(worst < 0.01, "cutoff convergence: max relative <n> shift %.2e (limit 1e-2)", worst);
    }

    {
        ComplexVector psi = ComplexVector::Zero(4);
        psi(0) = psi(3) = 1.0 / std::sqrt(2.0);
        const double n = negativity(DensityMatrix::pure(psi, {2, 2})).value;
        o.check(std::abs(n - 0.5) <= 1e-9, "Bell negativity %.12f", n);
    }

    {
        const SystemSpec spec = pair_spec(1.99, 0.0);
        const SdeState x0 = random_initial_state(7);
        const Trajectory a = em_integrate(x0, spec, 1e-3, 100'000, 7);
        const Trajectory b = em_integrate(x0, spec, 1e-3, 100'000, 7);
        const bool same = a.samples.size() == b.samples.size() &&
                          std::memcmp(a.samples.data(), b.samples.data(), a.samples.size() * sizeof(SdeState)) == 0;
        o.check(same, "EM determinism: %zu samples bitwise identical", a.samples.size());
    }

    {
        const SystemSpec spec = pair_spec(0.0, 0.0);
        EmOptions em;
        em.noise_scale = 0.0;
        const SdeState end = em_run({0.3, 0.1, 0.2, -0.4}, spec, 1e-4, 500'000, 1, em, [](std::size_t, const SdeState&) {});
        const double r = std::hypot(end.x1, end.y1);
        o.check(std::abs(r - std::sqrt(2.5)) <= 1e-3, "deterministic SDE radius %.6f vs sqrt(2.5)=%.6f", r,
                std::sqrt(2.5));
    }
    return o.pass;
}

}  // namespace

int main(int argc, char** argv)
{
    const std::map<std::string, std::pair<const char*, std::function<bool()>>> suite{
        {"P1", {"steady-state regime labels", p1}},
        {"P2", {"Kerr-driven QOD to QAD transition", p2}},
        {"P3", {"semiclassical histograms agree with Wigner lobes", p3}},
        {"P4", {"negativity trends", p4}},
        {"P5", {"chimera contrast and Kerr isotropy", p5}},
        {"P6", {"property suite", p6}},
    };
    std::vector<std::string> ids;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "all") == 0) {
            for (const auto& [id, _] : suite)
                ids.push_back(id);
        } else if (suite.count(argv[i])) {
            ids.emplace_back(argv[i]);
        } else {
            std::fprintf(stderr, "acceptance: unknown criterion '%s' (expected P1..P6 or all)\n", argv[i]);
            return 2;
        }
    }
    if (ids.empty())
        for (const auto& [id, _] : suite)
            ids.push_back(id);

    bool all = true;
    for (const auto& id : ids) {
        const auto& [title, fn] = suite.at(id);
        bool ok = false;
        try {
            ok = fn();
        } catch (const std::exception& e) {
            std::printf("  [FAIL] exception: %s\n", e.what());
        }
        std::printf("%s %s %s\n", id.c_str(), ok ? "PASS" : "FAIL", title);
        std::fflush(stdout);
        all = all && ok;
    }
    return all ? 0 : 1;
}
