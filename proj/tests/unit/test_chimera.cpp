#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qvdp/chimera.hpp"
#include "qvdp/lindblad.hpp"

using namespace qvdp;

namespace {

RingSpec small_ring(double kerr = 0.0)
{
    RingSpec r;
    r.n = 12;
    r.range = 3;
    r.v = 1.2;
    r.kerr = kerr;
    r.cutoff = FockCutoff(12);
    return r;
}

}  // namespace

TEST_CASE("ring validation")
{
    RingSpec r;
    CHECK_NOTHROW(r.validate());
    r.n = 2;
    CHECK_THROWS_AS(r.validate(), std::invalid_argument);
    r = RingSpec{};
    r.range = 25;  // d must stay below N/2
    CHECK_THROWS_AS(r.validate(), std::invalid_argument);
    r.range = 0;
    CHECK_THROWS_AS(r.validate(), std::invalid_argument);
    r = RingSpec{};
    r.k2 = 0.0;
    CHECK_THROWS_AS(r.validate(), std::invalid_argument);
}

TEST_CASE("initial chimera state")
{
    const RingSpec r;
    const double amp = std::sqrt(2.5);
    const MeanFieldState all = init_chimera(r, r.n, amp, 1);
    for (const cplx m : all.means) {
        CHECK(std::abs(m - all.means[0]) == 0.0);
        CHECK(std::abs(m - amp) < 1e-4);
    }

    const MeanFieldState mixed = init_chimera(r, 21, amp, 1);
    for (int j = 0; j < r.n; ++j)
        CHECK(std::abs(mixed.means[j]) == doctest::Approx(std::abs(all.means[0])).epsilon(1e-6));
    CHECK(std::abs(mixed.means[21] - mixed.means[0]) > 1e-3);
    CHECK(mixed.time == 0.0);

    RingSpec big = r;
    big.n = 2000;
    big.range = 5;
    const MeanFieldState uni = init_chimera(big, 0, amp, 3);
    cplx acc = 0.0;
    for (const cplx m : uni.means)
        acc += m / std::abs(m);
    CHECK(std::abs(acc) / big.n < 0.06);

    CHECK_THROWS_AS(init_chimera(r, 51, amp, 1), std::invalid_argument);
    CHECK_THROWS_AS(init_chimera(r, 10, 4.0, 1), std::invalid_argument);
}

TEST_CASE("coupling window is periodic and excludes the site itself")
{
    RingSpec r = small_ring();
    std::vector<cplx> means(r.n, 0.0);
    means[11] = 1.0;  // neighbour of site 0 across the seam
    means[0] = 100.0;
    CHECK(std::abs(coupling_field(r, means, 0) - cplx(r.v / (2.0 * r.range))) < 1e-15);
    CHECK(std::abs(coupling_field(r, means, 5)) == 0.0);
    CHECK(std::abs(coupling_field(r, means, 9) - cplx(100.0 + 1.0) * (r.v / (2.0 * r.range))) < 1e-12);
}

TEST_CASE("decoupled ring sites follow the single-oscillator master equation")
{
    RingSpec r = small_ring(0.4);
    r.v = 0.0;
    const MeanFieldState s0 = init_chimera(r, 4, 1.3, 5);
    const MeanFieldState s1 = evolve_mean_field(s0, r, 0.25, 1e-3);

    SystemSpec single;
    single.omega = 0.0;
    single.kerr = r.kerr;
    single.k1 = 2.0 * r.k1;
    single.k2 = 2.0 * r.k2;
    single.cutoff = r.cutoff;
    const Liouvillian l = build_liouvillian(single);
    for (int j : {0, 7}) {
        const DensityMatrix ref = evolve(s0.rhos[j], l, 0.25, 1e-3);
        CHECK(trace_distance(ref, s1.rhos[j]) < 1e-8);
    }
    CHECK(s1.time == doctest::Approx(0.25));
}

TEST_CASE("uniform rings stay uniform")
{
    const RingSpec r = small_ring(0.5);
    std::vector<ComplexVector> kets(r.n, coherent_ket(cplx(1.0, 0.5), r.cutoff));
    MeanFieldState s = mean_field_state(r, kets);
    for (int k = 0; k < 50; ++k)
        s = mean_field_step(s, r, 1e-3);
    for (const cplx m : s.means)
        CHECK(std::abs(m - s.means[0]) < 1e-9);
}

TEST_CASE("self-consistency, trace and positivity over a unit-time run")
{
    const RingSpec r = small_ring(0.0);
    MeanFieldState s = init_chimera(r, 5, std::sqrt(2.5), 2);
    const ComplexOperator a = annihilation(r.cutoff);
    for (int k = 0; k < 1000; ++k) {
        s = mean_field_step(s, r, 1e-3);
        if (k % 250 == 249) {
            for (int j = 0; j < r.n; ++j) {
                CHECK(std::abs(expectation(s.rhos[j], a) - s.means[j]) < 1e-12);
                CHECK(std::abs(s.rhos[j].matrix().trace().real() - 1.0) < 1e-6);
                CHECK(s.rhos[j].min_eigenvalue() > -1e-6);
            }
        }
    }
}

TEST_CASE("rotating the initial ring rotates the outputs")
{
    const RingSpec r = small_ring(0.3);
    const MeanFieldState base = init_chimera(r, 4, std::sqrt(2.5), 8);
    std::vector<ComplexVector> kets, shifted;
    for (int j = 0; j < r.n; ++j)
        kets.push_back(coherent_ket(std::polar(std::sqrt(2.5), std::arg(base.means[j])), r.cutoff));
    const int off = 5;
    for (int j = 0; j < r.n; ++j)
        shifted.push_back(kets[(j - off + r.n) % r.n]);
    const MeanFieldState a = evolve_mean_field(mean_field_state(r, kets), r, 0.2);
    const MeanFieldState b = evolve_mean_field(mean_field_state(r, shifted), r, 0.2);
    for (int j = 0; j < r.n; ++j)
        CHECK(std::abs(a.means[j] - b.means[(j + off) % r.n]) < 1e-12);
}

TEST_CASE("frozen-mean splitting error is first order in dt")
{
    // Freezing the neighbour means over a step costs O(dt) globally; the
    // predictor-corrector refresh removes that term, so the gap between the
    // two halves with dt.
    const RingSpec r = small_ring(0.0);
    const MeanFieldState s0 = init_chimera(r, 6, std::sqrt(2.5), 4);
    MeanFieldOptions pc;
    pc.predictor_corrector = true;
    auto gap = [&](double dt) {
        const MeanFieldState a = evolve_mean_field(s0, r, 0.1, dt), b = evolve_mean_field(s0, r, 0.1, dt, pc);
        double g = 0.0;
        for (int j = 0; j < r.n; ++j)
            g = std::max(g, std::abs(a.means[j] - b.means[j]));
        return g;
    };
    const double coarse = gap(2e-3), fine = gap(1e-3);
    CHECK(fine < 1e-4);
    CHECK(coarse / fine == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("circular variance of axial angles")
{
    std::vector<SiteCoherence> p(4);
    for (auto& s : p) {
        s.angle = 0.7;
        s.anisotropy = 0.2;
    }
    CHECK(*circular_variance(p, 0, 4) == doctest::Approx(0.0).scale(1.0));
    p[1].angle = 0.7 + std::numbers::pi / 2;  // orthogonal axes cancel
    p[3].angle = 0.7 + std::numbers::pi / 2;
    CHECK(*circular_variance(p, 0, 4) == doctest::Approx(1.0));
    p[2].angle = 0.7 + std::numbers::pi;  // same axis
    CHECK(*circular_variance(p, 2, 3) == doctest::Approx(0.0).scale(1.0));
    p[0].angle.reset();
    CHECK_FALSE(circular_variance(p, 0, 1).has_value());
    CHECK_THROWS_AS(circular_variance(p, 0, 5), std::out_of_range);
    CHECK(mean_anisotropy(p) == doctest::Approx(0.2));
}

TEST_CASE("coherence profile of vacuum sites is isotropic")
{
    RingSpec r = small_ring();
    std::vector<ComplexVector> kets(r.n, ComplexVector::Unit(r.cutoff.dim(), 0));
    const auto prof = coherence_profile(mean_field_state(r, kets));
    REQUIRE(prof.size() == static_cast<std::size_t>(r.n));
    for (const auto& s : prof) {
        CHECK_FALSE(s.angle.has_value());
        CHECK(s.anisotropy < 1e-12);
    }
}
