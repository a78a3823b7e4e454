#include <doctest.h>

#include <cmath>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "qvdp/lindblad.hpp"

using namespace qvdp;

namespace {

DensityMatrix random_state(int n, std::mt19937_64& rng, std::vector<int> dims)
{
    std::normal_distribution<double> g;
    DenseMatrix m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            m(i, j) = cplx(g(rng), g(rng));
    return DensityMatrix::normalized(m * m.adjoint(), std::move(dims));
}

SystemSpec pair_spec(int n_max, double eps, double kerr)
{
    SystemSpec s;
    s.topology = Topology::conjugate_pair;
    s.cutoff = FockCutoff(n_max);
    s.epsilon = eps;
    s.kerr = kerr;
    return s;
}

double max_abs(const DenseMatrix& m) { return m.cwiseAbs().maxCoeff(); }

/// H_c built element by element from its action on |i, j>.
DenseMatrix coupled_hamiltonian_oracle(const SystemSpec& s)
{
    const int d = s.cutoff.dim(), n = s.cutoff.n_max();
    const double w = s.omega, K = s.kerr, e = s.epsilon;
    const cplx I(0.0, 1.0);
    DenseMatrix h = DenseMatrix::Zero(d * d, d * d);
    auto idx = [d](int i, int j) { return i * d + j; };
    auto in = [n](int k) { return k >= 0 && k <= n; };
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) {
            const int col = idx(i, j);
            h(col, col) += w * (i + j) + K * (i * i + j * j);
            // e/2 (a1^+ a2 + a2^+ a1)
            if (in(i + 1) && in(j - 1))
                h(idx(i + 1, j - 1), col) += 0.5 * e * std::sqrt((i + 1.0) * j);
            if (in(i - 1) && in(j + 1))
                h(idx(i - 1, j + 1), col) += 0.5 * e * std::sqrt(i * (j + 1.0));
            // -e/2 (a1^+ a2^+ + a1 a2)
            if (in(i + 1) && in(j + 1))
                h(idx(i + 1, j + 1), col) += -0.5 * e * std::sqrt((i + 1.0) * (j + 1.0));
            if (in(i - 1) && in(j - 1))
                h(idx(i - 1, j - 1), col) += -0.5 * e * std::sqrt(double(i) * j);
            // -i e/4 (a1^+2 + a2^+2 - a1^2 - a2^2)
            if (in(i + 2))
                h(idx(i + 2, j), col) += -I * 0.25 * e * std::sqrt((i + 1.0) * (i + 2.0));
            if (in(j + 2))
                h(idx(i, j + 2), col) += -I * 0.25 * e * std::sqrt((j + 1.0) * (j + 2.0));
            if (in(i - 2))
                h(idx(i - 2, j), col) += I * 0.25 * e * std::sqrt(double(i) * (i - 1.0));
            if (in(j - 2))
                h(idx(i, j - 2), col) += I * 0.25 * e * std::sqrt(double(j) * (j - 1.0));
        }
    return h;
}

DenseMatrix swap_matrix(int d)
{
    DenseMatrix s = DenseMatrix::Zero(d * d, d * d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            s(j * d + i, i * d + j) = 1.0;
    return s;
}

/// Dense textbook evaluation of -i[H, rho] + sum g (L rho L^+ - 1/2 {L^+ L, rho}).
DenseMatrix rhs_oracle(const DenseMatrix& h, const std::vector<std::pair<DenseMatrix, double>>& ds, const DenseMatrix& rho)
{
    const cplx I(0.0, 1.0);
    DenseMatrix out = -I * (h * rho - rho * h);
    for (const auto& [l, g] : ds) {
        const DenseMatrix ll = l.adjoint() * l;
        out += g * (l * rho * l.adjoint() - 0.5 * (ll * rho + rho * ll));
    }
    return out;
}

/// Populations of the single vdP steady state from its closed birth-death
/// rate equations (the steady state is diagonal in the Fock basis).
Eigen::VectorXd vdp_populations(int n_max, double k1, double k2)
{
    const int d = n_max + 1;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d, d);
    for (int n = 0; n < d; ++n) {
        const double up = n < n_max ? n + 1.0 : 0.0;  // truncated a a^+
        m(n, n) -= k1 * up;
        if (n + 1 <= n_max)
            m(n + 1, n) += k1 * (n + 1.0);
        m(n, n) -= k2 * n * (n - 1.0);
        if (n >= 2)
            m(n - 2, n) += k2 * n * (n - 1.0);
    }
    m.row(0).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
    b(0) = 1.0;
    return m.fullPivLu().solve(b);
}

}  // namespace

TEST_CASE("spec validation")
{
    SystemSpec s;
    CHECK_NOTHROW(s.validate());
    s.k1 = 0.0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = SystemSpec{};
    s.kerr = -0.1;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = SystemSpec{};
    s.weak_quantum_regime = true;
    s.k2 = 2.0;
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s = SystemSpec{};
    s.topology = Topology::ring;
    s.ring = {4, 2, 1.0};
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);
    s.ring = {5, 2, 1.0};
    CHECK_NOTHROW(s.validate());
    CHECK(s.oscillator_count() == 5);
}

TEST_CASE("Hamiltonians refuse the wrong topology")
{
    SystemSpec s;
    CHECK_THROWS_AS(hamiltonian_conjugate_pair(s), std::invalid_argument);
    CHECK_THROWS_AS(hamiltonian_ring(s), std::invalid_argument);
    s.topology = Topology::conjugate_pair;
    CHECK_THROWS_AS(hamiltonian_single(s), std::invalid_argument);
}

TEST_CASE("coupled Hamiltonian matches an element-wise oracle")
{
    const SystemSpec s = pair_spec(4, 1.3, 0.35);
    const DenseMatrix h = hamiltonian(s).dense();
    CHECK(max_abs(h - coupled_hamiltonian_oracle(s)) < 1e-13);
    CHECK(hamiltonian(s).is_hermitian(1e-13));
}

TEST_CASE("exchange symmetry of the coupled system")
{
    const SystemSpec s = pair_spec(4, 1.99, 0.4);
    const DenseMatrix sw = swap_matrix(s.cutoff.dim());
    const DenseMatrix h = hamiltonian(s).dense();
    CHECK(max_abs(sw * h * sw - h) < 1e-13);

    const Liouvillian l = build_liouvillian(s);
    std::mt19937_64 rng(2);
    const DensityMatrix rho = random_state(25, rng, {5, 5});
    const DenseMatrix lhs = l.apply(sw * rho.matrix() * sw);
    const DenseMatrix rhs = sw * l.apply(rho.matrix()) * sw;
    CHECK(max_abs(lhs - rhs) < 1e-12);
}

TEST_CASE("dissipator content")
{
    SystemSpec s = pair_spec(3, 0.0, 0.0);
    CHECK(dissipators(s).size() == 4);
    s.epsilon = 0.5;
    const auto ds = dissipators(s);
    REQUIRE(ds.size() == 6);
    double loss = 0.0;
    for (const auto& d : ds)
        if (d.op.max_abs_diff(embed(annihilation(s.cutoff), 0, s.subsystem_dims())) == 0.0)
            loss = d.rate;
    CHECK(loss == doctest::Approx(0.5));

    SystemSpec r;
    r.topology = Topology::ring;
    r.ring = {3, 1, 1.0};
    r.cutoff = FockCutoff(1);
    for (const auto& d : dissipators(r))
        CHECK((d.rate == doctest::Approx(2.0 * r.k1) || d.rate == doctest::Approx(2.0 * r.k2)));
}

TEST_CASE("superoperator, direct RHS and textbook oracle agree")
{
    std::mt19937_64 rng(7);
    for (const SystemSpec& s : {pair_spec(4, 1.99, 0.3), pair_spec(3, 0.0, 0.0)}) {
        const ComplexOperator h = hamiltonian(s);
        const auto ds = dissipators(s);
        std::vector<std::pair<DenseMatrix, double>> dense_ds;
        for (const auto& d : ds)
            dense_ds.emplace_back(d.op.dense(), d.rate);
        const Liouvillian l = build_liouvillian(s);
        for (int trial = 0; trial < 3; ++trial) {
            const int dim = s.hilbert_dim();
            const DensityMatrix rho = random_state(dim, rng, s.subsystem_dims());
            const DenseMatrix direct = master_rhs(h, ds, rho.matrix());
            CHECK(max_abs(l.apply(rho.matrix()) - direct) < 1e-10);
            CHECK(max_abs(direct - rhs_oracle(h.dense(), dense_ds, rho.matrix())) < 1e-10);
            CHECK(std::abs(direct.trace()) < 1e-10);
        }
    }
}

TEST_CASE("vectorization round trip is column stacking")
{
    DenseMatrix m(2, 2);
    m << 1.0, 2.0, 3.0, 4.0;
    const ComplexVector v = vectorize(m);
    CHECK(v(1).real() == 3.0);
    CHECK(v(2).real() == 2.0);
    CHECK(unvectorize(v, 2) == m);
}

TEST_CASE("ring Hamiltonian is Hermitian and translation invariant")
{
    SystemSpec s;
    s.topology = Topology::ring;
    s.ring = {4, 1, 0.8};
    s.kerr = 0.3;
    s.cutoff = FockCutoff(1);
    const DenseMatrix h = hamiltonian(s).dense();
    CHECK(hamiltonian(s).is_hermitian(1e-14));
    // cyclic shift of the four sites: |s0 s1 s2 s3> -> |s3 s0 s1 s2>
    const int dim = 16;
    DenseMatrix p = DenseMatrix::Zero(dim, dim);
    for (int k = 0; k < dim; ++k) {
        const int b[4] = {(k >> 3) & 1, (k >> 2) & 1, (k >> 1) & 1, k & 1};
        const int shifted = (b[3] << 3) | (b[0] << 2) | (b[1] << 1) | b[2];
        p(shifted, k) = 1.0;
    }
    CHECK(max_abs(p * h * p.adjoint() - h) < 1e-14);
    // no omega term: the vacuum has zero energy
    CHECK(std::abs(h(0, 0)) < 1e-15);
}

TEST_CASE("memory budget guard")
{
    BuildOptions tiny;
    tiny.memory_budget_bytes = 1024;
    CHECK_THROWS_AS(build_liouvillian(pair_spec(6, 1.0, 0.0), tiny), std::length_error);
}

TEST_CASE("RK4 evolution matches the matrix exponential")
{
    SystemSpec s;
    s.cutoff = FockCutoff(4);
    s.kerr = 0.6;
    const Liouvillian l = build_liouvillian(s);
    ComplexVector psi = ComplexVector::Zero(5);
    psi(1) = 1.0 / std::sqrt(2.0);
    psi(2) = cplx(0.0, 1.0 / std::sqrt(2.0));
    const DensityMatrix rho0 = DensityMatrix::pure(psi, {5});
    const double t = 0.7;
    const DenseMatrix lt = DenseMatrix(l.superop) * cplx(t);
    const ComplexVector exact = lt.exp() * vectorize(rho0.matrix());
    const EvolveResult r = evolve_with_report(rho0, l, t, 1e-3);
    CHECK(max_abs(r.rho.matrix() - unvectorize(exact, 5)) < 1e-10);
    CHECK(r.steps == 700);
    CHECK(r.max_trace_drift < 1e-12);

    // a final partial step still lands on t exactly
    const DensityMatrix r2 = evolve(rho0, l, t, 0.03);
    CHECK(max_abs(r2.matrix() - unvectorize(exact, 5)) < 1e-4);
}

TEST_CASE("evolution aborts on blow-up")
{
    SystemSpec s;
    s.cutoff = FockCutoff(10);
    const Liouvillian l = build_liouvillian(s);
    ComplexVector vac = ComplexVector::Zero(11);
    vac(0) = 1.0;
    CHECK_THROWS_AS(evolve(DensityMatrix::pure(vac, {11}), l, 1e4, 5.0), std::runtime_error);
}

TEST_CASE("single vdP steady state follows the birth-death populations")
{
    for (double kerr : {0.0, 0.7}) {
        SystemSpec s;
        s.cutoff = FockCutoff(30);
        s.kerr = kerr;
        const SteadyStateResult ss = steady_state(build_liouvillian(s));
        const Eigen::VectorXd p = vdp_populations(30, s.k1, s.k2);
        for (int n = 0; n <= 30; ++n)
            CHECK(std::abs(ss.rho.matrix()(n, n).real() - p(n)) < 1e-9);
        const double mean_n = expectation(ss.rho, number_op(s.cutoff)).real();
        CHECK(mean_n == doctest::Approx(3.0382284055389817).epsilon(1e-9));
        CHECK(ss.residual < 1e-8);
        CHECK(ss.path == SolvePath::linear_solve);
        CHECK(ss.min_eigenvalue > -1e-10);
    }
}

TEST_CASE("steady state: solvers agree and uncoupled pair factorizes")
{
    SteadyStateOptions lu, gm;
    lu.solver = SteadySolver::sparse_lu;
    gm.solver = SteadySolver::gmres;
    const Liouvillian l = build_liouvillian(pair_spec(8, 1.99, 0.2));
    const SteadyStateResult a = steady_state(l, lu), b = steady_state(l, gm);
    CHECK(a.method == "sparse_lu");
    CHECK(b.method == "gmres_ilut");
    CHECK(trace_distance(a.rho, b.rho) < 1e-8);

    const SteadyStateResult u = steady_state(build_liouvillian(pair_spec(10, 0.0, 0.3)));
    const DensityMatrix r1 = partial_trace(u.rho, 0), r2 = partial_trace(u.rho, 1);
    const DensityMatrix prod(tensor({r1.op(), r2.op()}).dense(), {11, 11});
    CHECK(trace_distance(u.rho, prod) < 1e-6);
}

TEST_CASE("steady state falls back to evolution when the linear solve is refused")
{
    SystemSpec s;
    s.cutoff = FockCutoff(6);
    SteadyStateOptions o;
    o.residual_tol = 0.0;  // no linear solve can satisfy this
    o.fallback_time = 60.0;
    o.fallback_dt = 1e-2;
    const SteadyStateResult r = steady_state(build_liouvillian(s), o);
    CHECK(r.path == SolvePath::evolution_fallback);
    CHECK(r.method == "rk4_evolution");
    const Eigen::VectorXd p = vdp_populations(6, s.k1, s.k2);
    for (int n = 0; n <= 6; ++n)
        CHECK(std::abs(r.rho.matrix()(n, n).real() - p(n)) < 1e-6);
}
