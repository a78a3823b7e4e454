#include "qvdp/lindblad.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <unsupported/Eigen/IterativeSolvers>

namespace qvdp {

namespace {

const cplx I{0.0, 1.0};

std::string fmt_double(double v)
{
    std::ostringstream os;
    os << v;
    return os.str();
}

}  // namespace

std::string to_string(Topology t)
{
    switch (t) {
    case Topology::single:
        return "single";
    case Topology::conjugate_pair:
        return "conjugate_pair";
    case Topology::ring:
        return "ring";
    }
    return "unknown";
}

std::string to_string(SolvePath p)
{
    return p == SolvePath::linear_solve ? "linear_solve" : "evolution_fallback";
}

void SystemSpec::validate() const
{
    auto fail = [](const std::string& what) { throw std::invalid_argument("SystemSpec: " + what); };
    if (!std::isfinite(omega) || !std::isfinite(kerr) || !std::isfinite(k1) || !std::isfinite(k2) ||
        !std::isfinite(epsilon))
        fail("parameters must be finite");
    if (kerr < 0.0)
        fail("kerr must be >= 0, got " + fmt_double(kerr));
    if (k1 <= 0.0)
        fail("k1 must be > 0, got " + fmt_double(k1));
    if (k2 <= 0.0)
        fail("k2 must be > 0, got " + fmt_double(k2));
    if (epsilon < 0.0)
        fail("epsilon must be >= 0, got " + fmt_double(epsilon));
    if (weak_quantum_regime && !(k2 < k1))
        fail("weak quantum regime requires k2 < k1");
    if (topology == Topology::ring) {
        if (ring.n < 3)
            fail("ring needs N >= 3");
        if (ring.range < 1 || 2 * ring.range >= ring.n)
            fail("ring needs 1 <= d < N/2");
    }
}

int SystemSpec::oscillator_count() const
{
    switch (topology) {
    case Topology::single:
        return 1;
    case Topology::conjugate_pair:
        return 2;
    case Topology::ring:
        return ring.n;
    }
    return 1;
}

std::vector<int> SystemSpec::subsystem_dims() const
{
    return std::vector<int>(static_cast<std::size_t>(oscillator_count()), cutoff.dim());
}

int SystemSpec::hilbert_dim() const
{
    long d = 1;
    for (int k = 0; k < oscillator_count(); ++k) {
        d *= cutoff.dim();
        if (d > std::numeric_limits<int>::max() / cutoff.dim())
            throw std::invalid_argument("SystemSpec: Hilbert space dimension overflows");
    }
    return static_cast<int>(d);
}

// ---------------------------------------------------------------------------
// Hamiltonians

ComplexOperator hamiltonian_single(const SystemSpec& spec)
{
    if (spec.topology != Topology::single)
        throw std::invalid_argument("hamiltonian_single: topology is " + to_string(spec.topology));
    const auto n = number_op(spec.cutoff);
    return cplx(spec.omega) * n + cplx(spec.kerr) * (n * n);
}

ComplexOperator hamiltonian_conjugate_pair(const SystemSpec& spec)
{
    if (spec.topology != Topology::conjugate_pair)
        throw std::invalid_argument("hamiltonian_conjugate_pair: topology is " + to_string(spec.topology));
    const auto dims = spec.subsystem_dims();
    const auto a = annihilation(spec.cutoff);
    const auto a1 = embed(a, 0, dims);
    const auto a2 = embed(a, 1, dims);
    const auto a1d = a1.adjoint();
    const auto a2d = a2.adjoint();
    const auto n1 = a1d * a1;
    const auto n2 = a2d * a2;
    const double eps = spec.epsilon;

    return cplx(spec.omega) * (n1 + n2) + cplx(spec.kerr) * (n1 * n1 + n2 * n2) +
           cplx(eps / 2.0) * (a1d * a2 + a2d * a1) - cplx(eps / 2.0) * (a1d * a2d + a1 * a2) -
           (I * (eps / 4.0)) * (a1d * a1d + a2d * a2d - a1 * a1 - a2 * a2);
}

ComplexOperator hamiltonian_ring(const SystemSpec& spec)
{
    if (spec.topology != Topology::ring)
        throw std::invalid_argument("hamiltonian_ring: topology is " + to_string(spec.topology));
    spec.validate();
    const auto dims = spec.subsystem_dims();
    const int n_osc = spec.ring.n;
    const int d = spec.ring.range;
    const auto a = annihilation(spec.cutoff);
    const auto nop = number_op(spec.cutoff);

    std::vector<ComplexOperator> as;
    as.reserve(n_osc);
    for (int j = 0; j < n_osc; ++j)
        as.push_back(embed(a, j, dims));

    ComplexOperator h = ComplexOperator::zero(spec.hilbert_dim());
    for (int j = 0; j < n_osc; ++j)
        h = h + cplx(spec.kerr) * embed(nop * nop, j, dims);
    const cplx g(spec.ring.v / (2.0 * d));
    for (int j = 0; j < n_osc; ++j) {
        const auto ajd = as[j].adjoint();
        for (int off = -d; off <= d; ++off) {
            if (off == 0)
                continue;
            const int m = ((j + off) % n_osc + n_osc) % n_osc;
            h = h + g * (ajd * as[m] + as[j] * as[m].adjoint());
        }
    }
    return h;
}

ComplexOperator hamiltonian(const SystemSpec& spec)
{
    switch (spec.topology) {
    case Topology::single:
        return hamiltonian_single(spec);
    case Topology::conjugate_pair:
        return hamiltonian_conjugate_pair(spec);
    case Topology::ring:
        return hamiltonian_ring(spec);
    }
    throw std::invalid_argument("hamiltonian: unknown topology");
}

std::vector<Dissipator> dissipators(const SystemSpec& spec)
{
    const auto dims = spec.subsystem_dims();
    const auto a = annihilation(spec.cutoff);
    const auto ad = a.adjoint();
    const auto a2 = a * a;
    const double scale = spec.topology == Topology::ring ? 2.0 : 1.0;

    std::vector<Dissipator> out;
    for (int j = 0; j < spec.oscillator_count(); ++j) {
        out.push_back({embed(ad, j, dims), scale * spec.k1});
        out.push_back({embed(a2, j, dims), scale * spec.k2});
        if (spec.topology == Topology::conjugate_pair && spec.epsilon > 0.0)
            out.push_back({embed(a, j, dims), spec.epsilon});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Right-hand sides

DenseMatrix dissipator_apply(const ComplexOperator& l, const DenseMatrix& rho)
{
    if (l.dim() != rho.rows())
        throw std::invalid_argument("dissipator_apply: dimension mismatch");
    const DenseMatrix lm = l.dense();
    const DenseMatrix ldl = lm.adjoint() * lm;
    return lm * rho * lm.adjoint() - 0.5 * (ldl * rho + rho * ldl);
}

DenseMatrix dissipator_apply(const ComplexOperator& l, const DensityMatrix& rho)
{
    return dissipator_apply(l, rho.matrix());
}

DenseMatrix master_rhs(const ComplexOperator& h, const std::vector<Dissipator>& ds, const DenseMatrix& rho)
{
    const DenseMatrix hm = h.dense();
    DenseMatrix out = -I * (hm * rho - rho * hm);
    for (const auto& d : ds)
        out += d.rate * dissipator_apply(d.op, rho);
    return out;
}

SparseMatrix liouvillian_superop(const ComplexOperator& h, const std::vector<Dissipator>& ds)
{
    const int d = h.dim();
    SparseMatrix id(d, d);
    id.setIdentity();
    const SparseMatrix hs = h.sparse();

    SparseMatrix l = (-I) * (kron(id, hs) - kron(SparseMatrix(hs.transpose()), id));
    for (const auto& diss : ds) {
        if (diss.op.dim() != d)
            throw std::invalid_argument("liouvillian_superop: dissipator dimension mismatch");
        const SparseMatrix c = diss.op.sparse();
        const SparseMatrix cdc = SparseMatrix(c.adjoint()) * c;
        SparseMatrix term = kron(SparseMatrix(c.conjugate()), c) - 0.5 * kron(id, cdc) -
                            0.5 * kron(SparseMatrix(cdc.transpose()), id);
        l += diss.rate * term;
    }
    l.prune(cplx(0.0), 0.0);
    l.makeCompressed();
    return l;
}

std::size_t estimate_superop_bytes(const ComplexOperator& h, const std::vector<Dissipator>& ds)
{
    const auto d = static_cast<std::size_t>(h.dim());
    auto nnz = [](const ComplexOperator& o) { return static_cast<std::size_t>(o.sparse().nonZeros()); };
    std::size_t bound = 2 * d * nnz(h);
    for (const auto& diss : ds) {
        const std::size_t c = nnz(diss.op);
        const std::size_t cdc = nnz(diss.op.adjoint() * diss.op);
        bound += c * c + 2 * d * cdc;
    }
    // value + inner index per nonzero, outer index per column; assembly needs a triplet copy
    const std::size_t per_nnz = sizeof(cplx) + sizeof(int) + sizeof(Eigen::Triplet<cplx>);
    return bound * per_nnz + (d * d + 1) * sizeof(int);
}

Liouvillian build_liouvillian(const SystemSpec& spec, const BuildOptions& opts)
{
    spec.validate();
    const auto h = hamiltonian(spec);
    const auto ds = dissipators(spec);
    const std::size_t bytes = estimate_superop_bytes(h, ds);
    if (bytes > opts.memory_budget_bytes)
        throw std::length_error("build_liouvillian: estimated superoperator size " + std::to_string(bytes) +
                                " bytes exceeds memory budget of " + std::to_string(opts.memory_budget_bytes) +
                                " bytes (Hilbert dim " + std::to_string(h.dim()) + ")");
    return Liouvillian{liouvillian_superop(h, ds), spec, spec.subsystem_dims()};
}

DenseMatrix Liouvillian::apply(const DenseMatrix& rho) const
{
    const int d = hilbert_dim();
    return unvectorize(superop * vectorize(rho), d);
}

ComplexVector vectorize(const DenseMatrix& rho)
{
    return Eigen::Map<const ComplexVector>(rho.data(), rho.size());
}

DenseMatrix unvectorize(const ComplexVector& v, int dim)
{
    if (v.size() != static_cast<Eigen::Index>(dim) * dim)
        throw std::invalid_argument("unvectorize: size mismatch");
    return Eigen::Map<const DenseMatrix>(v.data(), dim, dim);
}

// ---------------------------------------------------------------------------
// Time evolution

EvolveResult evolve_with_report(const DensityMatrix& rho0, const Liouvillian& l, double t_final, double dt,
                                const EvolveOptions& opts)
{
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw std::invalid_argument("evolve: dt must be > 0");
    if (!(t_final >= 0.0) || !std::isfinite(t_final))
        throw std::invalid_argument("evolve: t_final must be >= 0");
    const int d = rho0.dim();
    if (static_cast<Eigen::Index>(d) * d != l.superop.rows())
        throw std::invalid_argument("evolve: state and Liouvillian dimensions differ");

    const auto n_full = static_cast<std::size_t>(std::floor(t_final / dt + 1e-9));
    const double remainder = t_final - static_cast<double>(n_full) * dt;
    const std::size_t n_steps = n_full + (remainder > 1e-12 * dt ? 1 : 0);

    ComplexVector v = vectorize(rho0.matrix());
    ComplexVector k1(v.size()), k2(v.size()), k3(v.size()), k4(v.size());
    double max_drift = 0.0;
    const int every = std::max(1, opts.renormalize_every);

    auto renormalize = [&](std::size_t step) {
        DenseMatrix m = unvectorize(v, d);
        if (!m.allFinite())
            throw std::runtime_error("evolve: non-finite state at step " + std::to_string(step) +
                                     "; step size dt=" + fmt_double(dt) + " is too large");
        const cplx tr = m.trace();
        max_drift = std::max(max_drift, std::abs(tr - 1.0));
        m = 0.5 * (m + m.adjoint()).eval();
        m /= m.trace().real();
        v = vectorize(m);
    };

    for (std::size_t step = 0; step < n_steps; ++step) {
        const double h = (step < n_full) ? dt : remainder;
        k1.noalias() = l.superop * v;
        k2.noalias() = l.superop * (v + 0.5 * h * k1);
        k3.noalias() = l.superop * (v + 0.5 * h * k2);
        k4.noalias() = l.superop * (v + h * k3);
        v += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if ((step + 1) % every == 0 || step + 1 == n_steps)
            renormalize(step + 1);
    }

    DenseMatrix m = unvectorize(v, d);
    return EvolveResult{DensityMatrix::normalized(std::move(m), rho0.subsystem_dims()), n_steps, max_drift};
}

DensityMatrix evolve(const DensityMatrix& rho0, const Liouvillian& l, double t_final, double dt)
{
    return evolve_with_report(rho0, l, t_final, dt).rho;
}

// ---------------------------------------------------------------------------
// Steady state

namespace {

// Vectorized indices reachable from the diagonal of rho through the
// (symmetrized) sparsity graph of L. Entries outside this block decouple
// from the trace and vanish in a unique steady state.
std::vector<int> coupled_block(const SparseMatrix& l, int d)
{
    const int n = static_cast<int>(l.rows());
    const SparseMatrix lt = l.transpose();
    std::vector<char> seen(n, 0);
    std::deque<int> queue;
    for (int k = 0; k < d; ++k) {
        seen[k * (d + 1)] = 1;
        queue.push_back(k * (d + 1));
    }
    while (!queue.empty()) {
        const int c = queue.front();
        queue.pop_front();
        for (const SparseMatrix* m : {&l, &lt})
            for (SparseMatrix::InnerIterator it(*m, c); it; ++it) {
                const int r = static_cast<int>(it.row());
                if (!seen[r]) {
                    seen[r] = 1;
                    queue.push_back(r);
                }
            }
    }
    std::vector<int> idx;
    for (int i = 0; i < n; ++i)
        if (seen[i])
            idx.push_back(i);
    return idx;
}

}  // namespace

namespace {

struct LinearAttempt {
    std::optional<ComplexVector> x;
    std::string note;
};

LinearAttempt solve_sparse_lu(const SparseMatrix& a, const ComplexVector& rhs)
{
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    lu.analyzePattern(a);
    lu.factorize(a);
    if (lu.info() != Eigen::Success)
        return {std::nullopt, "sparse LU factorization failed: " + lu.lastErrorMessage()};
    ComplexVector x = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !x.allFinite())
        return {std::nullopt, "sparse LU solve failed"};
    return {std::move(x), {}};
}

LinearAttempt solve_gmres(const SparseMatrix& a, const ComplexVector& rhs, const SteadyStateOptions& opts)
{
    Eigen::GMRES<SparseMatrix, Eigen::IncompleteLUT<cplx>> gmres;
    gmres.preconditioner().setDroptol(opts.ilut_droptol);
    gmres.preconditioner().setFillfactor(opts.ilut_fill);
    gmres.set_restart(opts.gmres_restart);
    gmres.setTolerance(opts.gmres_tol);
    gmres.setMaxIterations(opts.gmres_max_iterations);
    gmres.compute(a);
    if (gmres.info() != Eigen::Success)
        return {std::nullopt, "ILUT preconditioner failed"};
    ComplexVector x = gmres.solve(rhs);
    if (!x.allFinite())
        return {std::nullopt, "GMRES produced non-finite values"};
    if (gmres.info() != Eigen::Success)
        return {std::nullopt, "GMRES did not converge after " + std::to_string(gmres.iterations()) +
                                  " iterations (error " + fmt_double(gmres.error()) + ")"};
    return {std::move(x), {}};
}

}  // namespace

SteadyStateResult steady_state(const Liouvillian& l, const SteadyStateOptions& opts)
{
    const int d = l.hilbert_dim();
    const int n = static_cast<int>(l.superop.rows());

    std::vector<int> block;
    if (opts.reduce_to_coupled_block) {
        block = coupled_block(l.superop, d);
    } else {
        block.resize(n);
        for (int i = 0; i < n; ++i)
            block[i] = i;
    }
    std::vector<int> local(n, -1);
    for (int i = 0; i < static_cast<int>(block.size()); ++i)
        local[block[i]] = i;
    const int m = static_cast<int>(block.size());
    const int constraint_row = local[0];

    std::vector<Eigen::Triplet<cplx>> t;
    t.reserve(static_cast<std::size_t>(l.superop.nonZeros()));
    for (int j = 0; j < m; ++j)
        for (SparseMatrix::InnerIterator it(l.superop, block[j]); it; ++it) {
            const int r = local[it.row()];
            if (r >= 0 && r != constraint_row)
                t.emplace_back(r, j, it.value());
        }
    for (int k = 0; k < d; ++k)
        t.emplace_back(constraint_row, local[k * (d + 1)], cplx(1.0));
    SparseMatrix a(m, m);
    a.setFromTriplets(t.begin(), t.end());
    a.makeCompressed();

    ComplexVector rhs = ComplexVector::Zero(m);
    rhs(constraint_row) = 1.0;

    std::vector<std::string> plan;
    switch (opts.solver) {
    case SteadySolver::sparse_lu:
        plan = {"sparse_lu"};
        break;
    case SteadySolver::gmres:
        plan = {"gmres_ilut"};
        break;
    case SteadySolver::automatic:
        if (m <= opts.direct_solve_max_dim)
            plan = {"sparse_lu", "gmres_ilut"};
        else
            plan = {"gmres_ilut", "sparse_lu"};
        break;
    }

    std::string notes;
    for (const auto& method : plan) {
        LinearAttempt attempt = method == "sparse_lu" ? solve_sparse_lu(a, rhs) : solve_gmres(a, rhs, opts);
        if (!attempt.x) {
            notes += method + ": " + attempt.note + "; ";
            continue;
        }
        ComplexVector full = ComplexVector::Zero(n);
        for (int j = 0; j < m; ++j)
            full(block[j]) = (*attempt.x)(j);
        DenseMatrix rho = unvectorize(full, d);
        rho = 0.5 * (rho + rho.adjoint()).eval();
        rho /= rho.trace().real();
        const double residual = (l.superop * vectorize(rho)).cwiseAbs().maxCoeff();
        if (residual < opts.residual_tol) {
            auto dm = DensityMatrix::normalized(std::move(rho), l.subsystem_dims);
            const double min_eig = dm.min_eigenvalue();
            return SteadyStateResult{std::move(dm), SolvePath::linear_solve, method, residual,
                                     static_cast<std::size_t>(m), min_eig, notes};
        }
        notes += method + ": residual " + fmt_double(residual) + " above tolerance; ";
    }

    DenseMatrix mixed = DenseMatrix::Identity(d, d) / static_cast<double>(d);
    DensityMatrix start(std::move(mixed), l.subsystem_dims);
    DensityMatrix rho = evolve(start, l, opts.fallback_time, opts.fallback_dt);
    const double residual = (l.superop * vectorize(rho.matrix())).cwiseAbs().maxCoeff();
    const double min_eig = rho.min_eigenvalue();
    return SteadyStateResult{std::move(rho), SolvePath::evolution_fallback, "rk4_evolution", residual,
                             static_cast<std::size_t>(n), min_eig, notes};
}

cplx expectation(const DensityMatrix& rho, const ComplexOperator& o)
{
    if (rho.dim() != o.dim())
        throw std::invalid_argument("expectation: dimension mismatch");
    if (o.storage() == Storage::sparse) {
        // Tr(rho O) = sum_{ij} rho_ji O_ij
        const SparseMatrix s = o.sparse();
        cplx acc = 0.0;
        for (int k = 0; k < s.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(s, k); it; ++it)
                acc += rho.matrix()(it.col(), it.row()) * it.value();
        return acc;
    }
    return (rho.matrix() * o.dense()).trace();
}

}  // namespace qvdp
