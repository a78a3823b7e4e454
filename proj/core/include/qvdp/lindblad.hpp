#pragma once

// Master-equation machinery: Hamiltonians, dissipators, Liouvillian
// superoperators, time evolution and steady states.
//
// Vectorization is column-stacking: vec(A rho B) = (B^T kron A) vec(rho),
// which matches Eigen's default column-major storage.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "qvdp/fock.hpp"

namespace qvdp {

enum class Topology { single, conjugate_pair, ring };

std::string to_string(Topology t);

struct RingTopology {
    int n = 3;        // oscillator count
    int range = 1;    // coupling range d
    double v = 0.0;   // coupling strength V
};

/// Physical parameters plus the per-oscillator Fock cutoff.
///
/// single:          H = omega n + K n^2, k1 D[a^+] + k2 D[a^2]
/// conjugate_pair:  two oscillators, conjugate coupling of strength epsilon,
///                  plus epsilon D[a_j] loss on each oscillator
/// ring:            N oscillators, H = sum K n_j^2 + (V/2d) sum (a_j^+ a_m + a_j a_m^+),
///                  dissipators carry an overall factor 2. omega and epsilon are unused.
struct SystemSpec {
    double omega = 2.0;
    double kerr = 0.0;
    double k1 = 1.0;
    double k2 = 0.2;
    double epsilon = 0.0;
    FockCutoff cutoff{15};
    Topology topology = Topology::single;
    RingTopology ring{};
    /// When set, validate() additionally requires k2 < k1.
    bool weak_quantum_regime = false;

    void validate() const;
    int oscillator_count() const;
    std::vector<int> subsystem_dims() const;
    int hilbert_dim() const;
};

/// A collapse operator together with its rate: rate * D[op].
struct Dissipator {
    ComplexOperator op;
    double rate = 1.0;
};

struct Liouvillian {
    SparseMatrix superop;
    SystemSpec source_spec;
    std::vector<int> subsystem_dims;

    int hilbert_dim() const { return static_cast<int>(std::lround(std::sqrt(double(superop.rows())))); }
    /// rho_dot for a matrix rho.
    DenseMatrix apply(const DenseMatrix& rho) const;
};

struct BuildOptions {
    /// Refuse superoperators whose estimated storage exceeds this many bytes.
    std::size_t memory_budget_bytes = std::size_t{4} << 30;
};

ComplexOperator hamiltonian_single(const SystemSpec& spec);
ComplexOperator hamiltonian_conjugate_pair(const SystemSpec& spec);
ComplexOperator hamiltonian_ring(const SystemSpec& spec);
ComplexOperator hamiltonian(const SystemSpec& spec);

std::vector<Dissipator> dissipators(const SystemSpec& spec);

/// L rho L^+ - 1/2 {L^+ L, rho}
DenseMatrix dissipator_apply(const ComplexOperator& l, const DensityMatrix& rho);
DenseMatrix dissipator_apply(const ComplexOperator& l, const DenseMatrix& rho);

/// Direct (non-superoperator) evaluation of the master-equation right-hand side.
DenseMatrix master_rhs(const ComplexOperator& h, const std::vector<Dissipator>& ds, const DenseMatrix& rho);

/// Superoperator of -i[H, .] + sum rate D[op].
SparseMatrix liouvillian_superop(const ComplexOperator& h, const std::vector<Dissipator>& ds);

/// Upper bound on superoperator storage in bytes, from operator sparsity.
std::size_t estimate_superop_bytes(const ComplexOperator& h, const std::vector<Dissipator>& ds);

Liouvillian build_liouvillian(const SystemSpec& spec, const BuildOptions& opts = {});

ComplexVector vectorize(const DenseMatrix& rho);
DenseMatrix unvectorize(const ComplexVector& v, int dim);

struct EvolveOptions {
    /// Re-Hermitize and renormalize every this many steps.
    int renormalize_every = 100;
};

struct EvolveResult {
    DensityMatrix rho;
    std::size_t steps = 0;
    /// Largest |Tr rho - 1| seen before any renormalization.
    double max_trace_drift = 0.0;
};

/// Fixed-step RK4 integration of vec(rho)' = L vec(rho) up to t_final.
/// The last step is shortened so that exactly t_final is reached.
EvolveResult evolve_with_report(const DensityMatrix& rho0, const Liouvillian& l, double t_final, double dt,
                                const EvolveOptions& opts = {});
DensityMatrix evolve(const DensityMatrix& rho0, const Liouvillian& l, double t_final, double dt = 1e-3);

enum class SolvePath { linear_solve, evolution_fallback };

std::string to_string(SolvePath p);

/// Linear solver for the row-replaced steady-state system.
/// automatic: sparse LU below `direct_solve_max_dim`, otherwise GMRES with an
/// incomplete-LU preconditioner, then sparse LU if GMRES does not converge.
enum class SteadySolver { automatic, sparse_lu, gmres };

struct SteadyStateOptions {
    SteadySolver solver = SteadySolver::automatic;
    int direct_solve_max_dim = 3000;
    double ilut_droptol = 1e-2;
    int ilut_fill = 4;
    int gmres_restart = 200;
    int gmres_max_iterations = 3000;
    double gmres_tol = 1e-12;
    double residual_tol = 1e-8;
    /// Fallback evolution horizon and step (in units of 1/k1).
    double fallback_time = 400.0;
    double fallback_dt = 1e-3;
    /// Restrict the solve to the block coupled to the diagonal of rho.
    bool reduce_to_coupled_block = true;
};

struct SteadyStateResult {
    DensityMatrix rho;
    SolvePath path = SolvePath::linear_solve;
    /// "sparse_lu", "gmres_ilut" or "rk4_evolution".
    std::string method;
    double residual = 0.0;
    std::size_t solved_dim = 0;
    double min_eigenvalue = 0.0;
    std::string note;
};

/// Solves L vec(rho) = 0 with Tr rho = 1 by replacing the rho_00 row of L
/// with the trace constraint. Falls back to long-time evolution if every
/// linear solve fails or leaves a residual above tolerance.
SteadyStateResult steady_state(const Liouvillian& l, const SteadyStateOptions& opts = {});

cplx expectation(const DensityMatrix& rho, const ComplexOperator& o);

}  // namespace qvdp
