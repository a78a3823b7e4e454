#pragma once

// Bipartite entanglement of two-mode states via the partial transpose.

#include <vector>

#include "qvdp/fock.hpp"

namespace qvdp {

struct NegativityResult {
    double value = 0.0;
    /// Eigenvalues of the partial transpose, ascending.
    std::vector<double> spectrum;
};

/// Transposes the indices of `subsystem` (0 or 1) of a two-subsystem state.
ComplexOperator partial_transpose(const DensityMatrix& rho, int subsystem = 0);

/// N = (||rho^T1||_1 - 1) / 2, from the Hermitian eigenvalues of rho^T1.
/// Throws std::invalid_argument for states that are not bipartite.
NegativityResult negativity(const DensityMatrix& rho);

}  // namespace qvdp
