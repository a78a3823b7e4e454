#include "qvdp/entanglement.hpp"

#include <cmath>
#include <string>

namespace qvdp {

namespace {

void require_bipartite(const DensityMatrix& rho, const char* who)
{
    if (rho.subsystem_dims().size() != 2)
        throw std::invalid_argument(std::string(who) + ": need exactly two subsystems, got " +
                                    std::to_string(rho.subsystem_dims().size()));
}

DenseMatrix transpose_block(const DenseMatrix& m, int da, int db, int subsystem)
{
    DenseMatrix out(m.rows(), m.cols());
    for (int i1 = 0; i1 < da; ++i1)
        for (int i2 = 0; i2 < db; ++i2)
            for (int j1 = 0; j1 < da; ++j1)
                for (int j2 = 0; j2 < db; ++j2) {
                    const cplx v = m(i1 * db + i2, j1 * db + j2);
                    if (subsystem == 0)
                        out(j1 * db + i2, i1 * db + j2) = v;
                    else
                        out(i1 * db + j2, j1 * db + i2) = v;
                }
    return out;
}

}  // namespace

ComplexOperator partial_transpose(const DensityMatrix& rho, int subsystem)
{
    require_bipartite(rho, "partial_transpose");
    if (subsystem != 0 && subsystem != 1)
        throw std::out_of_range("partial_transpose: subsystem must be 0 or 1, got " + std::to_string(subsystem));
    const auto& dims = rho.subsystem_dims();
    return ComplexOperator(transpose_block(rho.matrix(), dims[0], dims[1], subsystem));
}

NegativityResult negativity(const DensityMatrix& rho)
{
    require_bipartite(rho, "negativity");
    const auto& dims = rho.subsystem_dims();
    DenseMatrix pt = transpose_block(rho.matrix(), dims[0], dims[1], 0);
    // DensityMatrix already guarantees Hermiticity to 1e-10; symmetrize the
    // round-off away so the self-adjoint solver sees an exactly Hermitian input.
    pt = (0.5 * (pt + pt.adjoint())).eval();
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(pt, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("negativity: eigen-decomposition failed");

    NegativityResult res;
    const auto& ev = es.eigenvalues();
    res.spectrum.assign(ev.data(), ev.data() + ev.size());
    double abs_sum = 0.0;
    for (double l : res.spectrum)
        abs_sum += std::abs(l);
    res.value = 0.5 * (abs_sum - 1.0);
    if (res.value < 0.0 && res.value > -1e-9)
        res.value = 0.0;
    return res;
}

}  // namespace qvdp
