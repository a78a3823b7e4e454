#include "qvdp/fock.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

namespace qvdp {

FockCutoff::FockCutoff(int n_max) : n_max_(n_max)
{
    if (n_max < 1)
        throw std::invalid_argument("FockCutoff: n_max must be >= 1, got " + std::to_string(n_max));
}

// ---------------------------------------------------------------------------
// ComplexOperator

ComplexOperator::ComplexOperator() : m_(SparseMatrix(0, 0)) {}

ComplexOperator::ComplexOperator(SparseMatrix m)
{
    if (m.rows() != m.cols())
        throw std::invalid_argument("ComplexOperator: matrix must be square");
    m.makeCompressed();
    m_ = std::move(m);
}

ComplexOperator::ComplexOperator(DenseMatrix m)
{
    if (m.rows() != m.cols())
        throw std::invalid_argument("ComplexOperator: matrix must be square");
    m_ = std::move(m);
}

ComplexOperator ComplexOperator::identity(int dim)
{
    SparseMatrix id(dim, dim);
    id.setIdentity();
    return ComplexOperator(std::move(id));
}

ComplexOperator ComplexOperator::zero(int dim) { return ComplexOperator(SparseMatrix(dim, dim)); }

int ComplexOperator::dim() const noexcept
{
    return std::visit([](const auto& m) { return static_cast<int>(m.rows()); }, m_);
}

Storage ComplexOperator::storage() const noexcept
{
    return std::holds_alternative<SparseMatrix>(m_) ? Storage::sparse : Storage::dense;
}

cplx ComplexOperator::operator()(int row, int col) const
{
    if (row < 0 || col < 0 || row >= dim() || col >= dim())
        throw std::out_of_range("ComplexOperator: index out of range");
    if (const auto* s = std::get_if<SparseMatrix>(&m_))
        return s->coeff(row, col);
    return std::get<DenseMatrix>(m_)(row, col);
}

SparseMatrix ComplexOperator::sparse() const
{
    if (const auto* s = std::get_if<SparseMatrix>(&m_))
        return *s;
    SparseMatrix out = std::get<DenseMatrix>(m_).sparseView();
    out.makeCompressed();
    return out;
}

DenseMatrix ComplexOperator::dense() const
{
    if (const auto* d = std::get_if<DenseMatrix>(&m_))
        return *d;
    return DenseMatrix(std::get<SparseMatrix>(m_));
}

ComplexOperator ComplexOperator::adjoint() const
{
    if (const auto* s = std::get_if<SparseMatrix>(&m_))
        return ComplexOperator(SparseMatrix(s->adjoint()));
    return ComplexOperator(DenseMatrix(std::get<DenseMatrix>(m_).adjoint()));
}

ComplexOperator ComplexOperator::transpose() const
{
    if (const auto* s = std::get_if<SparseMatrix>(&m_))
        return ComplexOperator(SparseMatrix(s->transpose()));
    return ComplexOperator(DenseMatrix(std::get<DenseMatrix>(m_).transpose()));
}

bool ComplexOperator::is_hermitian(double tol) const { return max_abs_diff(adjoint()) <= tol; }

double ComplexOperator::max_abs_diff(const ComplexOperator& other) const
{
    if (dim() != other.dim())
        throw std::invalid_argument("ComplexOperator: dimension mismatch");
    if (dim() == 0)
        return 0.0;
    if (storage() == Storage::sparse && other.storage() == Storage::sparse) {
        SparseMatrix diff = sparse() - other.sparse();
        double best = 0.0;
        for (int k = 0; k < diff.outerSize(); ++k)
            for (SparseMatrix::InnerIterator it(diff, k); it; ++it)
                best = std::max(best, std::abs(it.value()));
        return best;
    }
    return (dense() - other.dense()).cwiseAbs().maxCoeff();
}

ComplexOperator operator+(const ComplexOperator& a, const ComplexOperator& b)
{
    if (a.dim() != b.dim())
        throw std::invalid_argument("ComplexOperator: dimension mismatch in +");
    if (a.storage() == Storage::sparse && b.storage() == Storage::sparse)
        return ComplexOperator(SparseMatrix(a.sparse() + b.sparse()));
    return ComplexOperator(DenseMatrix(a.dense() + b.dense()));
}

ComplexOperator operator-(const ComplexOperator& a, const ComplexOperator& b)
{
    return a + cplx(-1.0) * b;
}

ComplexOperator operator*(const ComplexOperator& a, const ComplexOperator& b)
{
    if (a.dim() != b.dim())
        throw std::invalid_argument("ComplexOperator: dimension mismatch in *");
    if (a.storage() == Storage::sparse && b.storage() == Storage::sparse)
        return ComplexOperator(SparseMatrix(a.sparse() * b.sparse()));
    return ComplexOperator(DenseMatrix(a.dense() * b.dense()));
}

ComplexOperator operator*(cplx s, const ComplexOperator& a)
{
    if (a.storage() == Storage::sparse)
        return ComplexOperator(SparseMatrix(s * a.sparse()));
    return ComplexOperator(DenseMatrix(s * a.dense()));
}

// ---------------------------------------------------------------------------
// DensityMatrix

DensityMatrix::DensityMatrix(DenseMatrix m, std::vector<int> subsystem_dims)
    : m_(std::move(m)), dims_(std::move(subsystem_dims))
{
    if (m_.rows() != m_.cols() || m_.rows() == 0)
        throw std::invalid_argument("DensityMatrix: matrix must be square and non-empty");
    if (dims_.empty())
        dims_.push_back(static_cast<int>(m_.rows()));
    const long product = std::accumulate(dims_.begin(), dims_.end(), 1L, std::multiplies<>());
    if (product != m_.rows())
        throw std::invalid_argument("DensityMatrix: subsystem dims do not multiply to matrix dim");
    for (int d : dims_)
        if (d < 1)
            throw std::invalid_argument("DensityMatrix: subsystem dims must be positive");
    if (!m_.allFinite())
        throw std::invalid_argument("DensityMatrix: non-finite entries");
    const cplx tr = m_.trace();
    if (std::abs(tr - 1.0) > trace_tol)
        throw std::invalid_argument("DensityMatrix: trace differs from 1 by " +
                                    std::to_string(std::abs(tr - 1.0)));
    const double herm = (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
    if (herm > hermiticity_tol)
        throw std::invalid_argument("DensityMatrix: not Hermitian (deviation " + std::to_string(herm) + ")");
}

DensityMatrix DensityMatrix::normalized(DenseMatrix m, std::vector<int> subsystem_dims)
{
    DenseMatrix h = 0.5 * (m + m.adjoint());
    const double tr = h.trace().real();
    if (!(std::abs(tr) > 0.0) || !std::isfinite(tr))
        throw std::invalid_argument("DensityMatrix::normalized: trace is zero or non-finite");
    h /= tr;
    return DensityMatrix(std::move(h), std::move(subsystem_dims));
}

DensityMatrix DensityMatrix::pure(const ComplexVector& psi, std::vector<int> subsystem_dims)
{
    const double n = psi.norm();
    if (n == 0.0)
        throw std::invalid_argument("DensityMatrix::pure: zero vector");
    ComplexVector u = psi / n;
    return normalized(u * u.adjoint(), std::move(subsystem_dims));
}

double DensityMatrix::min_eigenvalue() const
{
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(m_, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

// ---------------------------------------------------------------------------
// Operators

ComplexOperator annihilation(FockCutoff cutoff)
{
    const int d = cutoff.dim();
    std::vector<Eigen::Triplet<cplx>> t;
    t.reserve(d - 1);
    for (int n = 1; n < d; ++n)
        t.emplace_back(n - 1, n, std::sqrt(static_cast<double>(n)));
    SparseMatrix a(d, d);
    a.setFromTriplets(t.begin(), t.end());
    return ComplexOperator(std::move(a));
}

ComplexOperator creation(FockCutoff cutoff) { return annihilation(cutoff).adjoint(); }

ComplexOperator number_op(FockCutoff cutoff)
{
    const int d = cutoff.dim();
    SparseMatrix n(d, d);
    n.reserve(Eigen::VectorXi::Constant(d, 1));
    for (int k = 0; k < d; ++k)
        n.insert(k, k) = static_cast<double>(k);
    return ComplexOperator(std::move(n));
}

SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b)
{
    const Eigen::Index rb = b.rows(), cb = b.cols();
    std::vector<Eigen::Triplet<cplx>> t;
    t.reserve(static_cast<std::size_t>(a.nonZeros()) * static_cast<std::size_t>(b.nonZeros()));
    for (int ka = 0; ka < a.outerSize(); ++ka)
        for (SparseMatrix::InnerIterator ia(a, ka); ia; ++ia)
            for (int kb = 0; kb < b.outerSize(); ++kb)
                for (SparseMatrix::InnerIterator ib(b, kb); ib; ++ib)
                    t.emplace_back(static_cast<int>(ia.row() * rb + ib.row()),
                                   static_cast<int>(ia.col() * cb + ib.col()), ia.value() * ib.value());
    SparseMatrix out(a.rows() * rb, a.cols() * cb);
    out.setFromTriplets(t.begin(), t.end());
    return out;
}

ComplexOperator tensor(std::span<const ComplexOperator> ops)
{
    if (ops.empty())
        throw std::invalid_argument("tensor: empty operator list");
    bool all_sparse = true;
    for (const auto& op : ops)
        all_sparse = all_sparse && op.storage() == Storage::sparse;
    SparseMatrix acc = ops.front().sparse();
    for (std::size_t i = 1; i < ops.size(); ++i)
        acc = kron(acc, ops[i].sparse());
    if (all_sparse)
        return ComplexOperator(std::move(acc));
    return ComplexOperator(DenseMatrix(acc));
}

ComplexOperator tensor(std::initializer_list<ComplexOperator> ops)
{
    return tensor(std::span<const ComplexOperator>(ops.begin(), ops.size()));
}

ComplexOperator embed(const ComplexOperator& op, int site, std::span<const int> dims)
{
    if (site < 0 || site >= static_cast<int>(dims.size()))
        throw std::out_of_range("embed: site index out of range");
    if (op.dim() != dims[site])
        throw std::invalid_argument("embed: operator dimension does not match subsystem");
    std::vector<ComplexOperator> factors;
    factors.reserve(dims.size());
    for (int s = 0; s < static_cast<int>(dims.size()); ++s)
        factors.push_back(s == site ? op : ComplexOperator::identity(dims[s]));
    return tensor(factors);
}

DensityMatrix partial_trace(const DensityMatrix& rho, int keep)
{
    const auto& dims = rho.subsystem_dims();
    if (dims.size() < 2)
        throw std::invalid_argument("partial_trace: need at least two subsystems");
    if (keep < 0 || keep >= static_cast<int>(dims.size()))
        throw std::out_of_range("partial_trace: subsystem index " + std::to_string(keep) + " out of range");

    // Composite index i = (outer * d_keep + k) * inner + rest_inner.
    int inner = 1;
    for (std::size_t s = keep + 1; s < dims.size(); ++s)
        inner *= dims[s];
    const int dk = dims[keep];
    const int outer = rho.dim() / (dk * inner);

    const DenseMatrix& m = rho.matrix();
    DenseMatrix out = DenseMatrix::Zero(dk, dk);
    for (int o = 0; o < outer; ++o)
        for (int r = 0; r < inner; ++r)
            for (int a = 0; a < dk; ++a) {
                const int i = (o * dk + a) * inner + r;
                for (int b = 0; b < dk; ++b)
                    out(a, b) += m(i, (o * dk + b) * inner + r);
            }
    return DensityMatrix::normalized(std::move(out), {dk});
}

ComplexVector coherent_ket(cplx alpha, FockCutoff cutoff, double* norm_deficit)
{
    const int d = cutoff.dim();
    ComplexVector psi(d);
    cplx c = std::exp(-0.5 * std::norm(alpha));
    psi(0) = c;
    for (int n = 1; n < d; ++n) {
        c *= alpha / std::sqrt(static_cast<double>(n));
        psi(n) = c;
    }
    const double norm2 = psi.squaredNorm();
    if (norm_deficit)
        *norm_deficit = 1.0 - norm2;
    return psi / std::sqrt(norm2);
}

double trace_distance(const DensityMatrix& a, const DensityMatrix& b)
{
    if (a.dim() != b.dim())
        throw std::invalid_argument("trace_distance: dimension mismatch");
    DenseMatrix diff = a.matrix() - b.matrix();
    diff = 0.5 * (diff + diff.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(diff, Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

}  // namespace qvdp
