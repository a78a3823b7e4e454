#pragma once

// Truncated Fock-space operator algebra.
//
// Subsystem ordering convention: for coupled systems the tensor product is
// always (oscillator 1) x (oscillator 2) x ..., i.e. the first factor is the
// slowest-varying index of the composite basis.

#include <complex>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace qvdp {

using cplx = std::complex<double>;
using DenseMatrix = Eigen::MatrixXcd;
using SparseMatrix = Eigen::SparseMatrix<cplx>;
using ComplexVector = Eigen::VectorXcd;

/// Highest retained Fock level; the single-mode dimension is n_max + 1.
class FockCutoff {
public:
    explicit FockCutoff(int n_max);

    int n_max() const noexcept { return n_max_; }
    int dim() const noexcept { return n_max_ + 1; }

    friend bool operator==(const FockCutoff&, const FockCutoff&) = default;

private:
    int n_max_;
};

enum class Storage { dense, sparse };

/// Square complex matrix kept either sparse or dense. Immutable value type;
/// arithmetic returns new operators. Sparse op sparse stays sparse, anything
/// touching a dense operand produces a dense result.
class ComplexOperator {
public:
    ComplexOperator();
    explicit ComplexOperator(SparseMatrix m);
    explicit ComplexOperator(DenseMatrix m);

    static ComplexOperator identity(int dim);
    static ComplexOperator zero(int dim);

    int dim() const noexcept;
    Storage storage() const noexcept;
    cplx operator()(int row, int col) const;

    SparseMatrix sparse() const;
    DenseMatrix dense() const;

    ComplexOperator adjoint() const;
    ComplexOperator transpose() const;

    bool is_hermitian(double tol) const;
    /// Largest entrywise |this - other|.
    double max_abs_diff(const ComplexOperator& other) const;

    friend ComplexOperator operator+(const ComplexOperator& a, const ComplexOperator& b);
    friend ComplexOperator operator-(const ComplexOperator& a, const ComplexOperator& b);
    friend ComplexOperator operator*(const ComplexOperator& a, const ComplexOperator& b);
    friend ComplexOperator operator*(cplx s, const ComplexOperator& a);

private:
    std::variant<SparseMatrix, DenseMatrix> m_;
};

/// Density matrix over a (possibly composite) Fock space.
///
/// Construction checks trace and Hermiticity; positivity is checked on
/// demand via min_eigenvalue() since it costs a full eigen-decomposition.
class DensityMatrix {
public:
    static constexpr double trace_tol = 1e-9;
    static constexpr double hermiticity_tol = 1e-10;
    static constexpr double positivity_tol = 1e-8;

    DensityMatrix(DenseMatrix m, std::vector<int> subsystem_dims);

    /// Hermitizes and trace-normalizes `m` before validating it.
    static DensityMatrix normalized(DenseMatrix m, std::vector<int> subsystem_dims);
    static DensityMatrix pure(const ComplexVector& psi, std::vector<int> subsystem_dims);

    int dim() const noexcept { return static_cast<int>(m_.rows()); }
    const DenseMatrix& matrix() const noexcept { return m_; }
    const std::vector<int>& subsystem_dims() const noexcept { return dims_; }
    ComplexOperator op() const { return ComplexOperator(m_); }

    double min_eigenvalue() const;
    bool is_positive() const { return min_eigenvalue() >= -positivity_tol; }

private:
    DenseMatrix m_;
    std::vector<int> dims_;
};

ComplexOperator annihilation(FockCutoff cutoff);
ComplexOperator creation(FockCutoff cutoff);
ComplexOperator number_op(FockCutoff cutoff);

/// Kronecker product in the given order. Throws on an empty list.
ComplexOperator tensor(std::span<const ComplexOperator> ops);
ComplexOperator tensor(std::initializer_list<ComplexOperator> ops);

SparseMatrix kron(const SparseMatrix& a, const SparseMatrix& b);

/// Embeds a single-mode operator at position `site` of a product space.
ComplexOperator embed(const ComplexOperator& op, int site, std::span<const int> dims);

/// Reduced state on subsystem `keep`.
DensityMatrix partial_trace(const DensityMatrix& rho, int keep);

/// Fock-basis coherent state |alpha> truncated at the cutoff and renormalized.
/// `norm_deficit` (optional) receives 1 - sum_n |<n|alpha>|^2 before renormalization.
ComplexVector coherent_ket(cplx alpha, FockCutoff cutoff, double* norm_deficit = nullptr);

/// 0.5 * || a - b ||_1 for Hermitian a, b.
double trace_distance(const DensityMatrix& a, const DensityMatrix& b);

}  // namespace qvdp
