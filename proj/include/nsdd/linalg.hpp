#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace nsdd::linalg {

using DenseMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Triplet = Eigen::Triplet<double>;

/// Raised when a direct solve meets a structurally or numerically singular
/// matrix (pivot breakdown or residual far above the backward-stable bound).
struct SingularMatrixError : std::runtime_error {
    explicit SingularMatrixError(const std::string& what) : std::runtime_error(what) {}
};

struct ConvergenceError : std::runtime_error {
    ConvergenceError(const std::string& what, int iterations)
        : std::runtime_error(what + " (after " + std::to_string(iterations) + " iterations)"),
          iterations(iterations) {}
    int iterations;
};

/// Immutable compressed-row sparse matrix. Row offsets are monotone and
/// column indices strictly increasing within each row.
class SparseMatrix {
public:
    using Storage = Eigen::SparseMatrix<double, Eigen::RowMajor>;

    SparseMatrix() = default;
    explicit SparseMatrix(Storage m) : m_(std::move(m)) { m_.makeCompressed(); }

    static SparseMatrix from_triplets(int rows, int cols, const std::vector<Triplet>& ts);
    static SparseMatrix identity(int n);

    int rows() const { return static_cast<int>(m_.rows()); }
    int cols() const { return static_cast<int>(m_.cols()); }
    int nonzeros() const { return static_cast<int>(m_.nonZeros()); }

    const int* row_offsets() const { return m_.outerIndexPtr(); }
    const int* col_indices() const { return m_.innerIndexPtr(); }
    const double* values() const { return m_.valuePtr(); }

    const Storage& eigen() const { return m_; }

    Vector apply(const Vector& x) const { return m_ * x; }
    Vector apply_transpose(const Vector& x) const { return m_.transpose() * x; }
    SparseMatrix transpose() const { return SparseMatrix(Storage(m_.transpose())); }

    /// Max absolute row sum.
    double inf_norm() const;
    double max_abs() const;

private:
    Storage m_;
};

/// One-shot sparse LU with partial pivoting; factorisation is immutable and
/// may serve concurrent solves.
class SparseLuSolver {
public:
    explicit SparseLuSolver(const SparseMatrix& A);
    ~SparseLuSolver();
    SparseLuSolver(SparseLuSolver&&) noexcept;
    SparseLuSolver& operator=(SparseLuSolver&&) noexcept;

    Vector solve(const Vector& b) const;
    /// Solves A^T x = b against the same factorisation (adjoint systems).
    Vector solve_transposed(const Vector& b) const;
    int dim() const { return n_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int n_ = 0;
};

/// Direct solve of A x = b. Residual satisfies
/// |Ax-b|_inf <= 1e-10 (|A|_inf |x|_inf + |b|_inf); otherwise throws.
Vector lu_solve(const SparseMatrix& A, const Vector& b);

struct SvdResult {
    DenseMatrix U;
    Vector singular_values;  // non-increasing, non-negative
    DenseMatrix V;
};

/// Thin SVD, S = U diag(sigma) V^T.
SvdResult svd(const DenseMatrix& S);

/// Dense direct solve with full pivoting; pivot below 1e-14 * max|A| throws.
Vector dense_solve(const DenseMatrix& A, const Vector& b);

/// Reusable dense LU factorisation for repeated solves against one matrix
/// (including transposed solves, used by the reduced adjoint systems).
class DenseLuSolver {
public:
    explicit DenseLuSolver(const DenseMatrix& A);
    Vector solve(const Vector& b) const;
    Vector solve_transposed(const Vector& b) const;

private:
    Eigen::PartialPivLU<DenseMatrix> lu_;
    double max_abs_ = 0.0;
    int n_ = 0;
};

/// Sparse Cholesky factor L with A = L L^T, for SPD inner-product matrices.
class CholeskyFactor {
public:
    explicit CholeskyFactor(const SparseMatrix& A);
    ~CholeskyFactor();
    CholeskyFactor(CholeskyFactor&&) noexcept;
    CholeskyFactor& operator=(CholeskyFactor&&) noexcept;

    /// L^T x (weights a vector into the Cholesky metric).
    Vector apply_lt(const Vector& x) const;
    DenseMatrix apply_lt(const DenseMatrix& X) const;
    /// Solve L^T x = y.
    Vector solve_lt(const Vector& y) const;
    DenseMatrix solve_lt(const DenseMatrix& Y) const;
    /// Solve A x = y.
    Vector solve(const Vector& y) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace nsdd::linalg
