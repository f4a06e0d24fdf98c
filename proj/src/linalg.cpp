#include "nsdd/linalg.hpp"

#include <Eigen/SVD>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <cmath>

namespace nsdd::linalg {

SparseMatrix SparseMatrix::from_triplets(int rows, int cols, const std::vector<Triplet>& ts) {
    Storage m(rows, cols);
    m.setFromTriplets(ts.begin(), ts.end());
    m.makeCompressed();
    return SparseMatrix(std::move(m));
}

SparseMatrix SparseMatrix::identity(int n) {
    Storage m(n, n);
    m.setIdentity();
    return SparseMatrix(std::move(m));
}

double SparseMatrix::inf_norm() const {
    double best = 0.0;
    for (int r = 0; r < rows(); ++r) {
        double s = 0.0;
        for (Storage::InnerIterator it(m_, r); it; ++it) s += std::abs(it.value());
        best = std::max(best, s);
    }
    return best;
}

double SparseMatrix::max_abs() const {
    double best = 0.0;
    for (int k = 0; k < nonzeros(); ++k) best = std::max(best, std::abs(values()[k]));
    return best;
}

struct SparseLuSolver::Impl {
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    Eigen::SparseMatrix<double> A;  // column-major copy kept for residual checks
    double a_inf = 0.0;
};

SparseLuSolver::SparseLuSolver(const SparseMatrix& A) : impl_(std::make_unique<Impl>()) {
    if (A.rows() != A.cols())
        throw std::invalid_argument("SparseLuSolver: matrix must be square");
    n_ = A.rows();
    impl_->A = A.eigen();
    impl_->a_inf = A.inf_norm();
    impl_->lu.compute(impl_->A);
    if (impl_->lu.info() != Eigen::Success)
        throw SingularMatrixError("sparse LU factorisation failed: " + impl_->lu.lastErrorMessage());
}

SparseLuSolver::~SparseLuSolver() = default;
SparseLuSolver::SparseLuSolver(SparseLuSolver&&) noexcept = default;
SparseLuSolver& SparseLuSolver::operator=(SparseLuSolver&&) noexcept = default;

Vector SparseLuSolver::solve(const Vector& b) const {
    Vector x = impl_->lu.solve(b);
    if (impl_->lu.info() != Eigen::Success)
        throw SingularMatrixError("sparse LU solve failed");
    const double resid = (impl_->A * x - b).lpNorm<Eigen::Infinity>();
    const double bound =
        1e-10 * (impl_->a_inf * x.lpNorm<Eigen::Infinity>() + b.lpNorm<Eigen::Infinity>());
    if (!(resid <= bound) && resid > 1e-300)
        throw SingularMatrixError("sparse LU solve: residual " + std::to_string(resid) +
                                  " exceeds backward-stable bound (numerically singular system)");
    return x;
}

Vector SparseLuSolver::solve_transposed(const Vector& b) const {
    Vector x = impl_->lu.transpose().solve(b);
    if (impl_->lu.info() != Eigen::Success)
        throw SingularMatrixError("sparse LU transposed solve failed");
    const double resid = (impl_->A.transpose() * x - b).lpNorm<Eigen::Infinity>();
    const double bound =
        1e-10 * (impl_->a_inf * x.lpNorm<Eigen::Infinity>() + b.lpNorm<Eigen::Infinity>());
    if (!(resid <= bound) && resid > 1e-300)
        throw SingularMatrixError("sparse LU transposed solve: residual " + std::to_string(resid) +
                                  " exceeds backward-stable bound");
    return x;
}

Vector lu_solve(const SparseMatrix& A, const Vector& b) { return SparseLuSolver(A).solve(b); }

SvdResult svd(const DenseMatrix& S) {
    if (!S.allFinite()) throw std::invalid_argument("svd: matrix has non-finite entries");
    Eigen::JacobiSVD<DenseMatrix> j(S, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return SvdResult{j.matrixU(), j.singularValues(), j.matrixV()};
}

Vector dense_solve(const DenseMatrix& A, const Vector& b) {
    if (A.rows() != A.cols()) throw std::invalid_argument("dense_solve: matrix must be square");
    Eigen::FullPivLU<DenseMatrix> lu(A);
    const double max_abs = A.cwiseAbs().maxCoeff();
    const double pivot_floor = 1e-14 * max_abs;
    if (A.rows() > 0) {
        DenseMatrix u = lu.matrixLU().triangularView<Eigen::Upper>();
        double min_pivot = std::abs(u(A.rows() - 1, A.rows() - 1));
        if (!(min_pivot > pivot_floor))
            throw SingularMatrixError("dense solve: pivot " + std::to_string(min_pivot) +
                                      " below threshold " + std::to_string(pivot_floor));
    }
    return lu.solve(b);
}

DenseLuSolver::DenseLuSolver(const DenseMatrix& A) : lu_(A), n_(static_cast<int>(A.rows())) {
    if (A.rows() != A.cols()) throw std::invalid_argument("DenseLuSolver: matrix must be square");
    max_abs_ = A.size() ? A.cwiseAbs().maxCoeff() : 0.0;
    const double pivot_floor = 1e-14 * max_abs_;
    for (int i = 0; i < n_; ++i) {
        if (!(std::abs(lu_.matrixLU()(i, i)) > pivot_floor))
            throw SingularMatrixError("dense LU: pivot below threshold at index " +
                                      std::to_string(i));
    }
}

Vector DenseLuSolver::solve(const Vector& b) const { return lu_.solve(b); }

Vector DenseLuSolver::solve_transposed(const Vector& b) const {
    // PA = LU  =>  A^T x = b  solved via U^T L^T P x = b.
    Vector y = lu_.matrixLU().triangularView<Eigen::Upper>().transpose().solve(b);
    Vector z = lu_.matrixLU().triangularView<Eigen::UnitLower>().transpose().solve(y);
    return lu_.permutationP().transpose() * z;
}

struct CholeskyFactor::Impl {
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::NaturalOrdering<int>>
        llt;
};

CholeskyFactor::CholeskyFactor(const SparseMatrix& A) : impl_(std::make_unique<Impl>()) {
    Eigen::SparseMatrix<double> c = A.eigen();
    impl_->llt.compute(c);
    if (impl_->llt.info() != Eigen::Success)
        throw SingularMatrixError("sparse Cholesky failed: matrix not SPD");
}

CholeskyFactor::~CholeskyFactor() = default;
CholeskyFactor::CholeskyFactor(CholeskyFactor&&) noexcept = default;
CholeskyFactor& CholeskyFactor::operator=(CholeskyFactor&&) noexcept = default;

Vector CholeskyFactor::apply_lt(const Vector& x) const {
    return impl_->llt.matrixU() * x;
}

DenseMatrix CholeskyFactor::apply_lt(const DenseMatrix& X) const {
    return impl_->llt.matrixU() * X;
}

Vector CholeskyFactor::solve_lt(const Vector& y) const {
    return impl_->llt.matrixU().solve(y);
}

DenseMatrix CholeskyFactor::solve_lt(const DenseMatrix& Y) const {
    DenseMatrix out(Y.rows(), Y.cols());
    for (int c = 0; c < Y.cols(); ++c) out.col(c) = impl_->llt.matrixU().solve(Y.col(c));
    return out;
}

Vector CholeskyFactor::solve(const Vector& y) const { return impl_->llt.solve(y); }

}  // namespace nsdd::linalg
