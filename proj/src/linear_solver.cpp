#include "dotrom/linear_solver.hpp"

#include <cmath>
#include <optional>
#include <sstream>

#include <Eigen/LU>
#include <Eigen/SparseLU>

#include "dotrom/errors.hpp"

namespace dotrom {

namespace {

template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

struct IterativeResult {
    bool converged = false;
    int iterations = 0;
    double relative_residual = 0.0;
    std::string reason;
};

// Jacobi-preconditioned conjugate gradients with the unconjugated bilinear
// form r^T z; this is COCG for complex symmetric K and plain PCG for real SPD K.
template <class Scalar, class Apply>
IterativeResult cocg(const Apply& apply, const Vec<Scalar>& inv_diag, const Vec<Scalar>& rhs,
                     Vec<Scalar>& x, double tol, int max_iter) {
    IterativeResult res;
    const double bnorm = rhs.norm();
    x.setZero(rhs.size());
    if (bnorm == 0.0) {
        res.converged = true;
        return res;
    }
    Vec<Scalar> r = rhs;
    Vec<Scalar> z = inv_diag.cwiseProduct(r);
    Vec<Scalar> p = z;
    Scalar rho = (r.array() * z.array()).sum();
    Vec<Scalar> q(rhs.size());
    for (int it = 1; it <= max_iter; ++it) {
        q = apply(p);
        const Scalar pq = (p.array() * q.array()).sum();
        if (std::abs(pq) == 0.0 || !std::isfinite(std::abs(pq))) {
            res.iterations = it;
            res.relative_residual = r.norm() / bnorm;
            res.reason = "breakdown (p^T K p = 0)";
            return res;
        }
        const Scalar alpha = rho / pq;
        x += alpha * p;
        r -= alpha * q;
        const double rel = r.norm() / bnorm;
        res.iterations = it;
        res.relative_residual = rel;
        if (rel <= tol) {
            res.converged = true;
            return res;
        }
        z = inv_diag.cwiseProduct(r);
        const Scalar rho_next = (r.array() * z.array()).sum();
        if (std::abs(rho) == 0.0) {
            res.reason = "breakdown (r^T z = 0)";
            return res;
        }
        const Scalar beta = rho_next / rho;
        rho = rho_next;
        p = z + beta * p;
    }
    res.reason = "iteration limit reached";
    return res;
}

}  // namespace

SolverKind parse_solver_kind(const std::string& name) {
    if (name == "iterative") return SolverKind::Iterative;
    if (name == "sparse-direct") return SolverKind::SparseDirect;
    if (name == "dense-direct") return SolverKind::DenseDirect;
    throw ValidationError("solver.kind: unknown solver '" + name + "'");
}

std::string to_string(SolverKind kind) {
    switch (kind) {
    case SolverKind::Iterative: return "iterative";
    case SolverKind::SparseDirect: return "sparse-direct";
    case SolverKind::DenseDirect: return "dense-direct";
    }
    return "iterative";
}

struct ShiftedSystemSolver::Impl {
    const DiscreteOperators* ops = nullptr;
    SolverOptions options;
    VecC shift;                 // (i omega / nu) E + a1
    VecR inv_diag_real;
    VecC inv_diag_complex;
    std::optional<Eigen::SparseLU<Eigen::SparseMatrix<double>>> sparse_real;
    std::optional<Eigen::SparseLU<Eigen::SparseMatrix<Complex>>> sparse_complex;
    std::optional<Eigen::PartialPivLU<MatR>> dense_real;
    std::optional<Eigen::PartialPivLU<MatC>> dense_complex;

    Eigen::SparseMatrix<double> real_matrix() const {
        Eigen::SparseMatrix<double> k = ops->a0;
        for (Index i = 0; i < k.rows(); ++i) k.coeffRef(i, i) += shift[i].real();
        k.makeCompressed();
        return k;
    }
    Eigen::SparseMatrix<Complex> complex_matrix() const {
        Eigen::SparseMatrix<Complex> k = ops->a0.cast<Complex>();
        for (Index i = 0; i < k.rows(); ++i) k.coeffRef(i, i) += shift[i];
        k.makeCompressed();
        return k;
    }
};

ShiftedSystemSolver::ShiftedSystemSolver(const DiscreteOperators& ops, const VecR& a1, double omega,
                                         SolverOptions options)
    : impl_(std::make_unique<Impl>()), n_(ops.n), omega_(omega) {
    if (a1.size() != ops.n) throw ValidationError("absorption diagonal has wrong length");
    if (!std::isfinite(omega)) throw ValidationError("frequency must be finite");
    impl_->ops = &ops;
    impl_->options = options;
    impl_->shift = a1.cast<Complex>() + Complex(0.0, omega / ops.nu()) * ops.e_diag.cast<Complex>();
    const VecC diag = ops.a0.diagonal().cast<Complex>() + impl_->shift;
    if (is_real()) {
        impl_->inv_diag_real = diag.real().cwiseInverse();
    } else {
        impl_->inv_diag_complex = diag.cwiseInverse();
    }
}

ShiftedSystemSolver::~ShiftedSystemSolver() = default;
ShiftedSystemSolver::ShiftedSystemSolver(ShiftedSystemSolver&&) noexcept = default;
ShiftedSystemSolver& ShiftedSystemSolver::operator=(ShiftedSystemSolver&&) noexcept = default;

VecC ShiftedSystemSolver::apply(const VecC& x) const {
    const VecR re = x.real();
    const VecR im = x.imag();
    VecC y(x.size());
    y.real() = impl_->ops->a0 * re;
    y.imag() = impl_->ops->a0 * im;
    return y + impl_->shift.cwiseProduct(x);
}

MatC ShiftedSystemSolver::solve(const MatC& rhs) {
    if (rhs.rows() != n_) throw ValidationError("right-hand side has wrong row count");
    Impl& im = *impl_;
    MatC out(n_, rhs.cols());
    last_residual_ = 0.0;
    last_iterations_ = 0;

    auto dense_solve = [&](Index col) {
        if (is_real()) {
            if (!im.dense_real) im.dense_real.emplace(MatR(im.real_matrix()));
            const VecR re = im.dense_real->solve(rhs.col(col).real().eval());
            const VecR imag = im.dense_real->solve(rhs.col(col).imag().eval());
            out.col(col).real() = re;
            out.col(col).imag() = imag;
        } else {
            if (!im.dense_complex) im.dense_complex.emplace(MatC(im.complex_matrix()));
            out.col(col) = im.dense_complex->solve(rhs.col(col));
        }
    };

    const SolverKind kind = im.options.kind;
    if (kind == SolverKind::DenseDirect) {
        for (Index j = 0; j < rhs.cols(); ++j) dense_solve(j);
        return out;
    }
    if (kind == SolverKind::SparseDirect) {
        if (is_real()) {
            if (!im.sparse_real) {
                im.sparse_real.emplace();
                im.sparse_real->compute(im.real_matrix());
                if (im.sparse_real->info() != Eigen::Success) throw SolverError("sparse LU factorization failed");
            }
            // Solve into plain matrices; SparseLU does not handle strided destinations.
            const MatR re = im.sparse_real->solve(rhs.real().eval());
            const MatR imag = im.sparse_real->solve(rhs.imag().eval());
            out.real() = re;
            out.imag() = imag;
        } else {
            if (!im.sparse_complex) {
                im.sparse_complex.emplace();
                im.sparse_complex->compute(im.complex_matrix());
                if (im.sparse_complex->info() != Eigen::Success) throw SolverError("sparse LU factorization failed");
            }
            out = im.sparse_complex->solve(rhs);
        }
        return out;
    }

    const int max_iter = int(std::min<Index>(Index(im.options.max_iter_factor) * n_, 1 << 30));
    for (Index j = 0; j < rhs.cols(); ++j) {
        IterativeResult res;
        if (is_real() && rhs.col(j).imag().isZero(0.0)) {
            VecR x;
            const VecR b = rhs.col(j).real();
            const SparseR& a0 = im.ops->a0;
            const VecR shift = im.shift.real();
            res = cocg<double>([&](const VecR& v) -> VecR { return a0 * v + shift.cwiseProduct(v); },
                               im.inv_diag_real, b, x, im.options.tolerance, max_iter);
            out.col(j) = x.cast<Complex>();
        } else {
            VecC x;
            const VecC b = rhs.col(j);
            const VecC inv = is_real() ? VecC(im.inv_diag_real.cast<Complex>()) : im.inv_diag_complex;
            res = cocg<Complex>([&](const VecC& v) -> VecC { return apply(v); }, inv, b, x,
                                im.options.tolerance, max_iter);
            out.col(j) = x;
        }
        if (!res.converged) {
            if (im.options.dense_fallback && n_ <= im.options.dense_fallback_limit) {
                dense_solve(j);
                continue;
            }
            std::ostringstream msg;
            msg << "iterative solve failed for column " << j << ": " << res.reason << " after "
                << res.iterations << " iterations, relative residual " << res.relative_residual;
            throw SolverError(msg.str());
        }
        last_residual_ = std::max(last_residual_, res.relative_residual);
        last_iterations_ = std::max(last_iterations_, res.iterations);
    }
    return out;
}

MatC dense_system_matrix(const DiscreteOperators& ops, const VecR& a1, double omega) {
    MatC k = MatR(ops.a0).cast<Complex>();
    for (Index i = 0; i < ops.n; ++i) k(i, i) += a1[i] + Complex(0.0, omega / ops.nu()) * ops.e_diag[i];
    return k;
}

}  // namespace dotrom
