#pragma once

#include <memory>
#include <string>

#include "dotrom/grid.hpp"
#include "dotrom/types.hpp"

namespace dotrom {

enum class SolverKind {
    Iterative,     // CG (omega = 0) or COCG (complex symmetric), Jacobi-preconditioned
    SparseDirect,  // sparse LU, factored once per system
    DenseDirect,   // dense LU; intended for small grids and as a test oracle
};

SolverKind parse_solver_kind(const std::string& name);
std::string to_string(SolverKind kind);

struct SolverOptions {
    SolverKind kind = SolverKind::Iterative;
    double tolerance = 1e-10;       // relative residual for the iterative path
    int max_iter_factor = 10;       // iteration cap = factor * n
    bool dense_fallback = true;     // retry densely when the iterative path fails
    Index dense_fallback_limit = 4096;
};

/**
 * Solver for K = (i omega / nu) E + A0 + diag(a1).
 *
 * K is complex symmetric (K^T = K, not Hermitian), so the transposed
 * (adjoint-type) solves use the very same matrix without conjugation.
 * Factorizations are built lazily and reused across right-hand sides.
 */
class ShiftedSystemSolver {
public:
    ShiftedSystemSolver(const DiscreteOperators& ops, const VecR& a1, double omega,
                        SolverOptions options = {});
    ~ShiftedSystemSolver();
    ShiftedSystemSolver(ShiftedSystemSolver&&) noexcept;
    ShiftedSystemSolver& operator=(ShiftedSystemSolver&&) noexcept;

    bool is_real() const { return omega_ == 0.0; }
    Index size() const { return n_; }

    // Solves K X = rhs column by column.
    MatC solve(const MatC& rhs);
    // Solves K^T X = rhs; identical to solve() because K^T = K.
    MatC solve_transpose(const MatC& rhs) { return solve(rhs); }

    // y = K x, for residual checks.
    VecC apply(const VecC& x) const;

    // Largest relative residual and iteration count of the last solve() call.
    double last_relative_residual() const { return last_residual_; }
    int last_iterations() const { return last_iterations_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    Index n_ = 0;
    double omega_ = 0.0;
    double last_residual_ = 0.0;
    int last_iterations_ = 0;
};

/// Dense complex system matrix K, for small oracle computations in tests.
MatC dense_system_matrix(const DiscreteOperators& ops, const VecR& a1, double omega);

}  // namespace dotrom
