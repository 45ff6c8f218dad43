#pragma once

#include <vector>

#include "dotrom/counters.hpp"
#include "dotrom/grid.hpp"
#include "dotrom/linear_solver.hpp"
#include "dotrom/types.hpp"

namespace dotrom {

// Source solutions X and detector (adjoint) solutions Z at one (omega, p).
struct StateSolutions {
    MatC x;  // n x n_src,  K X = B
    MatC z;  // n x n_det,  K^T Z = C^T
};

/// States X with ((i omega / nu) E + A0 + diag(a1)) X = B.
/// Adds n_src to counters->large_solves when counters is given.
MatC source_solutions(const DiscreteOperators& ops, const VecR& a1, double omega,
                      const SolverOptions& options = {}, CostCounters* counters = nullptr);

/// Psi(omega; p) = C X, an n_det x n_src matrix.
MatC frequency_response(const DiscreteOperators& ops, const VecR& a1, double omega,
                        const SolverOptions& options = {}, CostCounters* counters = nullptr);

/// Adjoint states Z with K^T Z = C^T (n x n_det). Adds n_det large solves.
MatC adjoint_solutions(const DiscreteOperators& ops, const VecR& a1, double omega,
                       const SolverOptions& options = {}, CostCounters* counters = nullptr);

/**
 * Adjoint Jacobian of Psi at one frequency.
 *
 * Row (i_src * n_det + i_det), column k holds
 *   -Z[:, i_det]^T diag(dA1/dp_k) X[:, i_src].
 * derivs[k] is the sparse diagonal dA1/dp_k.
 */
MatC full_jacobian_block(const std::vector<SparseDiagonal>& derivs, const MatC& x, const MatC& z);

}  // namespace dotrom
