#include "dotrom/forward.hpp"

#include "dotrom/errors.hpp"

namespace dotrom {

MatC source_solutions(const DiscreteOperators& ops, const VecR& a1, double omega,
                      const SolverOptions& options, CostCounters* counters) {
    ShiftedSystemSolver solver(ops, a1, omega, options);
    MatC x = solver.solve(ops.b.cast<Complex>());
    if (counters) counters->add_large_solves(ops.num_sources());
    return x;
}

MatC frequency_response(const DiscreteOperators& ops, const VecR& a1, double omega,
                        const SolverOptions& options, CostCounters* counters) {
    const MatC x = source_solutions(ops, a1, omega, options, counters);
    return ops.c.cast<Complex>() * x;
}

MatC adjoint_solutions(const DiscreteOperators& ops, const VecR& a1, double omega,
                       const SolverOptions& options, CostCounters* counters) {
    ShiftedSystemSolver solver(ops, a1, omega, options);
    MatC z = solver.solve_transpose(ops.c.transpose().cast<Complex>());
    if (counters) counters->add_large_solves(ops.num_detectors());
    return z;
}

MatC full_jacobian_block(const std::vector<SparseDiagonal>& derivs, const MatC& x, const MatC& z) {
    if (x.rows() != z.rows()) throw ValidationError("jacobian: X and Z row counts differ");
    const Index n_src = x.cols();
    const Index n_det = z.cols();
    MatC jac = MatC::Zero(n_src * n_det, Index(derivs.size()));
    for (std::size_t k = 0; k < derivs.size(); ++k) {
        const SparseDiagonal& d = derivs[k];
        if (d.empty()) continue;
        // Gather the support rows: J_k = -Zq^T diag(d) Xq.
        const Index q = Index(d.size());
        MatC xq(q, n_src);
        MatC zq(q, n_det);
        for (Index t = 0; t < q; ++t) {
            const Index node = d.index[std::size_t(t)];
            if (node < 0 || node >= x.rows()) throw ValidationError("jacobian: derivative index out of range");
            xq.row(t) = d.value[std::size_t(t)] * x.row(node);
            zq.row(t) = z.row(node);
        }
        const MatC block = -(zq.transpose() * xq);  // n_det x n_src
        jac.col(Index(k)) = block.reshaped();        // column-major: i_src * n_det + i_det
    }
    return jac;
}

}  // namespace dotrom
