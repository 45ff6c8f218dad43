#include <doctest.h>

#include "dotrom/errors.hpp"
#include "dotrom/forward.hpp"
#include "dotrom/linear_solver.hpp"
#include "dotrom/pals.hpp"
#include "support.hpp"

using namespace dotrom;
using dotrom::test::rel_diff;
using dotrom::test::small_ops;
using dotrom::test::square_domain;

namespace {

VecR background(const DiscreteOperators& ops, double mu) {
    const double h2 = ops.mesh_width() * ops.mesh_width();
    VecR a1 = VecR::Zero(ops.n);
    for (Index i = 0; i < ops.n; ++i) {
        if (ops.absorbing[std::size_t(i)]) a1[i] = h2 * mu;
    }
    return a1;
}

SolverOptions with_kind(SolverKind kind) {
    SolverOptions o;
    o.kind = kind;
    return o;
}

}  // namespace

TEST_CASE("static response is real and finite") {
    const DiscreteOperators ops = small_ops(12, 4, 4);
    const MatC psi = frequency_response(ops, background(ops, 0.05), 0.0);
    CHECK(psi.rows() == 4);
    CHECK(psi.cols() == 4);
    CHECK(psi.allFinite());
    CHECK(psi.imag().cwiseAbs().maxCoeff() == 0.0);
    CHECK(psi.real().minCoeff() > 0.0);
}

TEST_CASE("iterative and dense solves agree") {
    for (int nodes : {10, 20}) {
        const DiscreteOperators ops = small_ops(nodes, 5, 6);
        const VecR a1 = background(ops, 0.05);
        for (double omega : {0.0, 0.3, 5.0}) {
            const MatC it = frequency_response(ops, a1, omega, with_kind(SolverKind::Iterative));
            const MatC dense = frequency_response(ops, a1, omega, with_kind(SolverKind::DenseDirect));
            const MatC sparse = frequency_response(ops, a1, omega, with_kind(SolverKind::SparseDirect));
            CHECK(rel_diff(it, dense) <= 1e-8);
            CHECK(rel_diff(sparse, dense) <= 1e-12);
        }
    }
}

TEST_CASE("iterative solver meets its residual tolerance") {
    const DiscreteOperators ops = small_ops(30, 3, 3);
    ShiftedSystemSolver solver(ops, background(ops, 0.1), 2.0);
    const MatC x = solver.solve(ops.b.cast<Complex>());
    CHECK(solver.last_relative_residual() <= 1e-10);
    for (Index j = 0; j < x.cols(); ++j) {
        const VecC r = solver.apply(x.col(j)) - ops.b.col(j).cast<Complex>();
        CHECK(r.norm() / ops.b.col(j).norm() <= 1e-9);
    }
}

TEST_CASE("reciprocity with collocated sources and detectors") {
    const DomainSpec d = square_domain(15);
    SourceDetectorLayout layout = uniform_layout(d, 4, 1);
    layout.detectors = layout.sources;
    const DiscreteOperators ops = assemble(d, layout);
    CHECK((ops.b - ops.c.transpose()).norm() == 0.0);
    const VecR a1 = background(ops, 0.07);
    for (double omega : {0.0, 1.5}) {
        const MatC x = source_solutions(ops, a1, omega);
        const MatC z = adjoint_solutions(ops, a1, omega);
        const MatC cx = ops.c.cast<Complex>() * x;
        const MatC btz = (ops.b.transpose().cast<Complex>() * z).transpose();
        CHECK(rel_diff(cx, btz) <= 1e-8);
        if (omega == 0.0) CHECK(z.imag().cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("solve counters") {
    const DiscreteOperators ops = small_ops(12, 3, 5);
    const VecR a1 = background(ops, 0.05);
    CostCounters counters;
    CHECK(counters.snapshot().large_solves == 0);
    (void)frequency_response(ops, a1, 0.0, {}, &counters);
    CHECK(counters.snapshot().large_solves == 3);
    const MatC z = adjoint_solutions(ops, a1, 0.0, {}, &counters);
    CHECK(z.cols() == 5);
    CHECK(counters.snapshot().large_solves == 8);
}

TEST_CASE("mesh refinement changes the static response by less than 5%") {
    // Same physical source/detector positions on both meshes (node 2k on the
    // finer grid sits where node k sits on the coarser one). Top detectors are
    // four coarse cells from the nearest source; the response of a point
    // source is singular at the source itself.
    const DomainSpec coarse = square_domain(25);
    const DomainSpec fine = square_domain(49);
    SourceDetectorLayout lc, lf;
    for (Index ix : {4, 12, 20}) {
        lc.sources.push_back(24 * 25 + ix);
        lf.sources.push_back(48 * 49 + 2 * ix);
        lc.detectors.push_back(ix);
        lf.detectors.push_back(2 * ix);
    }
    for (Index ix : {8, 16}) {
        lc.detectors.push_back(24 * 25 + ix);
        lf.detectors.push_back(48 * 49 + 2 * ix);
    }
    const DiscreteOperators oc = assemble(coarse, lc);
    const DiscreteOperators of = assemble(fine, lf);
    const MatC pc = frequency_response(oc, background(oc, 0.05), 0.0);
    const MatC pf = frequency_response(of, background(of, 0.05), 0.0);
    CHECK(rel_diff(pc, pf) <= 0.05);
}

TEST_CASE("adjoint Jacobian block") {
    const DomainSpec d = square_domain(14);
    const DiscreteOperators ops = assemble(d, uniform_layout(d, 3, 4));
    PalsConfig cfg;
    cfg.m0 = 4;
    const PalsParams p = dotrom::test::blob_params(d);
    const VecR a1 = absorption_diagonal(p, cfg, ops);
    const auto derivs = absorption_derivatives(p, cfg, ops);
    const double omega = 0.8;
    const MatC x = source_solutions(ops, a1, omega);
    const MatC z = adjoint_solutions(ops, a1, omega);
    const MatC jac = full_jacobian_block(derivs, x, z);
    CHECK(jac.rows() == 12);
    CHECK(jac.cols() == p.size());

    SUBCASE("zero derivative gives a zero column") {
        std::vector<SparseDiagonal> none(derivs.size());
        CHECK(full_jacobian_block(none, x, z).cwiseAbs().maxCoeff() == 0.0);
    }

    SUBCASE("central differences") {
        const double step = 1e-6;
        MatC fd(jac.rows(), jac.cols());
        for (Index k = 0; k < p.size(); ++k) {
            PalsParams plus = p, minus = p;
            plus.values()[k] += step;
            minus.values()[k] -= step;
            const MatC dp = frequency_response(ops, absorption_diagonal(plus, cfg, ops), omega) -
                            frequency_response(ops, absorption_diagonal(minus, cfg, ops), omega);
            // Rows ordered i_src * n_det + i_det.
            for (Index s = 0; s < dp.cols(); ++s) {
                for (Index i = 0; i < dp.rows(); ++i) fd(s * dp.rows() + i, k) = dp(i, s) / (2 * step);
            }
        }
        CHECK(rel_diff(jac, fd) <= 1e-5);
    }
}
