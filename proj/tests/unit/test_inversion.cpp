#include <doctest.h>

#include <Eigen/Cholesky>

#include "dotrom/backend.hpp"
#include "dotrom/errors.hpp"
#include "dotrom/mor.hpp"
#include "dotrom/synth.hpp"
#include "dotrom/trust_region.hpp"
#include "support.hpp"

using namespace dotrom;
using dotrom::test::rel_diff;
using dotrom::test::small_ops;

namespace {

struct Setup {
    DiscreteOperators ops = small_ops(15, 4, 5);
    PalsConfig cfg;
    std::vector<double> freqs{0.0, 1.2};
    PalsParams truth;
    PalsParams start;

    Setup() {
        cfg.m0 = 4;
        truth = dotrom::test::jitter(dotrom::test::blob_params(ops.domain), 0.15, 5);
        start = dotrom::test::blob_params(ops.domain);
    }

    MeasurementSet data_at(const PalsParams& p, double noise, std::uint64_t seed = 1) const {
        CostCounters c;
        FullBackend full(ops, cfg, freqs, {}, c);
        MeasurementSet m;
        m.frequencies = freqs;
        m.n_src = ops.num_sources();
        m.n_det = ops.num_detectors();
        m.data = noise > 0.0 ? add_white_noise(full.predict(p), noise, seed) : full.predict(p);
        m.noise_level = noise;
        return m;
    }

    GlobalBasis basis(const std::vector<PalsParams>& samples, double tau = 1e-8) const {
        std::vector<LocalBasis> locals;
        for (const auto& s : samples) locals.push_back(build_local_basis(ops, cfg, s, freqs));
        return build_global_basis(locals, tau);
    }
};

MatC fd_jacobian(ObjectiveBackend& b, const PalsParams& p, double step) {
    MatC out(b.data_size(), p.size());
    for (Index k = 0; k < p.size(); ++k) {
        PalsParams plus = p, minus = p;
        plus.values()[k] += step;
        minus.values()[k] -= step;
        out.col(k) = (b.predict(plus) - b.predict(minus)) / (2 * step);
    }
    return out;
}

}  // namespace

TEST_CASE("measurement stacking order") {
    std::vector<MatC> per(2);
    for (int j = 0; j < 2; ++j) {
        per[std::size_t(j)] = MatC(3, 2);  // n_det x n_src
        for (Index i = 0; i < 3; ++i)
            for (Index s = 0; s < 2; ++s) per[std::size_t(j)](i, s) = Complex(100 * s + 10 * j + i, 0);
    }
    const VecC stacked = stack_responses(per);
    REQUIRE(stacked.size() == 12);
    for (Index s = 0; s < 2; ++s)
        for (Index j = 0; j < 2; ++j)
            for (Index i = 0; i < 3; ++i)
                CHECK(stacked[MeasurementSet::stack_index(s, j, i, 2, 3)].real() == 100 * s + 10 * j + i);
    CHECK(MeasurementSet::stack_index(1, 0, 0, 2, 3) == 6);
}

TEST_CASE("residual at the generating parameters") {
    Setup s;
    const MeasurementSet clean = s.data_at(s.truth, 0.0);
    CostCounters c;
    FullBackend full(s.ops, s.cfg, s.freqs, {}, c);
    CHECK(residual(full, s.truth, clean).norm() == 0.0);

    Setup zero;
    zero.freqs = {0.0};
    const MeasurementSet d0 = zero.data_at(zero.start, 0.0);
    FullBackend f0(zero.ops, zero.cfg, zero.freqs, {}, c);
    const VecR r = residual(f0, zero.truth, d0);
    CHECK(r.size() == 2 * 20);
    CHECK(r.tail(20).cwiseAbs().maxCoeff() == 0.0);
    CHECK(r.head(20).norm() > 0.0);

    const MeasurementSet noisy = s.data_at(s.truth, 1e-3, 17);
    const double rel = residual(full, s.truth, noisy).norm() / noisy.data.norm();
    CHECK(rel >= 0.5e-3);
    CHECK(rel <= 2e-3);

    MeasurementSet wrong = clean;
    wrong.data.conservativeResize(3);
    CHECK_THROWS_AS(residual(full, s.truth, wrong), ValidationError);
}

TEST_CASE("full backend Jacobian matches central differences") {
    Setup s;
    CostCounters c;
    FullBackend full(s.ops, s.cfg, s.freqs, {}, c);
    const MatC jac = full.predict_jacobian(s.truth);
    CHECK(rel_diff(jac, fd_jacobian(full, s.truth, 1e-6)) <= 1e-5);
    const MatR real = jacobian(full, s.truth);
    CHECK(real.rows() == 2 * jac.rows());
    CHECK((real.topRows(jac.rows()) - jac.real()).norm() == 0.0);
    CHECK((real.bottomRows(jac.rows()) - jac.imag()).norm() == 0.0);
}

TEST_CASE("reduced backend Jacobian matches central differences and the full one at samples") {
    Setup s;
    CostCounters c;
    RomBackend rom(s.ops, s.cfg, s.basis({s.start, s.truth}, 0.0), s.start, c);
    const PalsParams p = dotrom::test::jitter(s.start, 0.05, 8);
    CHECK(rel_diff(rom.predict_jacobian(p), fd_jacobian(rom, p, 1e-6)) <= 1e-5);

    FullBackend full(s.ops, s.cfg, s.freqs, {}, c);
    CHECK(rel_diff(rom.predict_jacobian(s.truth), full.predict_jacobian(s.truth)) <= 1e-6);
    CHECK(rel_diff(rom.predict(s.truth), full.predict(s.truth)) <= 1e-8);
}

TEST_CASE("backends share shapes and stacking") {
    Setup s;
    CostCounters c;
    FullBackend full(s.ops, s.cfg, s.freqs, {}, c);
    RomBackend rom(s.ops, s.cfg, s.basis({s.start}), s.start, c);
    const MeasurementSet d = s.data_at(s.truth, 0.0);
    CHECK(full.data_size() == rom.data_size());
    CHECK(residual(full, s.start, d).size() == residual(rom, s.start, d).size());
    const MatR jf = jacobian(full, s.start);
    const MatR jr = jacobian(rom, s.start);
    CHECK(jf.rows() == jr.rows());
    CHECK(jf.cols() == jr.cols());
    CHECK(full.kind() == BackendKind::Full);
    CHECK(rom.kind() == BackendKind::Rom);
}

TEST_CASE("parameters without influence give zero Jacobian columns") {
    Setup s;
    PalsParams p = s.start;
    p.set_centre(0, {40.0, 40.0});  // far outside the slab
    CostCounters c;
    FullBackend full(s.ops, s.cfg, s.freqs, {}, c);
    const MatC jac = full.predict_jacobian(p);
    for (Index k : {PalsParams::alpha_index(4, 0), PalsParams::beta_index(4, 0), PalsParams::centre_index(4, 0, 0)})
        CHECK(jac.col(k).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("trust-region subproblem") {
    MatR jtj(2, 2);
    jtj << 4, 1, 1, 3;
    const VecR g(VecR::Ones(2));
    const VecR gn = -jtj.ldlt().solve(g);
    CHECK((trust_region_step(jtj, g, 10.0) - gn).norm() <= 1e-14);
    for (double radius : {0.01, 0.1, 0.3}) {
        const VecR d = trust_region_step(jtj, g, radius);
        CHECK(d.norm() == doctest::Approx(radius).epsilon(1e-8));
        CHECK(g.dot(d) < 0.0);
    }
    // Rank-deficient: minimum-norm step has no component in the null space.
    MatR sing = MatR::Zero(2, 2);
    sing(0, 0) = 2.0;
    const VecR d = trust_region_step(sing, VecR::Constant(2, 1.0), 5.0);
    CHECK(d[0] == doctest::Approx(-0.5));
    CHECK(d[1] == 0.0);
}

TEST_CASE("linear residual converges in at most two iterations") {
    VecR target(3);
    target << 0.5, -1.0, 0.8;
    LeastSquaresProblem lin;
    lin.residual = [&](const VecR& p) { return VecR(p - target); };
    lin.jacobian = [](const VecR& p) { return MatR(MatR::Identity(p.size(), p.size())); };
    const InversionTrace t = minimize(lin, VecR::Zero(3), {});
    CHECK(t.iterates.size() <= 3);
    CHECK((t.best() - target).norm() <= 1e-12);
    CHECK(t.status == TerminationStatus::Gradient);

    const InversionTrace at = minimize(lin, target, {});
    CHECK(at.iterates.size() == 1);
}

TEST_CASE("optimizer termination paths") {
    LeastSquaresProblem bad;
    bad.residual = [](const VecR& p) { return VecR(p.array() * std::numeric_limits<double>::infinity()); };
    bad.jacobian = [](const VecR& p) { return MatR(MatR::Identity(p.size(), p.size())); };
    CHECK_THROWS_AS(minimize(bad, VecR::Ones(2), {}), SolverError);

    // A Jacobian of the wrong sign never yields an acceptable step.
    LeastSquaresProblem wrong;
    wrong.residual = [](const VecR& p) { return VecR(p); };
    wrong.jacobian = [](const VecR& p) { return MatR(-MatR::Identity(p.size(), p.size())); };
    const InversionTrace t = minimize(wrong, VecR::Ones(2), {});
    CHECK(t.status == TerminationStatus::RadiusUnderflow);
    CHECK(t.iterates.size() == 1);

    TrustRegionOptions few;
    few.max_iter = 3;
    LeastSquaresProblem rosen;
    rosen.residual = [](const VecR& p) {
        VecR r(2);
        r << 10 * (p[1] - p[0] * p[0]), 1 - p[0];
        return r;
    };
    rosen.jacobian = [](const VecR& p) {
        MatR j(2, 2);
        j << -20 * p[0], 10, -1, 0;
        return j;
    };
    VecR x0(2);
    x0 << -1.2, 1.0;
    const InversionTrace limited = minimize(rosen, x0, few);
    CHECK(limited.status == TerminationStatus::MaxIterations);
    CHECK(limited.trials.size() == 3);
    const InversionTrace solved = minimize(rosen, x0, {});
    CHECK((solved.best() - VecR::Ones(2)).norm() <= 1e-6);

    TrustRegionOptions budget;
    budget.max_jacobian_evals = 2;
    const InversionTrace capped = minimize(rosen, x0, budget);
    CHECK(capped.status == TerminationStatus::JacobianBudget);
    CHECK(capped.jacobian_evals == 2);

    TrustRegionOptions invalid;
    invalid.initial_radius = 0.0;
    CHECK_THROWS_AS(minimize(rosen, x0, invalid), ValidationError);
}

TEST_CASE("PaLS inversion: monotone objective, exact counters, determinism") {
    Setup s;
    const MeasurementSet data = s.data_at(s.truth, 1e-3);
    TrustRegionOptions opts;
    opts.max_iter = 25;

    auto run = [&](CostCounters& counters) {
        FullBackend full(s.ops, s.cfg, s.freqs, {}, counters);
        return invert(full, s.start, data, opts, &counters);
    };
    CostCounters c1, c2;
    const InversionTrace a = run(c1);
    const InversionTrace b = run(c2);

    for (std::size_t k = 1; k < a.objective.size(); ++k) CHECK(a.objective[k] < a.objective[k - 1]);
    for (const TrialStep& t : a.trials) {
        if (t.accepted) CHECK(t.ratio > 0.1);
    }
    CHECK(a.final_objective() < 0.5 * a.objective.front());

    const CostReport cost = c1.snapshot();
    const std::int64_t n_w = Index(s.freqs.size());
    CHECK(cost.function_evals == a.function_evals);
    CHECK(cost.jacobian_evals == a.jacobian_evals);
    CHECK(cost.large_solves ==
          a.function_evals * n_w * s.ops.num_sources() + a.jacobian_evals * n_w * s.ops.num_detectors());

    REQUIRE(a.iterates.size() == b.iterates.size());
    for (std::size_t k = 0; k < a.iterates.size(); ++k) CHECK((a.iterates[k].array() == b.iterates[k].array()).all());
    CHECK(a.objective == b.objective);
}

TEST_CASE("reduced inversion performs no large solves") {
    Setup s;
    const MeasurementSet data = s.data_at(s.truth, 1e-3);
    const GlobalBasis basis = s.basis({s.start, dotrom::test::jitter(s.start, 0.1, 3)});
    CostCounters counters;
    RomBackend rom(s.ops, s.cfg, basis, s.start, counters);
    TrustRegionOptions opts;
    opts.max_iter = 25;
    const InversionTrace t = invert(rom, s.start, data, opts, &counters);
    CHECK(counters.snapshot().large_solves == 0);
    CHECK(counters.snapshot().reduced_solves > 0);
    CHECK(t.costs.function_evals == t.function_evals);
    for (std::size_t k = 1; k < t.objective.size(); ++k) CHECK(t.objective[k] < t.objective[k - 1]);
}
