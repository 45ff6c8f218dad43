#include <doctest.h>

#include <cmath>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "dotrom/diagnostics.hpp"
#include "dotrom/errors.hpp"
#include "support.hpp"

using namespace dotrom;
using dotrom::test::small_ops;

namespace {

MatR col(std::initializer_list<double> v) {
    MatR m(Index(v.size()), 1);
    Index i = 0;
    for (double x : v) m(i++, 0) = x;
    return m;
}

// Independent oracle: largest principal angle via the projector difference,
// ||(I - Pb) Va||_2 for orthonormal Va, Vb.
double gap_oracle(const MatR& va, const MatR& vb) {
    const MatR resid = va - vb * (vb.transpose() * va);
    return Eigen::JacobiSVD<MatR>(resid).singularValues()[0];
}

MatR orthonormal(const MatR& a) {
    Eigen::HouseholderQR<MatR> qr(a);
    return qr.householderQ() * MatR::Identity(a.rows(), a.cols());
}

}  // namespace

TEST_CASE("subspace gap examples") {
    CHECK(subspace_gap(col({1, 0}), col({1, 0})) == 0.0);
    CHECK(subspace_gap(col({1, 0}), col({0, 1})) == doctest::Approx(1.0));
    CHECK(subspace_gap(col({1, 0}), col({M_SQRT1_2, M_SQRT1_2})) == doctest::Approx(0.70710678).epsilon(1e-8));
    const MatR q = orthonormal(MatR::Random(9, 3));
    CHECK(subspace_gap(q, q) == 0.0);
    CHECK(subspace_gap(q, q.leftCols(2)) == 1.0);
}

TEST_CASE("subspace gap against the projector oracle") {
    for (int trial = 0; trial < 10; ++trial) {
        std::srand(unsigned(trial + 1));
        const MatR a = orthonormal(MatR::Random(12, 4));
        MatR b = orthonormal(a + 0.3 * MatR::Random(12, 4));
        const double g = subspace_gap(a, b);
        CHECK(g >= 0.0);
        CHECK(g <= 1.0);
        CHECK(g == doctest::Approx(gap_oracle(a, b)).epsilon(1e-8));
        CHECK(g == doctest::Approx(subspace_gap(b, a)).epsilon(1e-10));
        // Directed gap from a smaller space into a larger one.
        const MatR big = orthonormal(MatR::Random(12, 6));
        CHECK(subspace_gap(a.leftCols(2), big) == doctest::Approx(gap_oracle(a.leftCols(2), big)).epsilon(1e-8));
    }
}

TEST_CASE("subspace gap rejects non-orthonormal input") {
    CHECK_THROWS_AS(subspace_gap(col({2, 0}), col({1, 0})), ValidationError);
    CHECK_THROWS_AS(subspace_gap(col({1, 0}), col({1, 1})), ValidationError);
    CHECK_THROWS_AS(subspace_gap(col({1, 0}), col({1, 0, 0})), ValidationError);
}

TEST_CASE("frequency grid for the norm surrogate") {
    CHECK(default_hinf_grid({0.0}) == std::vector<double>{0.0});
    const auto grid = default_hinf_grid({0.0, 0.1, 10.0});
    REQUIRE(grid.size() == 102);
    CHECK(grid.front() == 0.0);
    CHECK(grid[1] == doctest::Approx(0.1));
    CHECK(grid.back() == doctest::Approx(10.0));
    CHECK(grid[51] == doctest::Approx(1.0));
}

TEST_CASE("grid norm of the reduced response") {
    const DiscreteOperators ops = small_ops(12, 3, 4);
    PalsConfig cfg;
    cfg.m0 = 4;
    const PalsParams p = dotrom::test::blob_params(ops.domain);
    const LocalBasis lb = build_local_basis(ops, cfg, p, {0.0});
    const GlobalBasis basis = build_global_basis({lb}, 1e-10);
    const VecR a1 = absorption_diagonal(p, cfg, ops);
    const RomModel rom(ops, basis, a1);

    const MatC psi = rom.reduced_frequency_response(0.0);
    const double norm0 = Eigen::JacobiSVD<MatC>(psi).singularValues()[0];
    CHECK(hinf_on_grid(rom, {0.0}) == doctest::Approx(norm0).epsilon(1e-12));
    CHECK(hinf_on_grid(rom, {0.0, 0.5, 3.0}) >= 0.0);

    // Rotating the basis leaves the reduced transfer function unchanged.
    GlobalBasis rotated = basis;
    const MatR q = orthonormal(MatR::Random(basis.order(), basis.order()));
    rotated.v = basis.v * q;
    rotated.w = rotated.v;
    const RomModel rom2(ops, rotated, a1);
    const std::vector<double> grid{0.0, 0.2, 2.0};
    CHECK(hinf_on_grid(rom2, grid) == doctest::Approx(hinf_on_grid(rom, grid)).epsilon(1e-10));
}

TEST_CASE("error ratio vanishes at the samples") {
    const DiscreteOperators ops = small_ops(14, 4, 4);
    PalsConfig cfg;
    cfg.m0 = 4;
    const PalsParams p1 = dotrom::test::blob_params(ops.domain);
    const PalsParams p2 = dotrom::test::jitter(p1, 0.1, 2);
    const std::vector<double> freqs{0.0, 0.8};
    const GlobalBasis basis = build_global_basis(
        {build_local_basis(ops, cfg, p1, freqs), build_local_basis(ops, cfg, p2, freqs)}, 0.0);
    const auto grid = default_hinf_grid(freqs);
    for (const PalsParams& p : {p1, p2}) {
        const VecR a1 = absorption_diagonal(p, cfg, ops);
        const RomModel rom(ops, basis, a1);
        for (double omega : freqs) {
            const MatC full = frequency_response(ops, a1, omega);
            CHECK(interpolation_error_ratio(full, rom, rom, omega, grid) <= 1e-8);
        }
    }
    // Identity embedding: no error anywhere.
    GlobalBasis id;
    id.v = MatR::Identity(ops.n, ops.n);
    id.w = id.v;
    id.frequencies = freqs;
    const PalsParams p3 = dotrom::test::jitter(p1, 0.3, 9);
    const VecR a3 = absorption_diagonal(p3, cfg, ops);
    const RomModel exact(ops, id, a3);
    SolverOptions dense;
    dense.kind = SolverKind::DenseDirect;
    CHECK(interpolation_error_ratio(frequency_response(ops, a3, 0.8, dense), exact, exact, 0.8, grid) <= 1e-12);
}

TEST_CASE("gap and error series over iterates") {
    const DiscreteOperators ops = small_ops(14, 4, 4);
    PalsConfig cfg;
    cfg.m0 = 4;
    const PalsParams p1 = dotrom::test::blob_params(ops.domain);
    std::vector<VecR> iterates{p1.values()};
    for (int k = 1; k <= 3; ++k) iterates.push_back(dotrom::test::jitter(p1, 0.05 * k, 40 + k).values());
    CostCounters counters;
    const DiagnosticSeries s = gap_error_series(ops, cfg, {0.0}, iterates, {}, &counters);
    REQUIRE(s.gap.size() == 4);
    CHECK(s.iteration == std::vector<int>{1, 2, 3, 4});
    CHECK(s.gap[0] == 0.0);
    CHECK(s.error_ratio[0] <= 1e-8);
    for (double g : s.gap) {
        CHECK(g >= 0.0);
        CHECK(g <= 1.0);
    }
    CHECK(s.gap[3] > 0.0);
    CHECK(counters.snapshot().large_solves == 4 * 4);

    // Repeating one iterate gives an all-zero gap series.
    const DiagnosticSeries same = gap_error_series(ops, cfg, {0.0}, {p1.values(), p1.values()}, {}, nullptr);
    CHECK(same.gap == std::vector<double>{0.0, 0.0});
}

TEST_CASE("rank correlation") {
    CHECK(spearman_correlation({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
    CHECK(spearman_correlation({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
    CHECK(spearman_correlation({1, 2, 3, 4}, {1, 8, 27, 64}) == doctest::Approx(1.0));
    CHECK(spearman_correlation({1, 1, 1}, {1, 2, 3}) == 0.0);
    // Ties take average ranks: ranks a = (1, 2.5, 2.5, 4), b = (1, 2, 3, 4).
    const double expected = 0.9486832980505138;
    CHECK(spearman_correlation({1, 2, 2, 3}, {1, 2, 3, 4}) == doctest::Approx(expected));
    CHECK_THROWS(spearman_correlation({1, 2}, {1, 2, 3}));
}

TEST_CASE("series CSV round trip") {
    dotrom::test::TempDir dir("series");
    DiagnosticSeries s;
    s.iteration = {0, 1, 2};
    s.gap = {0.0, 0.125, 1.0 / 3.0};
    s.error_ratio = {1e-12, 0.02, 0.5};
    write_series_csv(dir.file("s.csv"), s);
    const DiagnosticSeries back = read_series_csv(dir.file("s.csv"));
    CHECK(back.iteration == s.iteration);
    CHECK(back.gap == s.gap);
    CHECK(back.error_ratio == s.error_ratio);
}
