#pragma once

#include <string>
#include <vector>

#include "dotrom/counters.hpp"
#include "dotrom/grid.hpp"
#include "dotrom/linear_solver.hpp"
#include "dotrom/mor.hpp"
#include "dotrom/pals.hpp"

namespace dotrom {

/**
 * Sine of the largest canonical angle of range(va) measured against
 * range(vb): sqrt(1 - sigma_min^2) over the singular values of va^T vb.
 * Returns 1 when va has more columns than vb. Both inputs must have
 * orthonormal columns to 1e-10 (ValidationError otherwise).
 */
double subspace_gap(const MatR& va, const MatR& vb);

/// 101 log-spaced points over the positive frequencies in `freqs`, plus 0.
/// Just {0} when every frequency is zero.
std::vector<double> default_hinf_grid(const std::vector<double>& freqs);

/// max over the grid of ||Psi_hat(omega)||_2 at the model's current
/// absorption. A lower bound of the H-infinity norm; grid points with a
/// singular reduced system are skipped with a warning on stderr.
double hinf_on_grid(const RomModel& model, const std::vector<double>& grid);

/// Orthonormal basis of the real span of [X(omega_1) .. X(omega_n)] at a1.
MatR source_space(const DiscreteOperators& ops, const VecR& a1, const std::vector<double>& freqs,
                  const SolverOptions& options, CostCounters* counters);

/// ||psi_full - Psi_hat_j(omega)||_2 / ((hinf_k + hinf_j) / 2), with both
/// models already moved to the parameters psi_full was computed at.
double interpolation_error_ratio(const MatC& psi_full, const RomModel& model_j, const RomModel& model_k,
                                 double omega, const std::vector<double>& grid);

struct DiagnosticSeries {
    std::vector<int> iteration;
    std::vector<double> gap;          // sin(V_1, V_k)
    std::vector<double> error_ratio;  // max over frequencies
};

/**
 * Gap and interpolation-error series over a list of iterates. V_k spans the
 * source solutions at iterate k; the reduced model Psi_hat_j uses V_1 on both
 * sides. Costs n_src * n_omega large solves per iterate, charged to
 * `counters` (keep these apart from the inversion counters).
 */
DiagnosticSeries gap_error_series(const DiscreteOperators& ops, const PalsConfig& cfg,
                                  const std::vector<double>& freqs, const std::vector<VecR>& iterates,
                                  const SolverOptions& options, CostCounters* counters);

/// Spearman rank correlation with average ranks for ties; 0 if either
/// series is constant.
double spearman_correlation(const std::vector<double>& a, const std::vector<double>& b);

void write_series_csv(const std::string& path, const DiagnosticSeries& series);
DiagnosticSeries read_series_csv(const std::string& path);

}  // namespace dotrom
