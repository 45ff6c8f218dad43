#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dotrom/config.hpp"
#include "dotrom/counters.hpp"
#include "dotrom/diagnostics.hpp"
#include "dotrom/trust_region.hpp"

namespace dotrom {

struct GenerateResult {
    Phantom phantom;
    SimulatedData data;
    std::string mask_path;
    std::string field_path;
    std::string measurements_path;
};

/// Phantom, clean and noisy data; writes mask.pgm, phantom.csv and the
/// measurement container into the output directory.
GenerateResult run_generate(const RunConfig& cfg);

/// Local bases at the given samples (n_omega (n_src + n_det) large solves
/// each), compressed into one global basis.
GlobalBasis build_basis_from_samples(const DiscreteOperators& ops, const RunConfig& cfg,
                                     const std::vector<VecR>& samples, CostCounters* counters);

/// Absorption mu at every node for PaLS parameters (image output).
VecR absorption_field(const PalsParams& p, const PalsConfig& cfg, const DomainSpec& domain);

struct PhaseCosts {
    CostReport warm_start;
    CostReport inversion;
    CostReport diagnostics;  // solves spent on evaluation and diagnostics only
};

struct ReconstructionResult {
    RunMode mode = RunMode::Full;
    VecR initial_params;
    VecR final_params;
    std::optional<InversionTrace> warm_start;
    InversionTrace inversion;
    PhaseCosts costs;
    double initial_misfit = 0.0;     // ||M(p0) - D|| / ||D||, full model
    double final_misfit = 0.0;       // relative objective of the inversion backend
    double final_full_misfit = 0.0;  // full model at the final parameters
    int samples = 0;                 // K behind the basis (config value in full mode)
    Index basis_order = 0;
    std::string basis_path;
    DiagnosticSeries series;
    double max_gap = 0.0;
    double gap_error_correlation = 0.0;
    std::string report_path;
    std::string report_text;

    // Large solves of the run proper (warm start plus inversion).
    std::int64_t large_solves() const { return costs.warm_start.large_solves + costs.inversion.large_solves; }
    // (K_fun + K_Jac) / (2 K) over the inversion phase.
    double offline_online_ratio() const;
};

/**
 * Runs warm start (rom mode without a basis), basis build or load,
 * inversion, final evaluation and diagnostics, then writes the report,
 * images and series into cfg.output_dir. Errors carry a "[phase]" prefix.
 */
ReconstructionResult run_reconstruction(const RunConfig& cfg);

}  // namespace dotrom
