#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dotrom/backend.hpp"
#include "dotrom/counters.hpp"
#include "dotrom/types.hpp"

namespace dotrom {

struct TrustRegionOptions {
    int max_iter = 200;                  // trial steps
    double gradient_tolerance = 1e-8;    // relative to the gradient norm at p0
    double decrease_tolerance = 1e-10;   // relative objective decrease of an accepted step
    double initial_radius = 1.0;
    double min_radius = 1e-14;
    int max_jacobian_evals = 0;          // 0 = unlimited

    void validate() const;
};

enum class TerminationStatus { Gradient, ObjectiveDecrease, MaxIterations, RadiusUnderflow, JacobianBudget };
std::string to_string(TerminationStatus s);

struct LeastSquaresProblem {
    std::function<VecR(const VecR&)> residual;
    std::function<MatR(const VecR&)> jacobian;
};

struct TrialStep {
    double radius = 0.0;       // radius the step was computed for
    double step_norm = 0.0;
    double objective = 0.0;    // ||r|| at the trial point (inf if evaluation failed)
    double ratio = 0.0;        // actual / predicted decrease
    bool accepted = false;
};

struct InversionTrace {
    std::vector<VecR> iterates;       // p0 followed by every accepted iterate
    std::vector<double> objective;    // ||r|| at those iterates
    std::vector<TrialStep> trials;
    std::int64_t function_evals = 0;
    std::int64_t jacobian_evals = 0;
    CostReport costs;                 // filled by the backend driver
    TerminationStatus status = TerminationStatus::MaxIterations;

    const VecR& best() const { return iterates.back(); }
    double final_objective() const { return objective.back(); }
};

/**
 * Trust-region Gauss-Newton for min 0.5 ||r(p)||^2.
 *
 * The step minimizes ||J d + r|| over ||d|| <= radius using an eigen
 * decomposition of J^T J and a Levenberg shift found by safeguarded Newton
 * iteration on the secular equation. Steps with ratio > 0.1 are accepted.
 * Throws SolverError when r(p0) is not finite.
 */
InversionTrace minimize(const LeastSquaresProblem& problem, const VecR& p0, const TrustRegionOptions& options);

/// Solution of the trust-region subproblem, exposed for testing.
VecR trust_region_step(const MatR& jtj, const VecR& g, double radius);

/// Minimizes ||M(p) - D|| over PaLS parameters with the given backend.
InversionTrace invert(ObjectiveBackend& backend, const PalsParams& p0, const MeasurementSet& data,
                      const TrustRegionOptions& options, const CostCounters* counters = nullptr);

}  // namespace dotrom
