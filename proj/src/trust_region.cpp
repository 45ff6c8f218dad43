#include "dotrom/trust_region.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "dotrom/errors.hpp"

namespace dotrom {

void TrustRegionOptions::validate() const {
    if (max_iter < 1) throw ValidationError("optimizer.max_iter must be >= 1");
    if (!(gradient_tolerance >= 0.0)) throw ValidationError("optimizer.gradient_tolerance must be >= 0");
    if (!(decrease_tolerance >= 0.0)) throw ValidationError("optimizer.decrease_tolerance must be >= 0");
    if (!(initial_radius > 0.0) || !std::isfinite(initial_radius)) {
        throw ValidationError("optimizer.initial_radius must be positive");
    }
    if (max_jacobian_evals < 0) throw ValidationError("optimizer.max_jacobian_evals must be >= 0");
}

std::string to_string(TerminationStatus s) {
    switch (s) {
        case TerminationStatus::Gradient: return "gradient-tolerance";
        case TerminationStatus::ObjectiveDecrease: return "objective-decrease-tolerance";
        case TerminationStatus::MaxIterations: return "max-iterations";
        case TerminationStatus::RadiusUnderflow: return "radius-underflow";
        case TerminationStatus::JacobianBudget: return "jacobian-budget";
    }
    return "unknown";
}

VecR trust_region_step(const MatR& jtj, const VecR& g, double radius) {
    Eigen::SelfAdjointEigenSolver<MatR> eig(jtj);
    const VecR lam = eig.eigenvalues().cwiseMax(0.0);
    const MatR& q = eig.eigenvectors();
    const VecR b = q.transpose() * g;
    const double lmax = lam.size() ? lam.maxCoeff() : 0.0;
    const double cut = double(lam.size()) * std::numeric_limits<double>::epsilon() * lmax;

    auto coeffs = [&](double shift) {
        VecR c(lam.size());
        for (Index i = 0; i < lam.size(); ++i) {
            const double den = lam[i] + shift;
            c[i] = (shift == 0.0 && lam[i] <= cut) ? 0.0 : -b[i] / den;
        }
        return c;
    };

    // Minimum-norm Gauss-Newton step first.
    VecR c = coeffs(0.0);
    if (c.norm() <= radius) return q * c;

    // ||d(shift)|| decreases monotonically; bracket the root and refine.
    double lo = 0.0;
    double hi = g.norm() / radius;
    double shift = hi;
    for (int it = 0; it < 200; ++it) {
        c = coeffs(shift);
        const double norm = c.norm();
        if (std::abs(norm - radius) <= 1e-10 * radius) break;
        if (norm > radius) lo = shift; else hi = shift;
        // Newton on 1/radius - 1/||d||.
        double dn = 0.0;
        for (Index i = 0; i < lam.size(); ++i) dn += c[i] * c[i] / (lam[i] + shift);
        const double phi = 1.0 / radius - 1.0 / norm;
        const double dphi = -dn / (norm * norm * norm);
        double next = shift - phi / dphi;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (hi - lo <= 1e-15 * hi) break;
        shift = next;
    }
    return q * c;
}

InversionTrace minimize(const LeastSquaresProblem& problem, const VecR& p0, const TrustRegionOptions& options) {
    options.validate();
    InversionTrace trace;
    VecR x = p0;
    VecR r = problem.residual(x);
    ++trace.function_evals;
    double f = 0.5 * r.squaredNorm();
    if (!std::isfinite(f)) throw SolverError("objective is not finite at the initial parameters");
    trace.iterates.push_back(x);
    trace.objective.push_back(r.norm());

    MatR j = problem.jacobian(x);
    ++trace.jacobian_evals;
    VecR g = j.transpose() * r;
    const double g0 = g.norm();
    double radius = options.initial_radius;

    for (int iter = 0;; ++iter) {
        if (g.norm() <= options.gradient_tolerance * g0 || g0 == 0.0) {
            trace.status = TerminationStatus::Gradient;
            break;
        }
        if (iter >= options.max_iter) {
            trace.status = TerminationStatus::MaxIterations;
            break;
        }
        const MatR jtj = j.transpose() * j;
        const VecR d = trust_region_step(jtj, g, radius);
        const double pred = -(g.dot(d) + 0.5 * (j * d).squaredNorm());

        TrialStep trial;
        trial.radius = radius;
        trial.step_norm = d.norm();
        trial.objective = std::numeric_limits<double>::infinity();
        VecR r_trial;
        double f_trial = std::numeric_limits<double>::infinity();
        if (pred > 0.0) {
            const VecR x_trial = x + d;
            try {
                r_trial = problem.residual(x_trial);
                f_trial = 0.5 * r_trial.squaredNorm();
            } catch (const SolverError&) {
                f_trial = std::numeric_limits<double>::infinity();
            }
            ++trace.function_evals;
            if (std::isfinite(f_trial)) trial.objective = std::sqrt(2.0 * f_trial);
            trial.ratio = std::isfinite(f_trial) ? (f - f_trial) / pred : -std::numeric_limits<double>::infinity();
            trial.accepted = trial.ratio > 0.1;
            if (trial.accepted) {
                const double rel = (f - f_trial) / f;
                x += d;
                r = std::move(r_trial);
                f = f_trial;
                trace.iterates.push_back(x);
                trace.objective.push_back(r.norm());
                trace.trials.push_back(trial);
                if (rel < options.decrease_tolerance) {
                    trace.status = TerminationStatus::ObjectiveDecrease;
                    break;
                }
                if (options.max_jacobian_evals > 0 && trace.jacobian_evals >= options.max_jacobian_evals) {
                    trace.status = TerminationStatus::JacobianBudget;
                    break;
                }
                j = problem.jacobian(x);
                ++trace.jacobian_evals;
                g = j.transpose() * r;
            } else {
                trace.trials.push_back(trial);
            }
        } else {
            trial.ratio = -std::numeric_limits<double>::infinity();
            trace.trials.push_back(trial);
        }

        if (trial.ratio > 0.75 && trial.step_norm >= 0.99 * radius) {
            radius *= 2.0;
        } else if (trial.ratio < 0.1) {
            radius *= 0.25;
        }
        if (radius < options.min_radius) {
            trace.status = TerminationStatus::RadiusUnderflow;
            break;
        }
    }
    return trace;
}

InversionTrace invert(ObjectiveBackend& backend, const PalsParams& p0, const MeasurementSet& data,
                      const TrustRegionOptions& options, const CostCounters* counters) {
    const int m0 = p0.m0();
    LeastSquaresProblem problem;
    problem.residual = [&](const VecR& v) { return residual(backend, PalsParams(m0, v), data); };
    problem.jacobian = [&](const VecR& v) { return jacobian(backend, PalsParams(m0, v)); };
    InversionTrace trace = minimize(problem, p0.values(), options);
    if (counters) trace.costs = counters->snapshot();
    return trace;
}

}  // namespace dotrom
