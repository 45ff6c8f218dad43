#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dotrom/counters.hpp"
#include "dotrom/forward.hpp"
#include "dotrom/mor.hpp"
#include "dotrom/pals.hpp"

namespace dotrom {

/**
 * Stacked boundary data. Entry ((i_src * n_omega) + j_omega) * n_det + i_det
 * holds detector i_det for source i_src at frequency j_omega, i.e. all
 * detectors of one (source, frequency) pair are contiguous, frequencies
 * vary within a source, and sources are outermost.
 */
struct MeasurementSet {
    std::vector<double> frequencies;
    Index n_src = 0;
    Index n_det = 0;
    VecC data;
    double noise_level = 0.0;

    Index n_omega() const { return Index(frequencies.size()); }
    Index expected_size() const { return n_src * n_det * n_omega(); }
    static Index stack_index(Index i_src, Index j_omega, Index i_det, Index n_omega, Index n_det) {
        return (i_src * n_omega + j_omega) * n_det + i_det;
    }
    void validate() const;
};

/// Places per-frequency responses (n_det x n_src each) into the stacked order.
VecC stack_responses(const std::vector<MatC>& per_frequency);
/// Same for per-frequency Jacobian blocks with rows i_src * n_det + i_det.
MatC stack_jacobians(const std::vector<MatC>& per_frequency, Index n_src, Index n_det);

enum class BackendKind { Full, Rom };
std::string to_string(BackendKind kind);

/// Evaluator of the predicted data M(p) and its parameter Jacobian.
class ObjectiveBackend {
public:
    virtual ~ObjectiveBackend() = default;
    virtual BackendKind kind() const = 0;
    virtual Index data_size() const = 0;
    virtual VecC predict(const PalsParams& p) = 0;
    virtual MatC predict_jacobian(const PalsParams& p) = 0;
};

/**
 * Full-order evaluator. Each predict() costs n_omega * n_src large solves;
 * predict_jacobian() reuses the states X of the last predict() at the same p
 * and adds n_omega * n_det adjoint solves.
 */
class FullBackend : public ObjectiveBackend {
public:
    FullBackend(const DiscreteOperators& ops, PalsConfig cfg, std::vector<double> frequencies,
                SolverOptions options, CostCounters& counters);

    BackendKind kind() const override { return BackendKind::Full; }
    Index data_size() const override;
    VecC predict(const PalsParams& p) override;
    MatC predict_jacobian(const PalsParams& p) override;

    // States at the most recent Jacobian evaluation (X and Z at every frequency).
    struct Snapshot {
        VecR params;
        std::vector<StateSolutions> states;
    };
    const std::vector<Snapshot>& jacobian_snapshots() const { return snapshots_; }
    void keep_snapshots(bool keep) { keep_snapshots_ = keep; }

private:
    const DiscreteOperators& ops_;
    PalsConfig cfg_;
    std::vector<double> freqs_;
    SolverOptions options_;
    CostCounters& counters_;
    std::optional<VecR> cached_params_;
    VecR cached_a1_;
    std::vector<MatC> cached_x_;
    bool keep_snapshots_ = false;
    std::vector<Snapshot> snapshots_;
};

/// Reduced-order evaluator; performs no large solves.
class RomBackend : public ObjectiveBackend {
public:
    RomBackend(const DiscreteOperators& ops, PalsConfig cfg, GlobalBasis basis, const PalsParams& p_initial,
               CostCounters& counters);

    BackendKind kind() const override { return BackendKind::Rom; }
    Index data_size() const override;
    VecC predict(const PalsParams& p) override;
    MatC predict_jacobian(const PalsParams& p) override;

    const RomModel& model() const { return model_; }

private:
    void move_to(const PalsParams& p);

    const DiscreteOperators& ops_;
    PalsConfig cfg_;
    std::vector<double> freqs_;
    CostCounters& counters_;
    RomModel model_;
};

/// [Re(M(p) - D); Im(M(p) - D)].
VecR residual(ObjectiveBackend& backend, const PalsParams& p, const MeasurementSet& data);
/// [Re J; Im J], consistent with residual().
MatR jacobian(ObjectiveBackend& backend, const PalsParams& p);

}  // namespace dotrom
