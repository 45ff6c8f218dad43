#include "dotrom/backend.hpp"

#include "dotrom/errors.hpp"

namespace dotrom {

void MeasurementSet::validate() const {
    if (frequencies.empty()) throw ValidationError("measurements: at least one frequency required");
    for (double w : frequencies) {
        if (!std::isfinite(w)) throw ValidationError("measurements: frequencies must be finite");
    }
    if (n_src < 1 || n_det < 1) throw ValidationError("measurements: empty source or detector set");
    if (data.size() != expected_size()) {
        throw ValidationError("measurements: data length " + std::to_string(data.size()) + " does not match " +
                              std::to_string(expected_size()) + " = n_det * n_src * n_omega");
    }
}

VecC stack_responses(const std::vector<MatC>& per_frequency) {
    const Index nw = Index(per_frequency.size());
    const Index n_det = per_frequency.front().rows();
    const Index n_src = per_frequency.front().cols();
    VecC out(n_det * n_src * nw);
    for (Index j = 0; j < nw; ++j) {
        const MatC& psi = per_frequency[std::size_t(j)];
        for (Index s = 0; s < n_src; ++s) {
            out.segment(MeasurementSet::stack_index(s, j, 0, nw, n_det), n_det) = psi.col(s);
        }
    }
    return out;
}

MatC stack_jacobians(const std::vector<MatC>& per_frequency, Index n_src, Index n_det) {
    const Index nw = Index(per_frequency.size());
    const Index l = per_frequency.front().cols();
    MatC out(n_det * n_src * nw, l);
    for (Index j = 0; j < nw; ++j) {
        const MatC& block = per_frequency[std::size_t(j)];
        for (Index s = 0; s < n_src; ++s) {
            out.middleRows(MeasurementSet::stack_index(s, j, 0, nw, n_det), n_det) =
                block.middleRows(s * n_det, n_det);
        }
    }
    return out;
}

std::string to_string(BackendKind kind) { return kind == BackendKind::Full ? "full" : "rom"; }

FullBackend::FullBackend(const DiscreteOperators& ops, PalsConfig cfg, std::vector<double> frequencies,
                         SolverOptions options, CostCounters& counters)
    : ops_(ops), cfg_(cfg), freqs_(std::move(frequencies)), options_(options), counters_(counters) {
    if (freqs_.empty()) throw ValidationError("backend: no frequencies");
}

Index FullBackend::data_size() const {
    return ops_.num_sources() * ops_.num_detectors() * Index(freqs_.size());
}

VecC FullBackend::predict(const PalsParams& p) {
    if (!p.all_finite()) throw ValidationError("parameters must be finite");
    counters_.add_function_eval();
    cached_params_.reset();
    cached_a1_ = absorption_diagonal(p, cfg_, ops_);
    cached_x_.clear();
    std::vector<MatC> responses;
    for (double omega : freqs_) {
        MatC x = source_solutions(ops_, cached_a1_, omega, options_, &counters_);
        responses.push_back(ops_.c.cast<Complex>() * x);
        cached_x_.push_back(std::move(x));
    }
    cached_params_ = p.values();
    return stack_responses(responses);
}

MatC FullBackend::predict_jacobian(const PalsParams& p) {
    if (!cached_params_ || *cached_params_ != p.values()) predict(p);
    counters_.add_jacobian_eval();
    const auto derivs = absorption_derivatives(p, cfg_, ops_);
    std::vector<MatC> blocks;
    Snapshot snap;
    for (std::size_t j = 0; j < freqs_.size(); ++j) {
        MatC z = adjoint_solutions(ops_, cached_a1_, freqs_[j], options_, &counters_);
        blocks.push_back(full_jacobian_block(derivs, cached_x_[j], z));
        if (keep_snapshots_) snap.states.push_back({cached_x_[j], std::move(z)});
    }
    if (keep_snapshots_) {
        snap.params = p.values();
        snapshots_.push_back(std::move(snap));
    }
    return stack_jacobians(blocks, ops_.num_sources(), ops_.num_detectors());
}

RomBackend::RomBackend(const DiscreteOperators& ops, PalsConfig cfg, GlobalBasis basis,
                       const PalsParams& p_initial, CostCounters& counters)
    : ops_(ops), cfg_(cfg), freqs_(basis.frequencies), counters_(counters),
      model_(ops, std::move(basis), absorption_diagonal(p_initial, cfg, ops), &counters) {
    if (freqs_.empty()) throw ValidationError("backend: basis carries no frequencies");
}

Index RomBackend::data_size() const {
    return ops_.num_sources() * ops_.num_detectors() * Index(freqs_.size());
}

void RomBackend::move_to(const PalsParams& p) {
    if (!p.all_finite()) throw ValidationError("parameters must be finite");
    model_.set_absorption(absorption_diagonal(p, cfg_, ops_));
}

VecC RomBackend::predict(const PalsParams& p) {
    counters_.add_function_eval();
    move_to(p);
    std::vector<MatC> responses;
    for (double omega : freqs_) responses.push_back(model_.reduced_frequency_response(omega));
    return stack_responses(responses);
}

MatC RomBackend::predict_jacobian(const PalsParams& p) {
    counters_.add_jacobian_eval();
    move_to(p);
    const auto derivs = absorption_derivatives(p, cfg_, ops_);
    std::vector<MatC> blocks;
    for (double omega : freqs_) blocks.push_back(model_.reduced_jacobian(derivs, omega));
    return stack_jacobians(blocks, ops_.num_sources(), ops_.num_detectors());
}

VecR residual(ObjectiveBackend& backend, const PalsParams& p, const MeasurementSet& data) {
    if (data.data.size() != backend.data_size()) throw ValidationError("residual: data length mismatch");
    const VecC diff = backend.predict(p) - data.data;
    VecR out(2 * diff.size());
    out.head(diff.size()) = diff.real();
    out.tail(diff.size()) = diff.imag();
    return out;
}

MatR jacobian(ObjectiveBackend& backend, const PalsParams& p) {
    const MatC j = backend.predict_jacobian(p);
    MatR out(2 * j.rows(), j.cols());
    out.topRows(j.rows()) = j.real();
    out.bottomRows(j.rows()) = j.imag();
    return out;
}

}  // namespace dotrom
