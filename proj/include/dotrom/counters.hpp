#pragma once

#include <atomic>
#include <cstdint>

namespace dotrom {

// Plain snapshot of the work counters.
struct CostReport {
    std::int64_t large_solves = 0;       // n-dimensional right-hand-side solves
    std::int64_t reduced_solves = 0;     // r-dimensional right-hand-side solves
    std::int64_t delta_update_flops = 0; // sum of r^2 q over absorption updates
    std::int64_t function_evals = 0;     // K_fun
    std::int64_t jacobian_evals = 0;     // K_Jac
    std::int64_t samples = 0;            // K, parameter samples behind the basis

    // (K_fun + K_Jac) / (2 K); 0 when no samples were taken.
    double offline_online_ratio() const {
        return samples > 0 ? double(function_evals + jacobian_evals) / (2.0 * double(samples)) : 0.0;
    }
};

class CostCounters {
public:
    void add_large_solves(std::int64_t k) { large_solves_ += k; }
    void add_reduced_solves(std::int64_t k) { reduced_solves_ += k; }
    void add_delta_flops(std::int64_t k) { delta_flops_ += k; }
    void add_function_eval() { ++function_evals_; }
    void add_jacobian_eval() { ++jacobian_evals_; }
    void set_samples(std::int64_t k) { samples_ = k; }

    CostReport snapshot() const {
        CostReport r;
        r.large_solves = large_solves_.load();
        r.reduced_solves = reduced_solves_.load();
        r.delta_update_flops = delta_flops_.load();
        r.function_evals = function_evals_.load();
        r.jacobian_evals = jacobian_evals_.load();
        r.samples = samples_.load();
        return r;
    }

    void reset() {
        large_solves_ = 0;
        reduced_solves_ = 0;
        delta_flops_ = 0;
        function_evals_ = 0;
        jacobian_evals_ = 0;
        samples_ = 0;
    }

private:
    std::atomic<std::int64_t> large_solves_{0};
    std::atomic<std::int64_t> reduced_solves_{0};
    std::atomic<std::int64_t> delta_flops_{0};
    std::atomic<std::int64_t> function_evals_{0};
    std::atomic<std::int64_t> jacobian_evals_{0};
    std::atomic<std::int64_t> samples_{0};
};

}  // namespace dotrom
