#pragma once

#include <string>
#include <vector>

#include "dotrom/counters.hpp"
#include "dotrom/forward.hpp"
#include "dotrom/grid.hpp"
#include "dotrom/pals.hpp"
#include "dotrom/types.hpp"

namespace dotrom {

enum class ProjectionMode { OneSided, TwoSided };

ProjectionMode parse_projection_mode(const std::string& name);
std::string to_string(ProjectionMode mode);

/// Interpolation data at one parameter sample: V_i = [K(w_1)^-1 B, ...] and
/// W_i = [K(w_1)^-T C^T, ...], frequency blocks side by side.
struct LocalBasis {
    VecR sample;
    std::vector<double> frequencies;
    MatC v;  // n x (n_omega * n_src)
    MatC w;  // n x (n_omega * n_det)

    static LocalBasis from_solutions(const VecR& sample, const std::vector<double>& frequencies,
                                     const std::vector<StateSolutions>& per_frequency);
};

/// Solves n_omega (n_src + n_det) large systems at the sample.
LocalBasis build_local_basis(const DiscreteOperators& ops, const PalsConfig& cfg, const PalsParams& sample,
                             const std::vector<double>& frequencies, const SolverOptions& options = {},
                             CostCounters* counters = nullptr);

/// Orthonormal basis of a column set, truncated by relative singular value.
struct CompressedBasis {
    MatR basis;            // n x r
    VecR singular_values;  // all singular values, descending
};

/// Keeps left singular vectors with sigma > max(tau, m * eps) * sigma_max,
/// where m is the larger matrix dimension. tau = 0 therefore keeps the
/// numerical rank. Throws ValidationError for an all-zero input.
CompressedBasis compress(const MatR& columns, double tau);

/// Real columns spanning the same real space as a complex block: the real
/// parts, followed by the imaginary parts when `with_imag` is set.
MatR realify(const MatC& block, bool with_imag);

struct GlobalBasis {
    MatR v;  // n x r, orthonormal columns
    MatR w;  // equals v in one-sided mode
    ProjectionMode mode = ProjectionMode::OneSided;
    double tolerance = 1e-8;
    VecR singular_values;
    std::vector<double> frequencies;

    Index order() const { return v.cols(); }
    Index dimension() const { return v.rows(); }
};

/// Global basis from concatenated local bases. One-sided mode compresses
/// [V_1 .. V_K, W_1 .. W_K] into W = V; two-sided mode compresses the source
/// and detector blocks separately and keeps the smaller of the two ranks.
GlobalBasis build_global_basis(const std::vector<LocalBasis>& locals, double tau,
                               ProjectionMode mode = ProjectionMode::OneSided);

/**
 * Petrov-Galerkin reduced model with cached absorption projection.
 *
 * E_hat = W^T E V, A0_hat = W^T A0 V, B_hat = W^T B, C_hat = C V are formed
 * once; A1_hat = W^T diag(A1(p)) V is kept current through sparse updates
 * that touch only the rows where A1 changed.
 */
class RomModel {
public:
    RomModel(const DiscreteOperators& ops, GlobalBasis basis, const VecR& a1_initial,
             CostCounters* counters = nullptr);

    Index order() const { return basis_.order(); }
    const GlobalBasis& basis() const { return basis_; }
    const MatR& e_hat() const { return e_hat_; }
    const MatR& a0_hat() const { return a0_hat_; }
    const MatR& b_hat() const { return b_hat_; }
    const MatR& c_hat() const { return c_hat_; }
    const MatR& a1_hat() const { return a1_hat_; }
    const VecR& a1_current() const { return a1_; }

    /// A1_hat += W^T diag(delta) V using the q affected rows (r^2 q flops).
    void update_absorption(const AbsorptionDelta& delta);
    /// Moves the cache to a new absorption diagonal through update_absorption.
    void set_absorption(const VecR& a1_new);

    /// W^T diag(a1) V from scratch.
    MatR dense_projection(const VecR& a1) const;
    /// W^T diag(d) V for a sparse diagonal, gathered over its support.
    MatR projected_diagonal(const SparseDiagonal& d) const;

    /// Psi_hat(omega) = C_hat ((i omega / nu) E_hat + A0_hat + A1_hat)^-1 B_hat.
    MatC reduced_frequency_response(double omega) const;

    /// Columns d Psi_hat / dp_k, rows ordered i_src * n_det + i_det, from one
    /// factorization shared by the B_hat and C_hat^T solves.
    MatC reduced_jacobian(const std::vector<SparseDiagonal>& derivs, double omega) const;

    // Updates between dense refreshes of A1_hat.
    static constexpr int kRefreshInterval = 50;

private:
    MatC system_matrix(double omega) const;

    GlobalBasis basis_;
    double nu_ = 1.0;
    Index n_src_ = 0;
    Index n_det_ = 0;
    MatR e_hat_, a0_hat_, b_hat_, c_hat_, a1_hat_;
    VecR a1_;
    int updates_since_refresh_ = 0;
    CostCounters* counters_ = nullptr;
};

}  // namespace dotrom
