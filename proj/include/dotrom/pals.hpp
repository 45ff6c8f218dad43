#pragma once

#include <vector>

#include "dotrom/grid.hpp"
#include "dotrom/types.hpp"

namespace dotrom {

/// Parametric level-set image model.
///
/// The absorption field is mu_in H_eps(phi - c) + mu_out (1 - H_eps(phi - c)),
/// where phi(x) = sum_j alpha_j csrbf(|| beta_j (x - chi_j) ||_gamma) and
/// ||v||_gamma = sqrt(|v|^2 + gamma^2).
struct PalsConfig {
    int m0 = 15;
    double epsilon = 0.1;   // Heaviside transition half-width
    double gamma = 1e-3;    // smoothing constant of the norm
    double level = 0.1;     // c
    double mu_in = 0.2;
    double mu_out = 0.05;
    double sigma = 0.05;    // intra-anomaly variation, used by phantom generation only

    Index num_params() const { return 4 * Index(m0); }
    void validate() const;
};

/**
 * Flat parameter vector of length 4 m0, ordered
 *   [alpha_1 .. alpha_m0, beta_1 .. beta_m0, chi_1x, chi_1z, chi_2x, chi_2z, ...].
 * This order is also the on-disk order in reports and sample files.
 */
class PalsParams {
public:
    PalsParams() = default;
    explicit PalsParams(int m0) : values_(VecR::Zero(4 * Index(m0))), m0_(m0) {}
    PalsParams(int m0, VecR values);

    int m0() const { return m0_; }
    Index size() const { return values_.size(); }
    const VecR& values() const { return values_; }
    VecR& values() { return values_; }

    double alpha(int j) const { return values_[j]; }
    double beta(int j) const { return values_[m0_ + j]; }
    Eigen::Vector2d centre(int j) const {
        return {values_[2 * m0_ + 2 * j], values_[2 * m0_ + 2 * j + 1]};
    }
    double& alpha(int j) { return values_[j]; }
    double& beta(int j) { return values_[m0_ + j]; }
    void set_centre(int j, const Eigen::Vector2d& c) {
        values_[2 * m0_ + 2 * j] = c.x();
        values_[2 * m0_ + 2 * j + 1] = c.y();
    }

    static Index alpha_index(int /*m0*/, int j) { return j; }
    static Index beta_index(int m0, int j) { return m0 + j; }
    static Index centre_index(int m0, int j, int axis) { return 2 * Index(m0) + 2 * j + axis; }

    bool all_finite() const { return values_.allFinite(); }

private:
    VecR values_;
    int m0_ = 0;
};

/// Wendland-type compactly supported RBF (max(0, 1 - r))^2 (2 r + 1).
double csrbf(double r);
double csrbf_derivative(double r);

/// C1 approximate Heaviside with transition on (-eps, eps).
double heaviside(double r, double eps);
double heaviside_derivative(double r, double eps);

double level_set(const Eigen::Vector2d& x, const PalsParams& p, const PalsConfig& cfg);

/// Diagonal of A1(p): h^2 mu(x, p) at absorbing nodes, 0 on constraint rows.
VecR absorption_diagonal(const PalsParams& p, const PalsConfig& cfg, const DiscreteOperators& ops);

/// dA1/dp_k for a single parameter, as a dense n-vector.
VecR absorption_derivative(const PalsParams& p, const PalsConfig& cfg, const DiscreteOperators& ops,
                           Index k);

/// dA1/dp_k for every k at once, stored by support.
std::vector<SparseDiagonal> absorption_derivatives(const PalsParams& p, const PalsConfig& cfg,
                                                   const DiscreteOperators& ops);

/// Change of A1 between two parameter vectors, restricted to entries that
/// move by more than `threshold`.
struct AbsorptionDelta {
    std::vector<Index> index;
    std::vector<double> delta;       // new - old
    std::vector<double> new_value;   // A1(p_new) at index

    std::size_t size() const { return index.size(); }
    bool empty() const { return index.empty(); }
    // Writes the new values into a dense diagonal that holds A1(p_old).
    void apply_to(VecR& a1) const;
};

AbsorptionDelta absorption_delta(const VecR& a1_old, const VecR& a1_new, double threshold = 1e-14);
AbsorptionDelta support_delta(const PalsParams& p_old, const PalsParams& p_new, const PalsConfig& cfg,
                              const DiscreteOperators& ops, double threshold = 1e-14);

/**
 * Starting configuration: m0 = cols * rows basis functions on a uniform grid of
 * cell centres covering the domain, alternating-sign coefficients of
 * magnitude alpha0, and dilation 1 / (2 * grid spacing).
 */
PalsParams initial_guess(const DomainSpec& domain, int cols, int rows, double alpha0);

}  // namespace dotrom
