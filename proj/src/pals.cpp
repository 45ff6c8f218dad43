#include "dotrom/pals.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dotrom/errors.hpp"

namespace dotrom {

namespace {

// Node box [ix0, ix1] x [iz0, iz1] covering the support of basis function j.
struct NodeBox {
    Index ix0 = 0, ix1 = -1, iz0 = 0, iz1 = -1;
};

NodeBox support_box(const DomainSpec& domain, const PalsParams& p, const PalsConfig& cfg, int j) {
    NodeBox box;
    const double g2 = cfg.gamma * cfg.gamma;
    if (g2 >= 1.0) return box;  // rho >= gamma >= 1 everywhere: empty support
    const double beta = std::abs(p.beta(j));
    const double h = domain.mesh_width();
    if (beta == 0.0) {
        box.ix1 = domain.nx - 1;
        box.iz1 = domain.nz - 1;
        return box;
    }
    const double radius = std::sqrt(1.0 - g2) / beta;
    const Eigen::Vector2d c = p.centre(j);
    auto lo = [&](double coord, double half, int count) {
        return std::clamp<Index>(Index(std::floor((coord - radius + half) / h)), 0, count - 1);
    };
    auto hi = [&](double coord, double half, int count) {
        return std::clamp<Index>(Index(std::ceil((coord + radius + half) / h)), 0, count - 1);
    };
    if (c.x() + radius < -domain.half_width || c.x() - radius > domain.half_width ||
        c.y() + radius < -domain.half_height || c.y() - radius > domain.half_height) {
        return box;
    }
    box.ix0 = lo(c.x(), domain.half_width, domain.nx);
    box.ix1 = hi(c.x(), domain.half_width, domain.nx);
    box.iz0 = lo(c.y(), domain.half_height, domain.nz);
    box.iz1 = hi(c.y(), domain.half_height, domain.nz);
    return box;
}

double smoothed_radius(const Eigen::Vector2d& d, double beta, double gamma) {
    return std::sqrt(beta * beta * d.squaredNorm() + gamma * gamma);
}

// phi at every node, accumulated basis function by basis function.
VecR level_set_on_grid(const PalsParams& p, const PalsConfig& cfg, const DiscreteOperators& ops) {
    const DomainSpec& domain = ops.domain;
    VecR phi = VecR::Zero(ops.n);
    for (int j = 0; j < p.m0(); ++j) {
        if (p.alpha(j) == 0.0) continue;
        const NodeBox box = support_box(domain, p, cfg, j);
        const Eigen::Vector2d c = p.centre(j);
        for (Index iz = box.iz0; iz <= box.iz1; ++iz) {
            for (Index ix = box.ix0; ix <= box.ix1; ++ix) {
                const Index node = iz * domain.nx + ix;
                const double rho = smoothed_radius(node_position(domain, node) - c, p.beta(j), cfg.gamma);
                if (rho < 1.0) phi[node] += p.alpha(j) * csrbf(rho);
            }
        }
    }
    return phi;
}

}  // namespace

void PalsConfig::validate() const {
    if (m0 < 1) throw ValidationError("pals.m0 must be >= 1");
    if (!(epsilon > 0.0)) throw ValidationError("pals.epsilon must be > 0");
    if (!(gamma > 0.0)) throw ValidationError("pals.gamma must be > 0");
    if (!(mu_in > 0.0)) throw ValidationError("pals.mu_in must be > 0");
    if (!(mu_out > 0.0)) throw ValidationError("pals.mu_out must be > 0");
    if (mu_in == mu_out) throw ValidationError("pals.mu_in must differ from pals.mu_out");
    if (!(sigma >= 0.0)) throw ValidationError("pals.sigma must be >= 0");
}

PalsParams::PalsParams(int m0, VecR values) : values_(std::move(values)), m0_(m0) {
    if (values_.size() != 4 * Index(m0)) {
        throw ValidationError("parameter vector length " + std::to_string(values_.size()) +
                              " does not equal 4 * m0 = " + std::to_string(4 * m0));
    }
}

double csrbf(double r) {
    if (r >= 1.0) return 0.0;
    const double t = 1.0 - r;
    return t * t * (2.0 * r + 1.0);
}

double csrbf_derivative(double r) {
    if (r >= 1.0) return 0.0;
    return -6.0 * r * (1.0 - r);
}

double heaviside(double r, double eps) {
    if (r <= -eps) return 0.0;
    if (r >= eps) return 1.0;
    const double s = r / eps;
    return 0.5 * (1.0 + s + std::sin(std::numbers::pi * s) / std::numbers::pi);
}

double heaviside_derivative(double r, double eps) {
    if (r <= -eps || r >= eps) return 0.0;
    return 0.5 * (1.0 + std::cos(std::numbers::pi * r / eps)) / eps;
}

double level_set(const Eigen::Vector2d& x, const PalsParams& p, const PalsConfig& cfg) {
    double phi = 0.0;
    for (int j = 0; j < p.m0(); ++j) {
        phi += p.alpha(j) * csrbf(smoothed_radius(x - p.centre(j), p.beta(j), cfg.gamma));
    }
    return phi;
}

VecR absorption_diagonal(const PalsParams& p, const PalsConfig& cfg, const DiscreteOperators& ops) {
    const double h2 = ops.mesh_width() * ops.mesh_width();
    const VecR phi = level_set_on_grid(p, cfg, ops);
    VecR a1 = VecR::Zero(ops.n);
    for (Index node = 0; node < ops.n; ++node) {
        if (!ops.absorbing[std::size_t(node)]) continue;
        const double hv = heaviside(phi[node] - cfg.level, cfg.epsilon);
        a1[node] = h2 * (cfg.mu_in * hv + cfg.mu_out * (1.0 - hv));
    }
    return a1;
}

std::vector<SparseDiagonal> absorption_derivatives(const PalsParams& p, const PalsConfig& cfg,
                                                   const DiscreteOperators& ops) {
    const DomainSpec& domain = ops.domain;
    const double h2 = ops.mesh_width() * ops.mesh_width();
    const int m0 = p.m0();
    const VecR phi = level_set_on_grid(p, cfg, ops);

    // dA1/dphi per node; zero outside the transition band.
    VecR scale = VecR::Zero(ops.n);
    for (Index node = 0; node < ops.n; ++node) {
        if (!ops.absorbing[std::size_t(node)]) continue;
        scale[node] = h2 * (cfg.mu_in - cfg.mu_out) * heaviside_derivative(phi[node] - cfg.level, cfg.epsilon);
    }

    std::vector<SparseDiagonal> out(std::size_t(4 * m0));
    for (int j = 0; j < m0; ++j) {
        const NodeBox box = support_box(domain, p, cfg, j);
        const Eigen::Vector2d c = p.centre(j);
        const double alpha = p.alpha(j);
        const double beta = p.beta(j);
        SparseDiagonal& d_alpha = out[std::size_t(PalsParams::alpha_index(m0, j))];
        SparseDiagonal& d_beta = out[std::size_t(PalsParams::beta_index(m0, j))];
        SparseDiagonal& d_cx = out[std::size_t(PalsParams::centre_index(m0, j, 0))];
        SparseDiagonal& d_cz = out[std::size_t(PalsParams::centre_index(m0, j, 1))];
        for (Index iz = box.iz0; iz <= box.iz1; ++iz) {
            for (Index ix = box.ix0; ix <= box.ix1; ++ix) {
                const Index node = iz * domain.nx + ix;
                const double s = scale[node];
                if (s == 0.0) continue;
                const Eigen::Vector2d d = node_position(domain, node) - c;
                const double rho = smoothed_radius(d, beta, cfg.gamma);
                if (rho >= 1.0) continue;
                const double dpsi = alpha * csrbf_derivative(rho) / rho;
                const double g_alpha = s * csrbf(rho);
                const double g_beta = s * dpsi * beta * d.squaredNorm();
                const double g_cx = -s * dpsi * beta * beta * d.x();
                const double g_cz = -s * dpsi * beta * beta * d.y();
                auto push = [node](SparseDiagonal& sd, double v) {
                    if (v == 0.0) return;
                    sd.index.push_back(node);
                    sd.value.push_back(v);
                };
                push(d_alpha, g_alpha);
                push(d_beta, g_beta);
                push(d_cx, g_cx);
                push(d_cz, g_cz);
            }
        }
    }
    return out;
}

VecR absorption_derivative(const PalsParams& p, const PalsConfig& cfg, const DiscreteOperators& ops, Index k) {
    if (k < 0 || k >= p.size()) throw ValidationError("parameter index out of range");
    const auto all = absorption_derivatives(p, cfg, ops);
    VecR out = VecR::Zero(ops.n);
    const SparseDiagonal& d = all[std::size_t(k)];
    for (std::size_t t = 0; t < d.size(); ++t) out[d.index[t]] = d.value[t];
    return out;
}

void AbsorptionDelta::apply_to(VecR& a1) const {
    for (std::size_t t = 0; t < index.size(); ++t) a1[index[t]] = new_value[t];
}

AbsorptionDelta absorption_delta(const VecR& a1_old, const VecR& a1_new, double threshold) {
    if (a1_old.size() != a1_new.size()) throw ValidationError("absorption delta: size mismatch");
    AbsorptionDelta out;
    for (Index i = 0; i < a1_old.size(); ++i) {
        const double diff = a1_new[i] - a1_old[i];
        if (std::abs(diff) > threshold) {
            out.index.push_back(i);
            out.delta.push_back(diff);
            out.new_value.push_back(a1_new[i]);
        }
    }
    return out;
}

AbsorptionDelta support_delta(const PalsParams& p_old, const PalsParams& p_new, const PalsConfig& cfg,
                              const DiscreteOperators& ops, double threshold) {
    return absorption_delta(absorption_diagonal(p_old, cfg, ops), absorption_diagonal(p_new, cfg, ops),
                            threshold);
}

PalsParams initial_guess(const DomainSpec& domain, int cols, int rows, double alpha0) {
    if (cols < 1 || rows < 1) throw ValidationError("pals.grid must be at least 1 x 1");
    PalsParams p(cols * rows);
    const double sx = 2.0 * domain.half_width / cols;
    const double sz = 2.0 * domain.half_height / rows;
    const double beta = 1.0 / (2.0 * std::max(sx, sz));
    for (int iz = 0; iz < rows; ++iz) {
        for (int ix = 0; ix < cols; ++ix) {
            const int j = iz * cols + ix;
            p.alpha(j) = ((ix + iz) % 2 == 0) ? alpha0 : -alpha0;
            p.beta(j) = beta;
            p.set_centre(j, {-domain.half_width + (ix + 0.5) * sx, -domain.half_height + (iz + 0.5) * sz});
        }
    }
    return p;
}

}  // namespace dotrom
