#include "dotrom/mor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/LU>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "dotrom/errors.hpp"

namespace dotrom {

namespace {

bool any_nonzero(const std::vector<double>& freqs) {
    return std::any_of(freqs.begin(), freqs.end(), [](double w) { return w != 0.0; });
}

// LU of the reduced system, real when omega = 0.
class ReducedFactorization {
public:
    ReducedFactorization(const MatC& m, bool real) : real_(real) {
        double rcond = 0.0;
        if (real_) {
            lu_real_.compute(m.real());
            rcond = lu_real_.rcond();
        } else {
            lu_complex_.compute(m);
            rcond = lu_complex_.rcond();
        }
        if (!(rcond > 1e3 * std::numeric_limits<double>::epsilon())) {
            throw SolverError("reduced system matrix is singular to working precision (rcond " +
                              std::to_string(rcond) + ")");
        }
    }

    MatC solve(const MatC& rhs) const {
        if (!real_) return lu_complex_.solve(rhs);
        const MatR re = lu_real_.solve(rhs.real().eval());
        const MatR im = lu_real_.solve(rhs.imag().eval());
        return combine(re, im);
    }

    MatC solve_transpose(const MatC& rhs) const {
        if (!real_) return lu_complex_.transpose().solve(rhs);
        const MatR re = lu_real_.transpose().solve(rhs.real().eval());
        const MatR im = lu_real_.transpose().solve(rhs.imag().eval());
        return combine(re, im);
    }

private:
    static MatC combine(const MatR& re, const MatR& im) {
        MatC out(re.rows(), re.cols());
        out.real() = re;
        out.imag() = im;
        return out;
    }

    bool real_;
    Eigen::PartialPivLU<MatR> lu_real_;
    Eigen::PartialPivLU<MatC> lu_complex_;
};

}  // namespace

ProjectionMode parse_projection_mode(const std::string& name) {
    if (name == "one-sided") return ProjectionMode::OneSided;
    if (name == "two-sided") return ProjectionMode::TwoSided;
    throw ValidationError("rom.projection: unknown mode '" + name + "'");
}

std::string to_string(ProjectionMode mode) {
    return mode == ProjectionMode::OneSided ? "one-sided" : "two-sided";
}

LocalBasis LocalBasis::from_solutions(const VecR& sample, const std::vector<double>& frequencies,
                                      const std::vector<StateSolutions>& per_frequency) {
    if (per_frequency.size() != frequencies.size() || frequencies.empty()) {
        throw ValidationError("local basis: one solution set per frequency required");
    }
    LocalBasis lb;
    lb.sample = sample;
    lb.frequencies = frequencies;
    const Index n = per_frequency.front().x.rows();
    const Index n_src = per_frequency.front().x.cols();
    const Index n_det = per_frequency.front().z.cols();
    const Index nw = Index(frequencies.size());
    lb.v.resize(n, nw * n_src);
    lb.w.resize(n, nw * n_det);
    for (Index j = 0; j < nw; ++j) {
        const StateSolutions& s = per_frequency[std::size_t(j)];
        if (s.x.rows() != n || s.x.cols() != n_src || s.z.rows() != n || s.z.cols() != n_det) {
            throw ValidationError("local basis: inconsistent solution block sizes");
        }
        lb.v.middleCols(j * n_src, n_src) = s.x;
        lb.w.middleCols(j * n_det, n_det) = s.z;
    }
    return lb;
}

LocalBasis build_local_basis(const DiscreteOperators& ops, const PalsConfig& cfg, const PalsParams& sample,
                             const std::vector<double>& frequencies, const SolverOptions& options,
                             CostCounters* counters) {
    const VecR a1 = absorption_diagonal(sample, cfg, ops);
    std::vector<StateSolutions> sols;
    for (double omega : frequencies) {
        try {
            StateSolutions s;
            s.x = source_solutions(ops, a1, omega, options, counters);
            s.z = adjoint_solutions(ops, a1, omega, options, counters);
            sols.push_back(std::move(s));
        } catch (const SolverError& e) {
            throw SolverError("local basis at omega = " + std::to_string(omega) + ": " + e.what());
        }
    }
    return LocalBasis::from_solutions(sample.values(), frequencies, sols);
}

MatR realify(const MatC& block, bool with_imag) {
    if (!with_imag) return block.real();
    MatR out(block.rows(), 2 * block.cols());
    out.leftCols(block.cols()) = block.real();
    out.rightCols(block.cols()) = block.imag();
    return out;
}

CompressedBasis compress(const MatR& columns, double tau) {
    if (columns.cols() == 0 || columns.rows() == 0) throw ValidationError("compress: no columns");
    if (!(tau >= 0.0)) throw ValidationError("compress: tolerance must be >= 0");
    const Index m = columns.rows();
    const Index k = columns.cols();

    MatR left;  // left singular vectors
    VecR sigma;
    if (k <= m) {
        // Thin QR first; the SVD then only sees the k x k triangle.
        Eigen::HouseholderQR<MatR> qr(columns);
        const MatR r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
        Eigen::JacobiSVD<MatR> svd(r, Eigen::ComputeFullU);
        sigma = svd.singularValues();
        left = qr.householderQ() * MatR::Identity(m, k);
        left = left * svd.matrixU();
    } else {
        Eigen::JacobiSVD<MatR> svd(columns, Eigen::ComputeThinU);
        sigma = svd.singularValues();
        left = svd.matrixU();
    }
    const double smax = sigma.size() > 0 ? sigma[0] : 0.0;
    if (!(smax > 0.0)) throw ValidationError("compress: all columns are numerically zero (rank 0)");
    const double floor = double(std::max(m, k)) * std::numeric_limits<double>::epsilon();
    const double cut = std::max(tau, floor) * smax;
    Index r = 0;
    while (r < sigma.size() && sigma[r] > cut) ++r;
    return {left.leftCols(r), sigma};
}

GlobalBasis build_global_basis(const std::vector<LocalBasis>& locals, double tau, ProjectionMode mode) {
    if (locals.empty()) throw ValidationError("global basis: no local bases");
    const bool complex_freqs = any_nonzero(locals.front().frequencies);
    const Index n = locals.front().v.rows();
    Index vcols = 0, wcols = 0;
    for (const LocalBasis& lb : locals) {
        if (lb.v.rows() != n || lb.w.rows() != n) throw ValidationError("global basis: dimension mismatch");
        vcols += lb.v.cols();
        wcols += lb.w.cols();
    }
    const Index factor = complex_freqs ? 2 : 1;
    MatR vt(n, factor * vcols);
    MatR wt(n, factor * wcols);
    Index vo = 0, wo = 0;
    for (const LocalBasis& lb : locals) {
        const MatR rv = realify(lb.v, complex_freqs);
        const MatR rw = realify(lb.w, complex_freqs);
        vt.middleCols(vo, rv.cols()) = rv;
        wt.middleCols(wo, rw.cols()) = rw;
        vo += rv.cols();
        wo += rw.cols();
    }

    GlobalBasis gb;
    gb.mode = mode;
    gb.tolerance = tau;
    gb.frequencies = locals.front().frequencies;
    if (mode == ProjectionMode::OneSided) {
        MatR all(n, vt.cols() + wt.cols());
        all << vt, wt;
        CompressedBasis cb = compress(all, tau);
        gb.v = std::move(cb.basis);
        gb.w = gb.v;
        gb.singular_values = std::move(cb.singular_values);
    } else {
        CompressedBasis cv = compress(vt, tau);
        CompressedBasis cw = compress(wt, tau);
        const Index r = std::min(cv.basis.cols(), cw.basis.cols());
        gb.v = cv.basis.leftCols(r);
        gb.w = cw.basis.leftCols(r);
        gb.singular_values = std::move(cv.singular_values);
    }
    return gb;
}

RomModel::RomModel(const DiscreteOperators& ops, GlobalBasis basis, const VecR& a1_initial,
                   CostCounters* counters)
    : basis_(std::move(basis)), nu_(ops.nu()), n_src_(ops.num_sources()), n_det_(ops.num_detectors()),
      counters_(counters) {
    const MatR& v = basis_.v;
    const MatR& w = basis_.w;
    if (v.rows() != ops.n || w.rows() != ops.n || v.cols() != w.cols() || v.cols() == 0) {
        throw ValidationError("reduced model: basis dimensions do not match the operators");
    }
    if (a1_initial.size() != ops.n) throw ValidationError("reduced model: absorption diagonal size mismatch");
    e_hat_ = w.transpose() * ops.e_diag.asDiagonal() * v;
    a0_hat_ = w.transpose() * (ops.a0 * v);
    b_hat_ = w.transpose() * ops.b;
    c_hat_ = ops.c * v;
    a1_ = a1_initial;
    a1_hat_ = dense_projection(a1_);
}

MatR RomModel::dense_projection(const VecR& a1) const {
    SparseDiagonal d;
    for (Index i = 0; i < a1.size(); ++i) {
        if (a1[i] != 0.0) {
            d.index.push_back(i);
            d.value.push_back(a1[i]);
        }
    }
    return projected_diagonal(d);
}

MatR RomModel::projected_diagonal(const SparseDiagonal& d) const {
    const Index r = order();
    if (d.empty()) return MatR::Zero(r, r);
    const Index q = Index(d.size());
    MatR wq(q, r), vq(q, r);
    for (Index t = 0; t < q; ++t) {
        const Index node = d.index[std::size_t(t)];
        wq.row(t) = basis_.w.row(node);
        vq.row(t) = d.value[std::size_t(t)] * basis_.v.row(node);
    }
    return wq.transpose() * vq;
}

void RomModel::update_absorption(const AbsorptionDelta& delta) {
    if (delta.empty()) return;
    const Index r = order();
    const Index q = Index(delta.size());
    for (Index i : delta.index) {
        if (i < 0 || i >= a1_.size()) throw ValidationError("absorption update index out of range");
    }
    delta.apply_to(a1_);
    if (++updates_since_refresh_ >= kRefreshInterval) {
        a1_hat_ = dense_projection(a1_);
        updates_since_refresh_ = 0;
    } else {
        SparseDiagonal d{delta.index, delta.delta};
        a1_hat_ += projected_diagonal(d);
    }
    if (counters_) counters_->add_delta_flops(r * r * q);
}

void RomModel::set_absorption(const VecR& a1_new) { update_absorption(absorption_delta(a1_, a1_new)); }

MatC RomModel::system_matrix(double omega) const {
    MatC m = (a0_hat_ + a1_hat_).cast<Complex>();
    if (omega != 0.0) m += Complex(0.0, omega / nu_) * e_hat_.cast<Complex>();
    return m;
}

MatC RomModel::reduced_frequency_response(double omega) const {
    const ReducedFactorization lu(system_matrix(omega), omega == 0.0);
    const MatC x = lu.solve(b_hat_.cast<Complex>());
    if (counters_) counters_->add_reduced_solves(n_src_);
    return c_hat_.cast<Complex>() * x;
}

MatC RomModel::reduced_jacobian(const std::vector<SparseDiagonal>& derivs, double omega) const {
    const ReducedFactorization lu(system_matrix(omega), omega == 0.0);
    const MatC xh = lu.solve(b_hat_.cast<Complex>());                        // r x n_src
    const MatC zh = lu.solve_transpose(c_hat_.transpose().cast<Complex>());  // r x n_det
    if (counters_) counters_->add_reduced_solves(n_src_ + n_det_);
    const MatC zt = zh.transpose();
    MatC jac = MatC::Zero(n_src_ * n_det_, Index(derivs.size()));
    for (std::size_t k = 0; k < derivs.size(); ++k) {
        if (derivs[k].empty()) continue;
        const MatR dak = projected_diagonal(derivs[k]);
        const MatC block = -(zt * (dak.cast<Complex>() * xh));  // n_det x n_src
        jac.col(Index(k)) = block.reshaped();
    }
    return jac;
}

}  // namespace dotrom
