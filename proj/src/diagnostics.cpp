#include "dotrom/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>

#include <Eigen/SVD>

#include "dotrom/errors.hpp"
#include "dotrom/forward.hpp"

namespace dotrom {

namespace {

void require_orthonormal(const MatR& v, const char* name) {
    const MatR gram = v.transpose() * v;
    const double err = (gram - MatR::Identity(v.cols(), v.cols())).cwiseAbs().maxCoeff();
    if (!(err <= 1e-10)) {
        std::ostringstream msg;
        msg << "subspace_gap: " << name << " columns are not orthonormal (deviation " << err << ")";
        throw ValidationError(msg.str());
    }
}

double spectral_norm(const MatC& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<MatC> svd(m);
    return svd.singularValues()[0];
}

std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = 0.5 * double(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) r[order[t]] = avg;
        i = j + 1;
    }
    return r;
}

}  // namespace

double subspace_gap(const MatR& va, const MatR& vb) {
    if (va.rows() != vb.rows() || va.cols() == 0 || vb.cols() == 0) {
        throw ValidationError("subspace_gap: bases must be non-empty with equal row counts");
    }
    require_orthonormal(va, "first basis");
    require_orthonormal(vb, "second basis");
    if (va.cols() == vb.cols() && va == vb) return 0.0;
    if (va.cols() > vb.cols()) return 1.0;
    Eigen::JacobiSVD<MatR> svd(va.transpose() * vb);
    const double smin = std::min(1.0, svd.singularValues().minCoeff());
    return std::sqrt(std::max(0.0, 1.0 - smin * smin));
}

std::vector<double> default_hinf_grid(const std::vector<double>& freqs) {
    double lo = 0.0, hi = 0.0;
    for (double w : freqs) {
        const double a = std::abs(w);
        if (a == 0.0) continue;
        lo = (lo == 0.0) ? a : std::min(lo, a);
        hi = std::max(hi, a);
    }
    std::vector<double> grid{0.0};
    if (hi == 0.0) return grid;
    const int count = 101;
    const double l0 = std::log10(lo), l1 = std::log10(hi);
    for (int i = 0; i < count; ++i) {
        grid.push_back(std::pow(10.0, l0 + (l1 - l0) * double(i) / double(count - 1)));
    }
    return grid;
}

double hinf_on_grid(const RomModel& model, const std::vector<double>& grid) {
    double best = 0.0;
    for (double omega : grid) {
        try {
            best = std::max(best, spectral_norm(model.reduced_frequency_response(omega)));
        } catch (const SolverError& e) {
            std::cerr << "warning: H-infinity grid point omega = " << omega << " skipped: " << e.what() << "\n";
        }
    }
    return best;
}

namespace {

// Orthonormal real basis of the span of per-frequency source solutions.
MatR span_of(const std::vector<MatC>& states, bool complex_freqs) {
    Index cols = 0;
    for (const MatC& x : states) cols += complex_freqs ? 2 * x.cols() : x.cols();
    MatR all(states.front().rows(), cols);
    Index off = 0;
    for (const MatC& x : states) {
        const MatR b = realify(x, complex_freqs);
        all.middleCols(off, b.cols()) = b;
        off += b.cols();
    }
    return compress(all, 0.0).basis;
}

bool has_nonzero(const std::vector<double>& freqs) {
    return std::any_of(freqs.begin(), freqs.end(), [](double w) { return w != 0.0; });
}

}  // namespace

MatR source_space(const DiscreteOperators& ops, const VecR& a1, const std::vector<double>& freqs,
                  const SolverOptions& options, CostCounters* counters) {
    std::vector<MatC> states;
    for (double omega : freqs) states.push_back(source_solutions(ops, a1, omega, options, counters));
    return span_of(states, has_nonzero(freqs));
}

double interpolation_error_ratio(const MatC& psi_full, const RomModel& model_j, const RomModel& model_k,
                                 double omega, const std::vector<double>& grid) {
    const double err = spectral_norm(psi_full - model_j.reduced_frequency_response(omega));
    const double scale = 0.5 * (hinf_on_grid(model_k, grid) + hinf_on_grid(model_j, grid));
    if (err == 0.0) return 0.0;
    if (!(scale > 0.0)) throw SolverError("interpolation_error_ratio: reduced models have zero norm");
    return err / scale;
}

DiagnosticSeries gap_error_series(const DiscreteOperators& ops, const PalsConfig& cfg,
                                  const std::vector<double>& freqs, const std::vector<VecR>& iterates,
                                  const SolverOptions& options, CostCounters* counters) {
    DiagnosticSeries series;
    if (iterates.empty()) return series;
    const int m0 = cfg.m0;
    const std::vector<double> grid = default_hinf_grid(freqs);
    const bool complex_freqs = has_nonzero(freqs);

    GlobalBasis first;
    std::optional<RomModel> model_j;

    for (std::size_t k = 0; k < iterates.size(); ++k) {
        const VecR a1 = absorption_diagonal(PalsParams(m0, iterates[k]), cfg, ops);
        std::vector<MatC> states;
        for (double omega : freqs) states.push_back(source_solutions(ops, a1, omega, options, counters));
        GlobalBasis current;
        current.v = span_of(states, complex_freqs);
        current.w = current.v;
        current.frequencies = freqs;
        if (k == 0) {
            first = current;
            model_j.emplace(ops, first, a1, counters);
        }
        RomModel model_k(ops, current, a1, counters);
        model_j->set_absorption(a1);

        double ratio = 0.0;
        for (std::size_t j = 0; j < freqs.size(); ++j) {
            const MatC psi = ops.c.cast<Complex>() * states[j];
            ratio = std::max(ratio, interpolation_error_ratio(psi, *model_j, model_k, freqs[j], grid));
        }
        series.iteration.push_back(int(k) + 1);
        series.gap.push_back(subspace_gap(first.v, current.v));
        series.error_ratio.push_back(ratio);
    }
    return series;
}

double spearman_correlation(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ValidationError("spearman_correlation: series lengths differ");
    if (a.size() < 2) return 0.0;
    const std::vector<double> ra = ranks(a), rb = ranks(b);
    const double n = double(a.size());
    const double mean = 0.5 * (n + 1.0);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - mean) * (rb[i] - mean);
        saa += (ra[i] - mean) * (ra[i] - mean);
        sbb += (rb[i] - mean) * (rb[i] - mean);
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

void write_series_csv(const std::string& path, const DiagnosticSeries& series) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "iteration,gap,error_ratio\n" << std::setprecision(17);
    for (std::size_t i = 0; i < series.gap.size(); ++i) {
        out << series.iteration[i] << ',' << series.gap[i] << ',' << series.error_ratio[i] << '\n';
    }
    if (!out) throw IoError("failed writing '" + path + "'");
}

DiagnosticSeries read_series_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open series file '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line.rfind("iteration,gap,error_ratio", 0) != 0) {
        throw IoError("series file '" + path + "': missing header");
    }
    DiagnosticSeries s;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string a, b, c;
        if (!std::getline(row, a, ',') || !std::getline(row, b, ',') || !std::getline(row, c)) {
            throw IoError("series file '" + path + "': malformed row '" + line + "'");
        }
        try {
            s.iteration.push_back(std::stoi(a));
            s.gap.push_back(std::stod(b));
            s.error_ratio.push_back(std::stod(c));
        } catch (const std::exception&) {
            throw IoError("series file '" + path + "': malformed row '" + line + "'");
        }
    }
    return s;
}

}  // namespace dotrom
