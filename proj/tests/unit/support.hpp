#pragma once

#include <algorithm>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "dotrom/grid.hpp"
#include "dotrom/pals.hpp"

namespace dotrom::test {

inline DomainSpec square_domain(int nodes, double half = 2.5) {
    DomainSpec d;
    d.half_width = half;
    d.half_height = half;
    d.nx = nodes;
    d.nz = nodes;
    return d;
}

inline DiscreteOperators small_ops(int nodes, int n_src, int n_det, int footprint = 0) {
    const DomainSpec d = square_domain(nodes);
    return assemble(d, uniform_layout(d, n_src, n_det, footprint));
}

inline double rel_diff(const auto& a, const auto& b) { return (a - b).norm() / b.norm(); }

// Positive bumps on a cols x rows grid whose transition band crosses nodes
// of every small grid used here.
inline PalsParams blob_params(const DomainSpec& d, int cols = 2, int rows = 2) {
    PalsParams p = initial_guess(d, cols, rows, 1.0);
    for (int j = 0; j < p.m0(); ++j) {
        p.alpha(j) = 1.0;
        p.beta(j) = 0.6 * std::max(cols, rows) / 2.0;
    }
    return p;
}

inline PalsParams jitter(const PalsParams& p, double scale, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, scale);
    PalsParams q = p;
    for (Index k = 0; k < q.size(); ++k) q.values()[k] += g(rng);
    return q;
}

// Fresh directory under the system temp path, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() / ("dotrom_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string str() const { return path_.string(); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

}  // namespace dotrom::test
