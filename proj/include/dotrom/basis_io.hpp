#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dotrom/mor.hpp"

namespace dotrom {

/**
 * Basis container, all integers and floats little-endian:
 *
 *   "DOTBASIS"            8 bytes
 *   version               u32 (= 1)
 *   n, r                  u64, u64
 *   n_src, n_det          u32, u32
 *   two_sided             u8
 *   tolerance             f64
 *   n_omega               u32, then n_omega f64 frequencies
 *   grid_hash             u64
 *   n_sigma               u32, then n_sigma f64 singular values
 *   V                     n * r f64, column-major
 *   W                     n * r f64, column-major (two-sided only)
 */
struct BasisHeader {
    std::uint32_t version = 1;
    std::uint64_t n = 0;
    std::uint64_t r = 0;
    std::uint32_t n_src = 0;
    std::uint32_t n_det = 0;
    bool two_sided = false;
    double tolerance = 0.0;
    std::vector<double> frequencies;
    std::uint64_t grid_hash = 0;
    std::vector<double> singular_values;
};

struct BasisFile {
    BasisHeader header;
    GlobalBasis basis;
};

void save_basis(const std::string& path, const GlobalBasis& basis, std::uint32_t n_src, std::uint32_t n_det,
                std::uint64_t grid_hash);

BasisHeader read_basis_header(const std::string& path);

/// Loads and checks the grid hash; a mismatch throws ValidationError.
BasisFile load_basis(const std::string& path, std::uint64_t expected_grid_hash);
/// Loads without the hash check (for inspection).
BasisFile load_basis_unchecked(const std::string& path);

}  // namespace dotrom
