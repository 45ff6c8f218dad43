#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "dotrom/types.hpp"

namespace dotrom {

/**
 * Rectangular 2D slab [-a1, a1] x [-a3, a3] sampled on an nx-by-nz node grid.
 *
 * Node (ix, iz) has index iz * nx + ix. Row iz = 0 is the bottom surface
 * (x3 = -a3) and row iz = nz - 1 the top surface (x3 = +a3). Cells must be
 * square: 2 a1 / (nx - 1) == 2 a3 / (nz - 1).
 */
struct DomainSpec {
    double half_width = 2.5;    // a1 [cm]
    double half_height = 2.5;   // a3 [cm]
    int nx = 50;
    int nz = 50;
    double speed_of_light = 1.0;
    double robin_constant = 1.0;
    // Either one constant value or nx * nz per-node values.
    std::vector<double> diffusion{0.03};

    Index num_nodes() const { return Index(nx) * nz; }
    double mesh_width() const { return 2.0 * half_width / (nx - 1); }
    double diffusion_at(Index node) const {
        return diffusion.size() == 1 ? diffusion.front() : diffusion[std::size_t(node)];
    }

    // Throws ValidationError naming the offending field.
    void validate() const;
};

enum class NodeKind : std::uint8_t { Interior, Lateral, Top, Bottom, Corner };

NodeKind node_kind(const DomainSpec& domain, Index node);
// Physical (x1, x3) coordinates of a node.
Eigen::Vector2d node_position(const DomainSpec& domain, Index node);

struct SourceDetectorLayout {
    std::vector<Index> sources;     // node indices on the top row
    std::vector<Index> detectors;   // node indices on the top and bottom rows
    int footprint_half_width = 0;   // in nodes along the surface

    Index num_sources() const { return Index(sources.size()); }
    Index num_detectors() const { return Index(detectors.size()); }

    void validate(const DomainSpec& domain) const;
};

/// Sources evenly spaced on the top surface; detectors split between the
/// top and bottom surfaces (top gets the extra one when n_det is odd).
SourceDetectorLayout uniform_layout(const DomainSpec& domain, int n_sources,
                                    int n_detectors, int footprint_half_width = 0);

/**
 * Discrete operators of the DAE (1/nu) E y' = -(A0 + A1(p)) y + B u,
 * m = C y. All rows carry the h^2 scaling; Robin rows are scaled by
 * h / (2 A) so that A0 is symmetric.
 */
struct DiscreteOperators {
    DomainSpec domain;
    SourceDetectorLayout layout;
    Index n = 0;
    VecR e_diag;          // E
    SparseR a0;           // A0, symmetric
    MatR b;               // n x n_src
    MatR c;               // n_det x n
    // 1 at nodes whose absorption enters A1 (interior nodes), 0 elsewhere.
    std::vector<std::uint8_t> absorbing;

    double mesh_width() const { return domain.mesh_width(); }
    double nu() const { return domain.speed_of_light; }
    Index num_sources() const { return b.cols(); }
    Index num_detectors() const { return c.rows(); }
};

DiscreteOperators assemble(const DomainSpec& domain, const SourceDetectorLayout& layout);

/// Stable 64-bit fingerprint of mesh geometry, physics constants and layout.
std::uint64_t grid_hash(const DomainSpec& domain, const SourceDetectorLayout& layout);

/// Coordinate-list dump, one "row col value" triple per line.
void dump_coordinate_list(std::ostream& out, const SparseR& matrix);
void dump_coordinate_list(std::ostream& out, const MatR& matrix);

}  // namespace dotrom
