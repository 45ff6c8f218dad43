#include "dotrom/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <ostream>
#include <set>
#include <string>

#include "dotrom/errors.hpp"

namespace dotrom {

namespace {

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

void check_surface_node(const DomainSpec& domain, Index node, int half_width,
                        bool allow_bottom, const std::string& what) {
    if (node < 0 || node >= domain.num_nodes()) {
        throw ValidationError(what + ": node index " + std::to_string(node) + " out of range");
    }
    const NodeKind kind = node_kind(domain, node);
    if (kind != NodeKind::Top && !(allow_bottom && kind == NodeKind::Bottom)) {
        throw ValidationError(what + ": node index " + std::to_string(node) +
                              " is not on an allowed surface row");
    }
    const Index ix = node % domain.nx;
    if (ix - half_width < 1 || ix + half_width > domain.nx - 2) {
        throw ValidationError(what + ": footprint of node " + std::to_string(node) +
                              " reaches a lateral (Dirichlet) column");
    }
}

// Evenly spaced columns in [1, nx - 2].
std::vector<Index> spread_columns(int nx, int count) {
    std::vector<Index> cols;
    const double usable = nx - 2;
    for (int k = 0; k < count; ++k) {
        cols.push_back(1 + Index(std::floor((k + 0.5) * usable / count)));
    }
    return cols;
}

struct Fnv1a {
    std::uint64_t state = 14695981039346656037ull;
    void bytes(const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            state ^= p[i];
            state *= 1099511628211ull;
        }
    }
    void u64(std::uint64_t v) {
        unsigned char buf[8];
        for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(v >> (8 * i));
        bytes(buf, 8);
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
};

}  // namespace

void DomainSpec::validate() const {
    if (nx < 3) throw ValidationError("domain.nx must be >= 3");
    if (nz < 3) throw ValidationError("domain.nz must be >= 3");
    if (!positive_finite(half_width)) throw ValidationError("domain.half_width must be > 0");
    if (!positive_finite(half_height)) throw ValidationError("domain.half_height must be > 0");
    if (!positive_finite(speed_of_light)) throw ValidationError("domain.speed_of_light must be > 0");
    if (!positive_finite(robin_constant)) throw ValidationError("domain.robin_constant must be > 0");
    const double hx = 2.0 * half_width / (nx - 1);
    const double hz = 2.0 * half_height / (nz - 1);
    if (std::abs(hx - hz) > 1e-12 * std::max(hx, hz)) {
        throw ValidationError("domain.nz: cells are not square (h_x = " + std::to_string(hx) +
                              ", h_z = " + std::to_string(hz) + ")");
    }
    if (diffusion.size() != 1 && diffusion.size() != std::size_t(num_nodes())) {
        throw ValidationError("domain.diffusion must hold 1 or nx*nz values");
    }
    for (double d : diffusion) {
        if (!positive_finite(d)) throw ValidationError("domain.diffusion must be > 0");
    }
}

NodeKind node_kind(const DomainSpec& domain, Index node) {
    const Index ix = node % domain.nx;
    const Index iz = node / domain.nx;
    const bool lateral = ix == 0 || ix == domain.nx - 1;
    const bool top = iz == domain.nz - 1;
    const bool bottom = iz == 0;
    if ((top || bottom) && lateral) return NodeKind::Corner;
    if (top) return NodeKind::Top;
    if (bottom) return NodeKind::Bottom;
    if (lateral) return NodeKind::Lateral;
    return NodeKind::Interior;
}

Eigen::Vector2d node_position(const DomainSpec& domain, Index node) {
    const double h = domain.mesh_width();
    const Index ix = node % domain.nx;
    const Index iz = node / domain.nx;
    return {-domain.half_width + double(ix) * h, -domain.half_height + double(iz) * h};
}

void SourceDetectorLayout::validate(const DomainSpec& domain) const {
    if (sources.empty()) throw ValidationError("layout: at least one source required");
    if (detectors.empty()) throw ValidationError("layout: at least one detector required");
    if (footprint_half_width < 0) throw ValidationError("layout.footprint_half_width must be >= 0");
    for (Index s : sources) check_surface_node(domain, s, footprint_half_width, false, "layout.sources");
    for (Index d : detectors) check_surface_node(domain, d, footprint_half_width, true, "layout.detectors");
    if (std::set<Index>(sources.begin(), sources.end()).size() != sources.size()) {
        throw ValidationError("layout.sources: indices must be pairwise distinct");
    }
    if (std::set<Index>(detectors.begin(), detectors.end()).size() != detectors.size()) {
        throw ValidationError("layout.detectors: indices must be pairwise distinct");
    }
}

SourceDetectorLayout uniform_layout(const DomainSpec& domain, int n_sources, int n_detectors,
                                    int footprint_half_width) {
    if (n_sources < 1 || n_sources > domain.nx - 2) {
        throw ValidationError("layout.n_sources must lie in [1, nx - 2]");
    }
    const int n_top = (n_detectors + 1) / 2;
    const int n_bottom = n_detectors / 2;
    if (n_detectors < 1 || n_top > domain.nx - 2) {
        throw ValidationError("layout.n_detectors must lie in [1, 2 (nx - 2)]");
    }
    SourceDetectorLayout layout;
    layout.footprint_half_width = footprint_half_width;
    const Index top_row = Index(domain.nz - 1) * domain.nx;
    for (Index ix : spread_columns(domain.nx, n_sources)) layout.sources.push_back(top_row + ix);
    for (Index ix : spread_columns(domain.nx, n_top)) layout.detectors.push_back(top_row + ix);
    for (Index ix : spread_columns(domain.nx, n_bottom)) layout.detectors.push_back(ix);
    layout.validate(domain);
    return layout;
}

DiscreteOperators assemble(const DomainSpec& domain, const SourceDetectorLayout& layout) {
    domain.validate();
    layout.validate(domain);

    DiscreteOperators ops;
    ops.domain = domain;
    ops.layout = layout;
    const Index nx = domain.nx;
    const Index n = domain.num_nodes();
    const double h = domain.mesh_width();
    ops.n = n;
    ops.e_diag = VecR::Constant(n, h * h);
    ops.absorbing.assign(std::size_t(n), 0);

    auto face = [&](Index a, Index b) { return 0.5 * (domain.diffusion_at(a) + domain.diffusion_at(b)); };
    auto is_dirichlet = [&](Index node) {
        const NodeKind k = node_kind(domain, node);
        return k == NodeKind::Lateral || k == NodeKind::Corner;
    };

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(std::size_t(5 * n));
    for (Index node = 0; node < n; ++node) {
        const NodeKind kind = node_kind(domain, node);
        switch (kind) {
        case NodeKind::Corner:
        case NodeKind::Lateral:
            // eta = 0; coupling eliminated from the neighbours for symmetry.
            trips.emplace_back(node, node, 1.0);
            if (kind == NodeKind::Corner) ops.e_diag[node] = 0.0;
            break;
        case NodeKind::Top:
        case NodeKind::Bottom: {
            // eta + 2 A D d(eta)/d(xi) = 0 with a one-sided difference along the
            // outward normal, multiplied through by h / (2 A).
            const Index inner = kind == NodeKind::Top ? node - nx : node + nx;
            const double d = face(node, inner);
            double diag = h / (2.0 * domain.robin_constant) + d;
            trips.emplace_back(node, inner, -d);
            // Tangential diffusion over the half cell next to the surface.
            for (Index nb : {node - 1, node + 1}) {
                const double t = 0.5 * face(node, nb);
                diag += t;
                if (!is_dirichlet(nb)) trips.emplace_back(node, nb, -t);
            }
            trips.emplace_back(node, node, diag);
            ops.e_diag[node] = 0.0;
            break;
        }
        case NodeKind::Interior: {
            ops.absorbing[std::size_t(node)] = 1;
            double diag = 0.0;
            for (Index nb : {node - 1, node + 1, node - nx, node + nx}) {
                const double d = face(node, nb);
                diag += d;
                if (!is_dirichlet(nb)) trips.emplace_back(node, nb, -d);
            }
            trips.emplace_back(node, node, diag);
            break;
        }
        }
    }
    ops.a0.resize(n, n);
    ops.a0.setFromTriplets(trips.begin(), trips.end());
    ops.a0.makeCompressed();

    const int w = layout.footprint_half_width;
    ops.b = MatR::Zero(n, layout.num_sources());
    for (Index j = 0; j < layout.num_sources(); ++j) {
        for (int o = -w; o <= w; ++o) ops.b(layout.sources[std::size_t(j)] + o, j) = 1.0 / (2 * w + 1);
    }
    // Trapezoidal weights over the footprint, normalised to a footprint average.
    ops.c = MatR::Zero(layout.num_detectors(), n);
    for (Index i = 0; i < layout.num_detectors(); ++i) {
        const Index centre = layout.detectors[std::size_t(i)];
        if (w == 0) {
            ops.c(i, centre) = 1.0;
            continue;
        }
        for (int o = -w; o <= w; ++o) {
            const double weight = (o == -w || o == w) ? 0.5 : 1.0;
            ops.c(i, centre + o) = weight / (2.0 * w);
        }
    }
    return ops;
}

std::uint64_t grid_hash(const DomainSpec& domain, const SourceDetectorLayout& layout) {
    Fnv1a h;
    h.u64(std::uint64_t(domain.nx));
    h.u64(std::uint64_t(domain.nz));
    h.f64(domain.half_width);
    h.f64(domain.half_height);
    h.f64(domain.speed_of_light);
    h.f64(domain.robin_constant);
    h.u64(domain.diffusion.size());
    for (double d : domain.diffusion) h.f64(d);
    h.u64(layout.sources.size());
    for (Index s : layout.sources) h.u64(std::uint64_t(s));
    h.u64(layout.detectors.size());
    for (Index d : layout.detectors) h.u64(std::uint64_t(d));
    h.u64(std::uint64_t(layout.footprint_half_width));
    return h.state;
}

void dump_coordinate_list(std::ostream& out, const SparseR& matrix) {
    out.precision(17);
    for (Index r = 0; r < matrix.outerSize(); ++r) {
        for (SparseR::InnerIterator it(matrix, r); it; ++it) {
            out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
        }
    }
}

void dump_coordinate_list(std::ostream& out, const MatR& matrix) {
    out.precision(17);
    for (Index r = 0; r < matrix.rows(); ++r) {
        for (Index c = 0; c < matrix.cols(); ++c) {
            if (matrix(r, c) != 0.0) out << r << ' ' << c << ' ' << matrix(r, c) << '\n';
        }
    }
}

}  // namespace dotrom
