#include "dotrom/basis_io.hpp"

#include <fstream>
#include <sstream>

#include "dotrom/binary_io.hpp"
#include "dotrom/errors.hpp"

namespace dotrom {

namespace {

constexpr char kMagic[9] = "DOTBASIS";
constexpr std::uint32_t kVersion = 1;
// Sanity caps against corrupt headers.
constexpr std::uint64_t kMaxEntries = std::uint64_t(1) << 34;
constexpr std::uint32_t kMaxList = 1u << 20;

BasisHeader read_header(std::istream& in) {
    binio::expect_magic(in, kMagic, "basis");
    BasisHeader h;
    h.version = binio::read_u32(in);
    if (h.version != kVersion) throw IoError("basis: unsupported version " + std::to_string(h.version));
    h.n = binio::read_u64(in);
    h.r = binio::read_u64(in);
    h.n_src = binio::read_u32(in);
    h.n_det = binio::read_u32(in);
    h.two_sided = binio::read_u8(in) != 0;
    h.tolerance = binio::read_f64(in);
    const std::uint32_t nw = binio::read_u32(in);
    if (nw > kMaxList) throw IoError("basis: corrupt frequency count");
    for (std::uint32_t i = 0; i < nw; ++i) h.frequencies.push_back(binio::read_f64(in));
    h.grid_hash = binio::read_u64(in);
    const std::uint32_t ns = binio::read_u32(in);
    if (ns > kMaxList) throw IoError("basis: corrupt singular value count");
    for (std::uint32_t i = 0; i < ns; ++i) h.singular_values.push_back(binio::read_f64(in));
    if (h.n == 0 || h.r == 0 || h.r > h.n || h.n * h.r > kMaxEntries) {
        throw IoError("basis: corrupt dimensions");
    }
    return h;
}

MatR read_matrix(std::istream& in, std::uint64_t rows, std::uint64_t cols) {
    MatR m(static_cast<Index>(rows), static_cast<Index>(cols));
    for (Index c = 0; c < m.cols(); ++c) {
        for (Index r = 0; r < m.rows(); ++r) m(r, c) = binio::read_f64(in);
    }
    return m;
}

void write_matrix(std::ostream& out, const MatR& m) {
    for (Index c = 0; c < m.cols(); ++c) {
        for (Index r = 0; r < m.rows(); ++r) binio::write_f64(out, m(r, c));
    }
}

}  // namespace

void save_basis(const std::string& path, const GlobalBasis& basis, std::uint32_t n_src, std::uint32_t n_det,
                std::uint64_t grid_hash) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    binio::write_magic(out, kMagic);
    binio::write_u32(out, kVersion);
    binio::write_u64(out, std::uint64_t(basis.v.rows()));
    binio::write_u64(out, std::uint64_t(basis.v.cols()));
    binio::write_u32(out, n_src);
    binio::write_u32(out, n_det);
    binio::write_u8(out, basis.mode == ProjectionMode::TwoSided ? 1 : 0);
    binio::write_f64(out, basis.tolerance);
    binio::write_u32(out, std::uint32_t(basis.frequencies.size()));
    for (double w : basis.frequencies) binio::write_f64(out, w);
    binio::write_u64(out, grid_hash);
    binio::write_u32(out, std::uint32_t(basis.singular_values.size()));
    for (Index i = 0; i < basis.singular_values.size(); ++i) binio::write_f64(out, basis.singular_values[i]);
    write_matrix(out, basis.v);
    if (basis.mode == ProjectionMode::TwoSided) write_matrix(out, basis.w);
    out.flush();
    if (!out) throw IoError("failed writing '" + path + "'");
}

BasisHeader read_basis_header(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open basis file '" + path + "'");
    return read_header(in);
}

BasisFile load_basis_unchecked(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open basis file '" + path + "'");
    BasisFile f;
    f.header = read_header(in);
    GlobalBasis& b = f.basis;
    b.mode = f.header.two_sided ? ProjectionMode::TwoSided : ProjectionMode::OneSided;
    b.tolerance = f.header.tolerance;
    b.frequencies = f.header.frequencies;
    b.singular_values = Eigen::Map<const VecR>(f.header.singular_values.data(),
                                               Index(f.header.singular_values.size()));
    b.v = read_matrix(in, f.header.n, f.header.r);
    b.w = f.header.two_sided ? read_matrix(in, f.header.n, f.header.r) : b.v;
    if (in.peek() != std::char_traits<char>::eof()) throw IoError("basis: trailing bytes after payload");
    return f;
}

BasisFile load_basis(const std::string& path, std::uint64_t expected_grid_hash) {
    BasisFile f = load_basis_unchecked(path);
    if (f.header.grid_hash != expected_grid_hash) {
        std::ostringstream msg;
        msg << "basis '" << path << "' was built for a different mesh/layout (grid hash " << std::hex
            << f.header.grid_hash << ", expected " << expected_grid_hash << ")";
        throw ValidationError(msg.str());
    }
    return f;
}

}  // namespace dotrom
