#include "dotrom/synth.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include <json.hpp>

#include "dotrom/binary_io.hpp"
#include "dotrom/errors.hpp"
#include "dotrom/forward.hpp"

namespace dotrom {

namespace {

constexpr char kMeasMagic[9] = "DOTMEAS1";
constexpr std::uint32_t kMeasVersion = 1;

// Independent streams for the phantom texture and the measurement noise.
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(stream)};
    return std::mt19937_64(seq);
}

bool in_rect(double u, double v, double u0, double u1, double v0, double v1) {
    return u >= u0 && u <= u1 && v >= v0 && v <= v1;
}

bool in_disc(double u, double v, double cu, double cv, double r) {
    return (u - cu) * (u - cu) + (v - cv) * (v - cv) <= r * r;
}

// u, v in [-1, 1] across the slab; v = 1 is the top surface.
bool preset_contains(const std::string& name, double u, double v) {
    if (name == "block-pair") {
        return in_rect(u, v, -0.6, -0.2, -0.35, 0.25) || in_rect(u, v, 0.15, 0.55, -0.1, 0.45);
    }
    if (name == "triple-disc") {
        return in_disc(u, v, -0.45, 0.3, 0.2) || in_disc(u, v, 0.4, 0.35, 0.17) || in_disc(u, v, 0.0, -0.4, 0.22);
    }
    if (name == "cup") {
        const bool outer = in_rect(u, v, -0.5, 0.5, -0.5, 0.35);
        const bool inner = in_rect(u, v, -0.3, 0.3, -0.3, 1.0);
        return outer && !inner;
    }
    if (name == "amoeba") {
        const double du = u - 0.05, dv = v;
        const double t = std::atan2(dv, du);
        const double r = 0.45 * (1.0 + 0.25 * std::sin(3.0 * t) + 0.15 * std::cos(5.0 * t));
        return std::hypot(du, dv) <= r;
    }
    throw ValidationError("phantom.preset: unknown preset '" + name + "'");
}

std::string skip_pgm_space(std::istream& in) {
    std::string token;
    char ch;
    while (in.get(ch)) {
        if (ch == '#') {
            std::string rest;
            std::getline(in, rest);
        } else if (!std::isspace(static_cast<unsigned char>(ch))) {
            token.push_back(ch);
            while (in.get(ch) && !std::isspace(static_cast<unsigned char>(ch))) token.push_back(ch);
            break;
        }
    }
    return token;
}

int parse_pgm_int(std::istream& in, const std::string& path) {
    const std::string t = skip_pgm_space(in);
    try {
        std::size_t used = 0;
        const int v = std::stoi(t, &used);
        if (used != t.size() || v < 0) throw std::invalid_argument(t);
        return v;
    } catch (const std::exception&) {
        throw IoError("graymap '" + path + "': malformed header field '" + t + "'");
    }
}

}  // namespace

double Phantom::mask_fraction() const {
    if (mask.empty()) return 0.0;
    std::size_t on = 0;
    for (auto m : mask) on += m ? 1 : 0;
    return double(on) / double(mask.size());
}

const std::vector<std::string>& phantom_presets() {
    static const std::vector<std::string> names{"block-pair", "triple-disc", "cup", "amoeba"};
    return names;
}

std::vector<std::uint8_t> preset_mask(const std::string& name, const DomainSpec& domain) {
    domain.validate();
    std::vector<std::uint8_t> mask(std::size_t(domain.num_nodes()), 0);
    for (Index node = 0; node < domain.num_nodes(); ++node) {
        const Eigen::Vector2d x = node_position(domain, node);
        const double u = x.x() / domain.half_width;
        const double v = x.y() / domain.half_height;
        mask[std::size_t(node)] = preset_contains(name, u, v) ? 1 : 0;
    }
    return mask;
}

Phantom rasterize_mask(const std::vector<std::uint8_t>& mask, const DomainSpec& domain, std::uint64_t seed,
                       const PalsConfig& cfg, const std::string& shape) {
    if (Index(mask.size()) != domain.num_nodes()) {
        throw ValidationError("phantom: mask has " + std::to_string(mask.size()) + " pixels, grid has " +
                              std::to_string(domain.num_nodes()));
    }
    if (!(cfg.sigma >= 0.0)) throw ValidationError("pals.sigma must be >= 0");
    Phantom ph;
    ph.nx = domain.nx;
    ph.nz = domain.nz;
    ph.mask = mask;
    ph.seed = seed;
    ph.shape = shape;
    ph.absorption = VecR::Constant(domain.num_nodes(), cfg.mu_out);
    std::mt19937_64 rng = make_rng(seed, 1);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        double mu = cfg.mu_in;
        if (cfg.sigma > 0.0) {
            do {
                mu = cfg.mu_in * (1.0 + cfg.sigma * normal(rng));
            } while (!(mu > 0.0));
        }
        ph.absorption[Index(i)] = mu;
    }
    return ph;
}

Phantom rasterize_phantom(const PhantomSpec& spec, const DomainSpec& domain, std::uint64_t seed,
                          const PalsConfig& cfg) {
    if (!spec.mask_path.empty()) {
        return rasterize_mask(mask_from_image(read_pgm(spec.mask_path), domain), domain, seed, cfg,
                              spec.descriptor());
    }
    return rasterize_mask(preset_mask(spec.preset, domain), domain, seed, cfg, spec.descriptor());
}

VecR pixel_absorption_diagonal(const Phantom& phantom, const DiscreteOperators& ops) {
    if (phantom.nx != ops.domain.nx || phantom.nz != ops.domain.nz || phantom.absorption.size() != ops.n) {
        throw ValidationError("phantom grid does not match the operators");
    }
    const double h2 = ops.mesh_width() * ops.mesh_width();
    VecR a1 = VecR::Zero(ops.n);
    for (Index i = 0; i < ops.n; ++i) {
        if (ops.absorbing[std::size_t(i)]) a1[i] = h2 * phantom.absorption[i];
    }
    return a1;
}

VecC add_white_noise(const VecC& clean, double noise, std::uint64_t seed) {
    if (!(noise >= 0.0) || !std::isfinite(noise)) throw ValidationError("noise must be a finite fraction >= 0");
    if (noise == 0.0 || clean.size() == 0) return clean;
    const double rms = clean.norm() / std::sqrt(double(clean.size()));
    const double sd = noise * rms / std::sqrt(2.0);
    std::mt19937_64 rng = make_rng(seed, 2);
    std::normal_distribution<double> normal(0.0, 1.0);
    VecC out = clean;
    for (Index i = 0; i < out.size(); ++i) {
        const double re = normal(rng);
        const double im = normal(rng);
        out[i] += Complex(sd * re, sd * im);
    }
    return out;
}

SimulatedData simulate_measurements(const Phantom& phantom, const DiscreteOperators& ops,
                                    const std::vector<double>& freqs, double noise, std::uint64_t seed,
                                    const SolverOptions& options, CostCounters* counters) {
    if (freqs.empty()) throw ValidationError("frequencies: at least one required");
    const VecR a1 = pixel_absorption_diagonal(phantom, ops);
    std::vector<MatC> responses;
    for (double omega : freqs) responses.push_back(frequency_response(ops, a1, omega, options, counters));
    SimulatedData out;
    out.clean = stack_responses(responses);
    out.seed = seed;
    out.noisy.frequencies = freqs;
    out.noisy.n_src = ops.num_sources();
    out.noisy.n_det = ops.num_detectors();
    out.noisy.noise_level = noise;
    out.noisy.data = add_white_noise(out.clean, noise, seed);
    return out;
}

GrayImage read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open graymap '" + path + "'");
    const std::string magic = skip_pgm_space(in);
    if (magic != "P2" && magic != "P5") throw IoError("graymap '" + path + "': expected P2 or P5");
    GrayImage img;
    img.width = parse_pgm_int(in, path);
    img.height = parse_pgm_int(in, path);
    const int maxval = parse_pgm_int(in, path);
    if (img.width < 1 || img.height < 1 || maxval < 1 || maxval > 255) {
        throw IoError("graymap '" + path + "': unsupported dimensions or maxval");
    }
    const std::size_t count = std::size_t(img.width) * std::size_t(img.height);
    img.pixels.resize(count);
    if (magic == "P5") {
        in.read(reinterpret_cast<char*>(img.pixels.data()), std::streamsize(count));
        if (std::size_t(in.gcount()) != count) throw IoError("graymap '" + path + "': truncated pixel data");
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            const int v = parse_pgm_int(in, path);
            if (v > maxval) throw IoError("graymap '" + path + "': pixel exceeds maxval");
            img.pixels[i] = std::uint8_t(v);
        }
    }
    if (maxval != 255) {
        for (auto& p : img.pixels) p = std::uint8_t(std::lround(255.0 * p / maxval));
    }
    return img;
}

void write_pgm(const std::string& path, const GrayImage& image) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.pixels.data()), std::streamsize(image.pixels.size()));
    if (!out) throw IoError("failed writing '" + path + "'");
}

std::vector<std::uint8_t> mask_from_image(const GrayImage& image, const DomainSpec& domain) {
    if (image.width != domain.nx || image.height != domain.nz) {
        throw ValidationError("phantom.mask_path: mask is " + std::to_string(image.width) + "x" +
                              std::to_string(image.height) + ", grid is " + std::to_string(domain.nx) + "x" +
                              std::to_string(domain.nz));
    }
    std::vector<std::uint8_t> mask(std::size_t(domain.num_nodes()));
    for (int iz = 0; iz < domain.nz; ++iz) {
        const int row = domain.nz - 1 - iz;
        for (int ix = 0; ix < domain.nx; ++ix) {
            mask[std::size_t(iz) * domain.nx + ix] = image.pixels[std::size_t(row) * image.width + ix] >= 128;
        }
    }
    return mask;
}

GrayImage image_from_mask(const std::vector<std::uint8_t>& mask, int nx, int nz) {
    GrayImage img{nx, nz, std::vector<std::uint8_t>(std::size_t(nx) * nz)};
    for (int iz = 0; iz < nz; ++iz) {
        for (int ix = 0; ix < nx; ++ix) {
            img.pixels[std::size_t(nz - 1 - iz) * nx + ix] = mask[std::size_t(iz) * nx + ix] ? 255 : 0;
        }
    }
    return img;
}

GrayImage image_from_field(const VecR& field, int nx, int nz, double vmax) {
    GrayImage img{nx, nz, std::vector<std::uint8_t>(std::size_t(nx) * nz)};
    for (int iz = 0; iz < nz; ++iz) {
        for (int ix = 0; ix < nx; ++ix) {
            const double t = vmax > 0.0 ? field[Index(iz) * nx + ix] / vmax : 0.0;
            img.pixels[std::size_t(nz - 1 - iz) * nx + ix] =
                std::uint8_t(std::lround(255.0 * std::clamp(t, 0.0, 1.0)));
        }
    }
    return img;
}

void write_grid_csv(const std::string& path, const VecR& field, int nx, int nz) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << std::setprecision(17);
    for (int iz = nz - 1; iz >= 0; --iz) {
        for (int ix = 0; ix < nx; ++ix) {
            if (ix) out << ',';
            out << field[Index(iz) * nx + ix];
        }
        out << '\n';
    }
    if (!out) throw IoError("failed writing '" + path + "'");
}

void save_measurements(const std::string& path, const MeasurementSet& data, std::uint64_t seed,
                       std::uint64_t grid_hash) {
    data.validate();
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + path + "' for writing");
        binio::write_magic(out, kMeasMagic);
        binio::write_u32(out, kMeasVersion);
        binio::write_u32(out, std::uint32_t(data.n_src));
        binio::write_u32(out, std::uint32_t(data.n_det));
        binio::write_u32(out, std::uint32_t(data.frequencies.size()));
        for (double w : data.frequencies) binio::write_f64(out, w);
        binio::write_f64(out, data.noise_level);
        binio::write_u64(out, seed);
        binio::write_u64(out, grid_hash);
        binio::write_u64(out, std::uint64_t(data.data.size()));
        for (Index i = 0; i < data.data.size(); ++i) {
            binio::write_f64(out, data.data[i].real());
            binio::write_f64(out, data.data[i].imag());
        }
        out.flush();
        if (!out) throw IoError("failed writing '" + path + "'");
    }
    std::ostringstream hash;
    hash << std::hex << std::setw(16) << std::setfill('0') << grid_hash;
    nlohmann::ordered_json meta;
    meta["format"] = "DOTMEAS1";
    meta["n_src"] = data.n_src;
    meta["n_det"] = data.n_det;
    meta["frequencies"] = data.frequencies;
    meta["noise_level"] = data.noise_level;
    meta["seed"] = seed;
    meta["grid_hash"] = hash.str();
    meta["entries"] = data.data.size();
    meta["stacking"] = "index = ((i_src * n_omega) + j_omega) * n_det + i_det; (re, im) float64 little-endian";
    std::ofstream side(path + ".json", std::ios::trunc);
    if (!side) throw IoError("cannot open '" + path + ".json' for writing");
    side << meta.dump(2) << '\n';
    if (!side) throw IoError("failed writing '" + path + ".json'");
}

MeasurementFile load_measurements(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open measurement file '" + path + "'");
    binio::expect_magic(in, kMeasMagic, "measurements");
    const std::uint32_t version = binio::read_u32(in);
    if (version != kMeasVersion) throw IoError("measurements: unsupported version " + std::to_string(version));
    MeasurementFile f;
    f.data.n_src = binio::read_u32(in);
    f.data.n_det = binio::read_u32(in);
    const std::uint32_t nw = binio::read_u32(in);
    if (nw == 0 || nw > (1u << 20)) throw IoError("measurements: corrupt frequency count");
    for (std::uint32_t i = 0; i < nw; ++i) f.data.frequencies.push_back(binio::read_f64(in));
    f.data.noise_level = binio::read_f64(in);
    f.seed = binio::read_u64(in);
    f.grid_hash = binio::read_u64(in);
    const std::uint64_t count = binio::read_u64(in);
    if (count != std::uint64_t(f.data.expected_size())) throw IoError("measurements: entry count mismatch");
    f.data.data.resize(Index(count));
    for (Index i = 0; i < Index(count); ++i) {
        const double re = binio::read_f64(in);
        const double im = binio::read_f64(in);
        f.data.data[i] = Complex(re, im);
    }
    if (in.peek() != std::char_traits<char>::eof()) throw IoError("measurements: trailing bytes after payload");
    return f;
}

}  // namespace dotrom
