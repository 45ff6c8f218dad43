#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dotrom/backend.hpp"
#include "dotrom/grid.hpp"
#include "dotrom/linear_solver.hpp"
#include "dotrom/pals.hpp"

namespace dotrom {

/// Either a named preset or a graymap mask file (mask_path wins when set).
struct PhantomSpec {
    std::string preset = "cup";
    std::string mask_path;

    std::string descriptor() const { return mask_path.empty() ? preset : "file:" + mask_path; }
};

struct Phantom {
    int nx = 0;
    int nz = 0;
    std::vector<std::uint8_t> mask;  // node order (iz * nx + ix), 1 = anomaly
    VecR absorption;                 // mu per node
    std::uint64_t seed = 0;
    std::string shape;

    double mask_fraction() const;
};

const std::vector<std::string>& phantom_presets();

/// Binary node mask of a preset, drawn in coordinates relative to the slab
/// so that it scales with the mesh.
std::vector<std::uint8_t> preset_mask(const std::string& name, const DomainSpec& domain);

/// Off-mask nodes get mu_out; on-mask nodes mu_in (1 + sigma g) with g
/// standard normal, redrawn until positive. Deterministic in `seed`.
Phantom rasterize_phantom(const PhantomSpec& spec, const DomainSpec& domain, std::uint64_t seed,
                          const PalsConfig& cfg);
Phantom rasterize_mask(const std::vector<std::uint8_t>& mask, const DomainSpec& domain, std::uint64_t seed,
                       const PalsConfig& cfg, const std::string& shape);

/// A1 from a pixel absorption map: h^2 mu at absorbing nodes.
VecR pixel_absorption_diagonal(const Phantom& phantom, const DiscreteOperators& ops);

struct SimulatedData {
    VecC clean;
    MeasurementSet noisy;
    std::uint64_t seed = 0;
};

/// Adds independent N(0, (noise * rms / sqrt 2)^2) perturbations to the real
/// and imaginary part of every entry, rms = ||clean|| / sqrt(N), so the
/// expected relative noise norm is `noise`.
VecC add_white_noise(const VecC& clean, double noise, std::uint64_t seed);

SimulatedData simulate_measurements(const Phantom& phantom, const DiscreteOperators& ops,
                                    const std::vector<double>& freqs, double noise, std::uint64_t seed,
                                    const SolverOptions& options = {}, CostCounters* counters = nullptr);

// Graymaps. Row 0 of the file is the top surface (iz = nz - 1).
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // file order, row-major
};
GrayImage read_pgm(const std::string& path);
void write_pgm(const std::string& path, const GrayImage& image);

std::vector<std::uint8_t> mask_from_image(const GrayImage& image, const DomainSpec& domain);
GrayImage image_from_mask(const std::vector<std::uint8_t>& mask, int nx, int nz);
/// Node values mapped linearly from [0, vmax] to [0, 255].
GrayImage image_from_field(const VecR& field, int nx, int nz, double vmax);
/// Comma-separated grid, top row first.
void write_grid_csv(const std::string& path, const VecR& field, int nx, int nz);

/// Binary container ("DOTMEAS" header, little-endian complex doubles in the
/// stacking order of MeasurementSet) and a JSON sidecar at path + ".json".
void save_measurements(const std::string& path, const MeasurementSet& data, std::uint64_t seed,
                       std::uint64_t grid_hash);
struct MeasurementFile {
    MeasurementSet data;
    std::uint64_t seed = 0;
    std::uint64_t grid_hash = 0;
};
MeasurementFile load_measurements(const std::string& path);

}  // namespace dotrom
