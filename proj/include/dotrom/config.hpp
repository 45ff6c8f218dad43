#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dotrom/grid.hpp"
#include "dotrom/linear_solver.hpp"
#include "dotrom/mor.hpp"
#include "dotrom/pals.hpp"
#include "dotrom/synth.hpp"
#include "dotrom/trust_region.hpp"

namespace dotrom {

enum class RunMode { Full, Rom, RomRecycled };
RunMode parse_run_mode(const std::string& name);
std::string to_string(RunMode mode);

struct LayoutConfig {
    int sources = 24;
    int detectors = 24;
    int footprint_half_width = 0;
};

struct PalsGridConfig {
    int cols = 5;
    int rows = 3;
    double alpha0 = 1.0;
};

struct RomConfig {
    RunMode mode = RunMode::Rom;
    std::string basis_path;   // load instead of building when set
    int samples = 2;          // K, leading full-model iterates
    double tolerance = 1e-8;  // relative SVD truncation
    ProjectionMode projection = ProjectionMode::OneSided;
};

struct DiagnosticsConfig {
    bool gap_series = true;
};

/**
 * Everything a run needs. Stored as JSON with a schema_version field; every
 * member below has a default, and unknown keys are rejected.
 */
struct RunConfig {
    static constexpr int kSchemaVersion = 1;

    DomainSpec domain;
    LayoutConfig layout;
    std::vector<double> frequencies{0.0};
    PalsConfig pals;
    PalsGridConfig pals_grid;
    PhantomSpec phantom;
    double noise = 1e-3;
    TrustRegionOptions optimizer;
    SolverOptions solver;
    RomConfig rom;
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    std::string measurements_path;  // default: <output_dir>/measurements.bin
    DiagnosticsConfig diagnostics;

    void validate() const;
    std::string resolved_measurements_path() const;
    SourceDetectorLayout make_layout() const;
    PalsParams make_initial_guess() const;
};

std::string serialize_config(const RunConfig& cfg);
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
void save_config(const std::string& path, const RunConfig& cfg);

bool operator==(const RunConfig& a, const RunConfig& b);

/// Parameter vectors as text, one value per line.
void save_params(const std::string& path, const VecR& p);
VecR load_params(const std::string& path);
/// Iterate histories, one comma-separated parameter vector per line.
void save_iterates(const std::string& path, const std::vector<VecR>& iterates);
std::vector<VecR> load_iterates(const std::string& path);

}  // namespace dotrom
