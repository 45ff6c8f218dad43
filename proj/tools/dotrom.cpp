#include <CLI11.hpp>

#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dotrom/basis_io.hpp"
#include "dotrom/config.hpp"
#include "dotrom/diagnostics.hpp"
#include "dotrom/errors.hpp"
#include "dotrom/reconstruction.hpp"

namespace {

using namespace dotrom;

enum ExitCode { kOk = 0, kUsage = 1, kValidation = 2, kSolver = 3, kIo = 4 };

struct CommonFlags {
    std::string config;
    std::string mode;
    std::string basis;
    std::optional<std::uint64_t> seed;
    std::string out;
};

RunConfig resolve_config(const CommonFlags& f) {
    RunConfig cfg = f.config.empty() ? RunConfig{} : load_config(f.config);
    if (!f.mode.empty()) cfg.rom.mode = parse_run_mode(f.mode);
    if (!f.basis.empty()) cfg.rom.basis_path = f.basis;
    if (f.seed) cfg.seed = *f.seed;
    if (!f.out.empty()) cfg.output_dir = f.out;
    cfg.validate();
    return cfg;
}

void add_common(CLI::App* cmd, CommonFlags& f, bool with_mode) {
    cmd->add_option("--config", f.config, "Run configuration (JSON)");
    if (with_mode) {
        cmd->add_option("--mode", f.mode, "Backend: full, rom or rom-recycled")
            ->check(CLI::IsMember({"full", "rom", "rom-recycled"}));
        cmd->add_option("--basis", f.basis, "Basis file to load instead of building one");
    }
    cmd->add_option("--seed", f.seed, "Seed for phantom texture and noise");
    cmd->add_option("--out", f.out, "Output directory");
}

int cmd_generate(const CommonFlags& flags) {
    const RunConfig cfg = resolve_config(flags);
    const GenerateResult g = run_generate(cfg);
    std::cout << "phantom        " << g.phantom.shape << " (mask fraction " << g.phantom.mask_fraction() << ")\n"
              << "measurements   " << g.measurements_path << " (" << g.data.noisy.data.size() << " entries)\n"
              << "mask           " << g.mask_path << "\n";
    return kOk;
}

int cmd_invert(const CommonFlags& flags) {
    const RunConfig cfg = resolve_config(flags);
    const ReconstructionResult r = run_reconstruction(cfg);
    std::cout << std::setprecision(6) << "mode                 " << to_string(r.mode) << "\n"
              << "status               " << to_string(r.inversion.status) << "\n"
              << "initial misfit       " << r.initial_misfit << "\n"
              << "final misfit         " << r.final_misfit << " (full model: " << r.final_full_misfit << ")\n"
              << "large solves         " << r.large_solves() << "\n"
              << "reduced solves       " << r.costs.inversion.reduced_solves << "\n"
              << "K_fun / K_Jac / K    " << r.costs.inversion.function_evals << " / "
              << r.costs.inversion.jacobian_evals << " / " << r.samples << "\n"
              << "(K_fun+K_Jac)/(2K)   " << r.offline_online_ratio() << "\n";
    if (r.basis_order > 0) std::cout << "basis order          " << r.basis_order << " (" << r.basis_path << ")\n";
    if (!r.series.gap.empty()) {
        std::cout << "max subspace gap     " << r.max_gap << "\n"
                  << "gap/error spearman   " << r.gap_error_correlation << "\n";
    }
    std::cout << "report               " << r.report_path << "\n";
    return kOk;
}

int cmd_basis_build(const CommonFlags& flags, const std::vector<std::string>& sample_paths, std::string out) {
    const RunConfig cfg = resolve_config(flags);
    const DiscreteOperators ops = assemble(cfg.domain, cfg.make_layout());
    std::vector<VecR> samples;
    for (const auto& p : sample_paths) samples.push_back(load_params(p));
    CostCounters counters;
    const GlobalBasis basis = build_basis_from_samples(ops, cfg, samples, &counters);
    if (out.empty()) out = cfg.output_dir + "/basis.bin";
    save_basis(out, basis, std::uint32_t(ops.num_sources()), std::uint32_t(ops.num_detectors()),
               grid_hash(cfg.domain, ops.layout));
    std::cout << "basis " << out << ": n = " << basis.dimension() << ", r = " << basis.order() << ", "
              << counters.snapshot().large_solves << " large solves\n";
    return kOk;
}

int cmd_basis_info(const std::string& path) {
    const BasisHeader h = read_basis_header(path);
    std::cout << std::setprecision(6) << "n            " << h.n << "\n"
              << "r            " << h.r << "\n"
              << "sources      " << h.n_src << "\n"
              << "detectors    " << h.n_det << "\n"
              << "projection   " << (h.two_sided ? "two-sided" : "one-sided") << "\n"
              << "tolerance    " << h.tolerance << "\n"
              << "frequencies ";
    for (double w : h.frequencies) std::cout << ' ' << w;
    std::ostringstream hash;
    hash << std::hex << std::setw(16) << std::setfill('0') << h.grid_hash;
    std::cout << "\ngrid hash    " << hash.str() << "\n";
    if (!h.singular_values.empty()) {
        std::cout << "sigma range  " << h.singular_values.front() << " .. " << h.singular_values.back() << "\n";
    }
    return kOk;
}

int cmd_basis_verify(const CommonFlags& flags, const std::string& path) {
    const RunConfig cfg = resolve_config(flags);
    const SourceDetectorLayout layout = cfg.make_layout();
    const BasisFile f = load_basis(path, grid_hash(cfg.domain, layout));
    auto deviation = [](const MatR& v) {
        return (v.transpose() * v - MatR::Identity(v.cols(), v.cols())).cwiseAbs().maxCoeff();
    };
    const double dv = deviation(f.basis.v);
    const double dw = deviation(f.basis.w);
    std::cout << "orthonormality deviation V " << dv << ", W " << dw << "\n";
    if (dv > 1e-10 || dw > 1e-10) throw ValidationError("basis '" + path + "' is not orthonormal to 1e-10");
    std::cout << "basis " << path << " verified\n";
    return kOk;
}

int cmd_diagnose(const CommonFlags& flags, const std::vector<std::string>& traces, std::string out) {
    const RunConfig cfg = resolve_config(flags);
    const DiscreteOperators ops = assemble(cfg.domain, cfg.make_layout());
    int index = 0;
    for (const auto& path : traces) {
        const std::vector<VecR> iterates = load_iterates(path);
        CostCounters counters;
        const DiagnosticSeries s = gap_error_series(ops, cfg.pals, cfg.frequencies, iterates, cfg.solver, &counters);
        std::string target = out;
        if (target.empty()) target = cfg.output_dir + "/diagnostics_" + std::to_string(++index) + ".csv";
        else if (traces.size() > 1) target = out + "." + std::to_string(++index);
        write_series_csv(target, s);
        std::cout << target << ": " << s.gap.size() << " iterates, spearman "
                  << spearman_correlation(s.gap, s.error_ratio) << "\n";
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Absorption imaging from diffuse optical boundary data with reduced-order models"};
    app.require_subcommand(1);

    CommonFlags gen_flags, inv_flags, build_flags, verify_flags, diag_flags;
    std::vector<std::string> sample_paths, trace_paths;
    std::string basis_out, info_path, verify_path, diag_out;

    auto* gen = app.add_subcommand("generate", "Simulate phantom measurements");
    add_common(gen, gen_flags, false);

    auto* inv = app.add_subcommand("invert", "Reconstruct an absorption image");
    add_common(inv, inv_flags, true);

    auto* basis = app.add_subcommand("basis", "Build, inspect or verify a projection basis");
    basis->require_subcommand(1);
    auto* build = basis->add_subcommand("build", "Build a basis from parameter sample files");
    add_common(build, build_flags, false);
    build->add_option("--samples", sample_paths, "Parameter sample files")->required();
    build->add_option("--basis-out", basis_out, "Output basis path (default <out>/basis.bin)");
    auto* info = basis->add_subcommand("info", "Print a basis header");
    info->add_option("path", info_path, "Basis file")->required();
    auto* verify = basis->add_subcommand("verify", "Check orthonormality and grid hash");
    add_common(verify, verify_flags, false);
    verify->add_option("path", verify_path, "Basis file")->required();

    auto* diag = app.add_subcommand("diagnose", "Subspace-gap and error-ratio series from iterate files");
    add_common(diag, diag_flags, false);
    diag->add_option("traces", trace_paths, "Iterate files (iterates.csv)")->required();
    diag->add_option("--series-out", diag_out, "Output series path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*gen) return cmd_generate(gen_flags);
        if (*inv) return cmd_invert(inv_flags);
        if (*build) return cmd_basis_build(build_flags, sample_paths, basis_out);
        if (*info) return cmd_basis_info(info_path);
        if (*verify) return cmd_basis_verify(verify_flags, verify_path);
        if (*diag) return cmd_diagnose(diag_flags, trace_paths, diag_out);
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kValidation;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kSolver;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kIo;
    }
    return kUsage;
}
