#include "dotrom/reconstruction.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "dotrom/basis_io.hpp"
#include "dotrom/errors.hpp"

namespace dotrom {

namespace {

using json = nlohmann::ordered_json;

template <class F>
auto in_phase(const char* phase, F&& fn) -> decltype(fn()) {
    const std::string tag = std::string("[") + phase + "] ";
    try {
        return fn();
    } catch (const ValidationError& e) {
        throw ValidationError(tag + e.what());
    } catch (const SolverError& e) {
        throw SolverError(tag + e.what());
    } catch (const IoError& e) {
        throw IoError(tag + e.what());
    }
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
}

std::string hex64(std::uint64_t v) {
    std::ostringstream s;
    s << std::hex << std::setw(16) << std::setfill('0') << v;
    return s.str();
}

json counters_json(const CostReport& c) {
    return {{"large_solves", c.large_solves},       {"reduced_solves", c.reduced_solves},
            {"delta_update_flops", c.delta_update_flops}, {"function_evals", c.function_evals},
            {"jacobian_evals", c.jacobian_evals}};
}

json trace_json(const InversionTrace& t, double data_norm) {
    json j;
    j["status"] = to_string(t.status);
    j["accepted_iterates"] = t.iterates.size();
    j["trial_steps"] = t.trials.size();
    j["function_evals"] = t.function_evals;
    j["jacobian_evals"] = t.jacobian_evals;
    std::vector<double> rel;
    for (double v : t.objective) rel.push_back(v / data_norm);
    j["objective"] = t.objective;
    j["relative_objective"] = rel;
    std::vector<double> radius, trial_obj;
    std::vector<bool> accepted;
    for (const TrialStep& s : t.trials) {
        radius.push_back(s.radius);
        trial_obj.push_back(std::isfinite(s.objective) ? s.objective : -1.0);
        accepted.push_back(s.accepted);
    }
    j["trial_radius"] = radius;
    j["trial_objective"] = trial_obj;
    j["trial_accepted"] = accepted;
    return j;
}

std::vector<double> to_std(const VecR& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

GenerateResult run_generate(const RunConfig& cfg) {
    cfg.validate();
    GenerateResult out;
    const DiscreteOperators ops = in_phase("setup", [&] { return assemble(cfg.domain, cfg.make_layout()); });
    out.phantom = in_phase("phantom", [&] { return rasterize_phantom(cfg.phantom, cfg.domain, cfg.seed, cfg.pals); });
    out.data = in_phase("simulate", [&] {
        return simulate_measurements(out.phantom, ops, cfg.frequencies, cfg.noise, cfg.seed, cfg.solver);
    });
    in_phase("output", [&] {
        ensure_dir(cfg.output_dir);
        out.mask_path = cfg.output_dir + "/mask.pgm";
        out.field_path = cfg.output_dir + "/phantom.csv";
        out.measurements_path = cfg.resolved_measurements_path();
        write_pgm(out.mask_path, image_from_mask(out.phantom.mask, cfg.domain.nx, cfg.domain.nz));
        write_grid_csv(out.field_path, out.phantom.absorption, cfg.domain.nx, cfg.domain.nz);
        save_measurements(out.measurements_path, out.data.noisy, cfg.seed, grid_hash(cfg.domain, ops.layout));
    });
    return out;
}

GlobalBasis build_basis_from_samples(const DiscreteOperators& ops, const RunConfig& cfg,
                                     const std::vector<VecR>& samples, CostCounters* counters) {
    if (samples.empty()) throw ValidationError("basis: at least one parameter sample required");
    std::vector<LocalBasis> locals;
    for (const VecR& s : samples) {
        if (s.size() != cfg.pals.num_params()) {
            throw ValidationError("basis: sample has " + std::to_string(s.size()) + " values, expected " +
                                  std::to_string(cfg.pals.num_params()));
        }
        locals.push_back(build_local_basis(ops, cfg.pals, PalsParams(cfg.pals.m0, s), cfg.frequencies, cfg.solver,
                                           counters));
    }
    if (counters) counters->set_samples(std::int64_t(samples.size()));
    return build_global_basis(locals, cfg.rom.tolerance, cfg.rom.projection);
}

VecR absorption_field(const PalsParams& p, const PalsConfig& cfg, const DomainSpec& domain) {
    VecR mu(domain.num_nodes());
    for (Index i = 0; i < mu.size(); ++i) {
        const double h = heaviside(level_set(node_position(domain, i), p, cfg) - cfg.level, cfg.epsilon);
        mu[i] = cfg.mu_in * h + cfg.mu_out * (1.0 - h);
    }
    return mu;
}

double ReconstructionResult::offline_online_ratio() const {
    if (samples <= 0) return 0.0;
    return double(costs.inversion.function_evals + costs.inversion.jacobian_evals) / (2.0 * double(samples));
}

ReconstructionResult run_reconstruction(const RunConfig& cfg) {
    in_phase("config", [&] { cfg.validate(); });
    ReconstructionResult res;
    res.mode = cfg.rom.mode;

    const DiscreteOperators ops = in_phase("setup", [&] { return assemble(cfg.domain, cfg.make_layout()); });
    const std::uint64_t hash = grid_hash(cfg.domain, ops.layout);
    const MeasurementFile meas = in_phase("data", [&] {
        MeasurementFile f = load_measurements(cfg.resolved_measurements_path());
        if (f.grid_hash != hash) {
            throw ValidationError("measurements were generated for a different mesh/layout");
        }
        if (f.data.frequencies != cfg.frequencies) {
            throw ValidationError("frequencies: measurement file frequencies differ from the config");
        }
        return f;
    });
    const MeasurementSet& data = meas.data;
    const double data_norm = data.data.norm();
    if (!(data_norm > 0.0)) throw ValidationError("[data] measurement vector is zero");

    const PalsParams p0 = cfg.make_initial_guess();
    res.initial_params = p0.values();
    CostCounters warm_counters, inv_counters, diag_counters;
    std::vector<VecR> history;  // accepted iterates of the whole run

    VecR p_start = p0.values();
    std::optional<GlobalBasis> basis;
    if (cfg.rom.mode == RunMode::Full) {
        res.samples = cfg.rom.samples;
    } else if (!cfg.rom.basis_path.empty()) {
        basis = in_phase("basis", [&] {
            BasisFile f = load_basis(cfg.rom.basis_path, hash);
            if (f.basis.frequencies != cfg.frequencies) {
                throw ValidationError("rom.basis_path: basis frequencies differ from the config");
            }
            return f.basis;
        });
        res.basis_path = cfg.rom.basis_path;
        res.samples = cfg.rom.samples;
    } else {
        std::vector<LocalBasis> locals = in_phase("warm-start", [&] {
            FullBackend full(ops, cfg.pals, cfg.frequencies, cfg.solver, warm_counters);
            full.keep_snapshots(true);
            TrustRegionOptions opts = cfg.optimizer;
            opts.max_jacobian_evals = cfg.rom.samples;
            res.warm_start = invert(full, p0, data, opts, &warm_counters);
            std::vector<LocalBasis> locals;
            for (const auto& snap : full.jacobian_snapshots()) {
                locals.push_back(LocalBasis::from_solutions(snap.params, cfg.frequencies, snap.states));
            }
            res.samples = int(locals.size());
            warm_counters.set_samples(res.samples);
            ensure_dir(cfg.output_dir);
            for (std::size_t k = 0; k < locals.size(); ++k) {
                save_params(cfg.output_dir + "/sample_" + std::to_string(k + 1) + ".txt", locals[k].sample);
            }
            return locals;
        });
        basis = in_phase("basis", [&] { return build_global_basis(locals, cfg.rom.tolerance, cfg.rom.projection); });
        const auto& iters = res.warm_start->iterates;
        history.insert(history.end(), iters.begin(), iters.end() - 1);
        p_start = res.warm_start->best();
        res.basis_path = cfg.output_dir + "/basis.bin";
        in_phase("basis", [&] {
            save_basis(res.basis_path, *basis, std::uint32_t(ops.num_sources()), std::uint32_t(ops.num_detectors()),
                       hash);
        });
    }
    if (basis) res.basis_order = basis->order();

    res.inversion = in_phase("inversion", [&] {
        const PalsParams start(cfg.pals.m0, p_start);
        if (cfg.rom.mode == RunMode::Full) {
            FullBackend full(ops, cfg.pals, cfg.frequencies, cfg.solver, inv_counters);
            return invert(full, start, data, cfg.optimizer, &inv_counters);
        }
        RomBackend rom(ops, cfg.pals, *basis, start, inv_counters);
        inv_counters.set_samples(res.samples);
        return invert(rom, start, data, cfg.optimizer, &inv_counters);
    });
    history.insert(history.end(), res.inversion.iterates.begin(), res.inversion.iterates.end());
    res.final_params = res.inversion.best();
    res.final_misfit = res.inversion.final_objective() / data_norm;

    in_phase("evaluation", [&] {
        FullBackend check(ops, cfg.pals, cfg.frequencies, cfg.solver, diag_counters);
        if (res.warm_start) {
            res.initial_misfit = res.warm_start->objective.front() / data_norm;
        } else if (cfg.rom.mode == RunMode::Full) {
            res.initial_misfit = res.inversion.objective.front() / data_norm;
        } else {
            res.initial_misfit = residual(check, p0, data).norm() / data_norm;
        }
        res.final_full_misfit =
            residual(check, PalsParams(cfg.pals.m0, res.final_params), data).norm() / data_norm;
    });

    std::string series_path;
    if (cfg.diagnostics.gap_series) {
        in_phase("diagnostics", [&] {
            res.series = gap_error_series(ops, cfg.pals, cfg.frequencies, history, cfg.solver, &diag_counters);
            for (double g : res.series.gap) res.max_gap = std::max(res.max_gap, g);
            res.gap_error_correlation = spearman_correlation(res.series.gap, res.series.error_ratio);
            ensure_dir(cfg.output_dir);
            series_path = cfg.output_dir + "/diagnostics.csv";
            write_series_csv(series_path, res.series);
        });
    }
    res.costs.warm_start = warm_counters.snapshot();
    res.costs.inversion = inv_counters.snapshot();
    res.costs.diagnostics = diag_counters.snapshot();

    in_phase("output", [&] {
        ensure_dir(cfg.output_dir);
        const VecR mu = absorption_field(PalsParams(cfg.pals.m0, res.final_params), cfg.pals, cfg.domain);
        const double vmax = std::max(cfg.pals.mu_in, cfg.pals.mu_out);
        const std::string pgm = cfg.output_dir + "/reconstruction.pgm";
        const std::string csv = cfg.output_dir + "/reconstruction.csv";
        write_pgm(pgm, image_from_field(mu, cfg.domain.nx, cfg.domain.nz, vmax));
        write_grid_csv(csv, mu, cfg.domain.nx, cfg.domain.nz);
        const std::string params_path = cfg.output_dir + "/final_params.txt";
        save_params(params_path, res.final_params);
        const std::string iterates_path = cfg.output_dir + "/iterates.csv";
        save_iterates(iterates_path, history);
        const std::string config_path = cfg.output_dir + "/config.echo.json";
        save_config(config_path, cfg);

        json r;
        r["schema_version"] = 1;
        r["mode"] = to_string(cfg.rom.mode);
        r["config"] = json::parse(serialize_config(cfg));
        r["grid_hash"] = hex64(hash);
        r["measurements"] = {{"path", cfg.resolved_measurements_path()},
                             {"entries", data.data.size()},
                             {"noise_level", data.noise_level},
                             {"seed", meas.seed},
                             {"norm", data_norm}};
        if (res.warm_start) {
            json w = trace_json(*res.warm_start, data_norm);
            w["counters"] = counters_json(res.costs.warm_start);
            r["warm_start"] = w;
        }
        if (basis) {
            r["basis"] = {{"path", res.basis_path},
                          {"source", res.warm_start ? "built" : "loaded"},
                          {"order", basis->order()},
                          {"dimension", basis->dimension()},
                          {"tolerance", basis->tolerance},
                          {"projection", to_string(basis->mode)},
                          {"samples", res.samples}};
        }
        json inv = trace_json(res.inversion, data_norm);
        inv["backend"] = cfg.rom.mode == RunMode::Full ? "full" : "rom";
        inv["counters"] = counters_json(res.costs.inversion);
        r["inversion"] = inv;
        r["misfit"] = {{"initial_relative", res.initial_misfit},
                       {"final_relative", res.final_misfit},
                       {"final_full_relative", res.final_full_misfit},
                       {"reduction_factor", res.final_full_misfit > 0.0 ? res.initial_misfit / res.final_full_misfit
                                                                        : 0.0}};
        r["counters"] = {{"large_solves", res.large_solves()},
                         {"reduced_solves", res.costs.inversion.reduced_solves},
                         {"delta_update_flops", res.costs.inversion.delta_update_flops},
                         {"K_fun", res.costs.inversion.function_evals},
                         {"K_Jac", res.costs.inversion.jacobian_evals},
                         {"K", res.samples},
                         {"offline_online_ratio", res.offline_online_ratio()},
                         {"evaluation_large_solves", res.costs.diagnostics.large_solves}};
        r["final_parameters"] = to_std(res.final_params);
        r["final_parameters_path"] = params_path;
        r["iterates_path"] = iterates_path;
        if (!series_path.empty()) {
            r["diagnostics"] = {{"series_path", series_path},
                                {"length", res.series.gap.size()},
                                {"max_gap", res.max_gap},
                                {"gap_error_spearman", res.gap_error_correlation}};
        }
        r["images"] = {{"pgm", pgm}, {"csv", csv}};
        r["config_echo_path"] = config_path;
        res.report_text = r.dump(2) + "\n";
        res.report_path = cfg.output_dir + "/report.json";
        std::ofstream out(res.report_path, std::ios::trunc);
        if (!out) throw IoError("cannot open '" + res.report_path + "' for writing");
        out << res.report_text;
        if (!out) throw IoError("failed writing '" + res.report_path + "'");
    });
    return res;
}

}  // namespace dotrom
