#include "dotrom/config.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dotrom/errors.hpp"

namespace dotrom {

namespace {

using json = nlohmann::ordered_json;

void reject_unknown(const json& obj, const std::string& where, const std::set<std::string>& known) {
    if (!obj.is_object()) throw ValidationError(where + ": expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!known.count(it.key())) {
            throw ValidationError((where.empty() ? "" : where + ".") + it.key() + ": unknown key");
        }
    }
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    try {
        out = it->template get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ValidationError((where.empty() ? "" : where + ".") + key + ": wrong type");
    }
}

json domain_json(const DomainSpec& d) {
    json j;
    j["half_width"] = d.half_width;
    j["half_height"] = d.half_height;
    j["nx"] = d.nx;
    j["nz"] = d.nz;
    j["speed_of_light"] = d.speed_of_light;
    j["robin_constant"] = d.robin_constant;
    if (d.diffusion.size() == 1) {
        j["diffusion"] = d.diffusion.front();
    } else {
        j["diffusion"] = d.diffusion;
    }
    return j;
}

void domain_from(const json& j, DomainSpec& d) {
    reject_unknown(j, "domain", {"half_width", "half_height", "nx", "nz", "speed_of_light", "robin_constant",
                                 "diffusion"});
    read(j, "half_width", d.half_width, "domain");
    read(j, "half_height", d.half_height, "domain");
    read(j, "nx", d.nx, "domain");
    read(j, "nz", d.nz, "domain");
    read(j, "speed_of_light", d.speed_of_light, "domain");
    read(j, "robin_constant", d.robin_constant, "domain");
    if (auto it = j.find("diffusion"); it != j.end()) {
        if (it->is_number()) {
            d.diffusion = {it->get<double>()};
        } else {
            read(j, "diffusion", d.diffusion, "domain");
        }
    }
}

std::string solver_kind_name(SolverKind k) { return to_string(k); }

}  // namespace

RunMode parse_run_mode(const std::string& name) {
    if (name == "full") return RunMode::Full;
    if (name == "rom") return RunMode::Rom;
    if (name == "rom-recycled") return RunMode::RomRecycled;
    throw ValidationError("rom.mode: unknown mode '" + name + "' (expected full, rom or rom-recycled)");
}

std::string to_string(RunMode mode) {
    switch (mode) {
        case RunMode::Full: return "full";
        case RunMode::Rom: return "rom";
        case RunMode::RomRecycled: return "rom-recycled";
    }
    return "unknown";
}

void RunConfig::validate() const {
    domain.validate();
    make_layout().validate(domain);
    if (frequencies.empty()) throw ValidationError("frequencies: at least one frequency required");
    for (double w : frequencies) {
        if (!std::isfinite(w) || w < 0.0) throw ValidationError("frequencies: values must be finite and >= 0");
    }
    if (pals_grid.cols < 1 || pals_grid.rows < 1) throw ValidationError("pals.grid_cols/grid_rows must be >= 1");
    if (pals.m0 != pals_grid.cols * pals_grid.rows) {
        throw ValidationError("pals.m0: must equal grid_cols * grid_rows");
    }
    if (!std::isfinite(pals_grid.alpha0) || pals_grid.alpha0 == 0.0) {
        throw ValidationError("pals.alpha0 must be finite and nonzero");
    }
    pals.validate();
    if (phantom.mask_path.empty()) {
        bool known = false;
        for (const auto& n : phantom_presets()) known = known || n == phantom.preset;
        if (!known) throw ValidationError("phantom.preset: unknown preset '" + phantom.preset + "'");
    }
    if (!std::isfinite(noise) || noise < 0.0) throw ValidationError("noise must be finite and >= 0");
    optimizer.validate();
    if (!(solver.tolerance > 0.0)) throw ValidationError("solver.tolerance must be > 0");
    if (solver.max_iter_factor < 1) throw ValidationError("solver.max_iter_factor must be >= 1");
    if (rom.samples < 1 || rom.samples > 5) throw ValidationError("rom.samples must lie in [1, 5]");
    if (!(rom.tolerance >= 0.0) || !std::isfinite(rom.tolerance)) {
        throw ValidationError("rom.tolerance must be finite and >= 0");
    }
    if (rom.mode == RunMode::RomRecycled && rom.basis_path.empty()) {
        throw ValidationError("rom.basis_path: required in rom-recycled mode");
    }
    if (output_dir.empty()) throw ValidationError("output_dir must not be empty");
}

std::string RunConfig::resolved_measurements_path() const {
    return measurements_path.empty() ? output_dir + "/measurements.bin" : measurements_path;
}

SourceDetectorLayout RunConfig::make_layout() const {
    return uniform_layout(domain, layout.sources, layout.detectors, layout.footprint_half_width);
}

PalsParams RunConfig::make_initial_guess() const {
    return initial_guess(domain, pals_grid.cols, pals_grid.rows, pals_grid.alpha0);
}

std::string serialize_config(const RunConfig& c) {
    json j;
    j["schema_version"] = RunConfig::kSchemaVersion;
    j["domain"] = domain_json(c.domain);
    j["layout"] = {{"sources", c.layout.sources},
                   {"detectors", c.layout.detectors},
                   {"footprint_half_width", c.layout.footprint_half_width}};
    j["frequencies"] = c.frequencies;
    j["pals"] = {{"m0", c.pals.m0},           {"grid_cols", c.pals_grid.cols}, {"grid_rows", c.pals_grid.rows},
                 {"alpha0", c.pals_grid.alpha0}, {"epsilon", c.pals.epsilon},   {"gamma", c.pals.gamma},
                 {"level", c.pals.level},     {"mu_in", c.pals.mu_in},         {"mu_out", c.pals.mu_out},
                 {"sigma", c.pals.sigma}};
    j["phantom"] = {{"preset", c.phantom.preset}, {"mask_path", c.phantom.mask_path}};
    j["noise"] = c.noise;
    j["optimizer"] = {{"max_iter", c.optimizer.max_iter},
                      {"gradient_tolerance", c.optimizer.gradient_tolerance},
                      {"decrease_tolerance", c.optimizer.decrease_tolerance},
                      {"initial_radius", c.optimizer.initial_radius},
                      {"min_radius", c.optimizer.min_radius}};
    j["solver"] = {{"kind", solver_kind_name(c.solver.kind)},
                   {"tolerance", c.solver.tolerance},
                   {"max_iter_factor", c.solver.max_iter_factor},
                   {"dense_fallback", c.solver.dense_fallback},
                   {"dense_fallback_limit", c.solver.dense_fallback_limit}};
    j["rom"] = {{"mode", to_string(c.rom.mode)},
                {"basis_path", c.rom.basis_path},
                {"samples", c.rom.samples},
                {"tolerance", c.rom.tolerance},
                {"projection", to_string(c.rom.projection)}};
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;
    j["measurements_path"] = c.measurements_path;
    j["diagnostics"] = {{"gap_series", c.diagnostics.gap_series}};
    return j.dump(2) + "\n";
}

RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("config: malformed document: ") + e.what());
    }
    reject_unknown(j, "", {"schema_version", "domain", "layout", "frequencies", "pals", "phantom", "noise",
                           "optimizer", "solver", "rom", "seed", "output_dir", "measurements_path", "diagnostics"});
    int version = RunConfig::kSchemaVersion;
    read(j, "schema_version", version, "");
    if (version != RunConfig::kSchemaVersion) {
        throw ValidationError("schema_version: unsupported value " + std::to_string(version));
    }
    RunConfig c;
    if (j.contains("domain")) domain_from(j["domain"], c.domain);
    if (j.contains("layout")) {
        const json& l = j["layout"];
        reject_unknown(l, "layout", {"sources", "detectors", "footprint_half_width"});
        read(l, "sources", c.layout.sources, "layout");
        read(l, "detectors", c.layout.detectors, "layout");
        read(l, "footprint_half_width", c.layout.footprint_half_width, "layout");
    }
    read(j, "frequencies", c.frequencies, "");
    bool m0_given = false;
    if (j.contains("pals")) {
        const json& p = j["pals"];
        reject_unknown(p, "pals", {"m0", "grid_cols", "grid_rows", "alpha0", "epsilon", "gamma", "level", "mu_in",
                                   "mu_out", "sigma"});
        m0_given = p.contains("m0");
        read(p, "m0", c.pals.m0, "pals");
        read(p, "grid_cols", c.pals_grid.cols, "pals");
        read(p, "grid_rows", c.pals_grid.rows, "pals");
        read(p, "alpha0", c.pals_grid.alpha0, "pals");
        read(p, "epsilon", c.pals.epsilon, "pals");
        read(p, "gamma", c.pals.gamma, "pals");
        read(p, "level", c.pals.level, "pals");
        read(p, "mu_in", c.pals.mu_in, "pals");
        read(p, "mu_out", c.pals.mu_out, "pals");
        read(p, "sigma", c.pals.sigma, "pals");
    }
    if (!m0_given) c.pals.m0 = c.pals_grid.cols * c.pals_grid.rows;
    if (j.contains("phantom")) {
        const json& p = j["phantom"];
        reject_unknown(p, "phantom", {"preset", "mask_path"});
        read(p, "preset", c.phantom.preset, "phantom");
        read(p, "mask_path", c.phantom.mask_path, "phantom");
    }
    read(j, "noise", c.noise, "");
    if (j.contains("optimizer")) {
        const json& o = j["optimizer"];
        reject_unknown(o, "optimizer",
                       {"max_iter", "gradient_tolerance", "decrease_tolerance", "initial_radius", "min_radius"});
        read(o, "max_iter", c.optimizer.max_iter, "optimizer");
        read(o, "gradient_tolerance", c.optimizer.gradient_tolerance, "optimizer");
        read(o, "decrease_tolerance", c.optimizer.decrease_tolerance, "optimizer");
        read(o, "initial_radius", c.optimizer.initial_radius, "optimizer");
        read(o, "min_radius", c.optimizer.min_radius, "optimizer");
    }
    if (j.contains("solver")) {
        const json& s = j["solver"];
        reject_unknown(s, "solver", {"kind", "tolerance", "max_iter_factor", "dense_fallback", "dense_fallback_limit"});
        std::string kind = to_string(c.solver.kind);
        read(s, "kind", kind, "solver");
        c.solver.kind = parse_solver_kind(kind);
        read(s, "tolerance", c.solver.tolerance, "solver");
        read(s, "max_iter_factor", c.solver.max_iter_factor, "solver");
        read(s, "dense_fallback", c.solver.dense_fallback, "solver");
        read(s, "dense_fallback_limit", c.solver.dense_fallback_limit, "solver");
    }
    if (j.contains("rom")) {
        const json& r = j["rom"];
        reject_unknown(r, "rom", {"mode", "basis_path", "samples", "tolerance", "projection"});
        std::string mode = to_string(c.rom.mode);
        read(r, "mode", mode, "rom");
        c.rom.mode = parse_run_mode(mode);
        read(r, "basis_path", c.rom.basis_path, "rom");
        read(r, "samples", c.rom.samples, "rom");
        read(r, "tolerance", c.rom.tolerance, "rom");
        std::string proj = to_string(c.rom.projection);
        read(r, "projection", proj, "rom");
        c.rom.projection = parse_projection_mode(proj);
    }
    read(j, "seed", c.seed, "");
    read(j, "output_dir", c.output_dir, "");
    read(j, "measurements_path", c.measurements_path, "");
    if (j.contains("diagnostics")) {
        const json& d = j["diagnostics"];
        reject_unknown(d, "diagnostics", {"gap_series"});
        read(d, "gap_series", c.diagnostics.gap_series, "diagnostics");
    }
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void save_config(const std::string& path, const RunConfig& cfg) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << serialize_config(cfg);
    if (!out) throw IoError("failed writing '" + path + "'");
}

bool operator==(const RunConfig& a, const RunConfig& b) { return serialize_config(a) == serialize_config(b); }

void save_params(const std::string& path, const VecR& p) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << std::setprecision(17);
    for (Index i = 0; i < p.size(); ++i) out << p[i] << '\n';
    if (!out) throw IoError("failed writing '" + path + "'");
}

VecR load_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open parameter file '" + path + "'");
    std::vector<double> values;
    std::string tok;
    while (in >> tok) {
        try {
            std::size_t used = 0;
            values.push_back(std::stod(tok, &used));
            if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw IoError("parameter file '" + path + "': bad value '" + tok + "'");
        }
    }
    if (values.empty()) throw IoError("parameter file '" + path + "' is empty");
    return Eigen::Map<const VecR>(values.data(), Index(values.size()));
}

void save_iterates(const std::string& path, const std::vector<VecR>& iterates) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << std::setprecision(17);
    for (const VecR& p : iterates) {
        for (Index i = 0; i < p.size(); ++i) out << (i ? "," : "") << p[i];
        out << '\n';
    }
    if (!out) throw IoError("failed writing '" + path + "'");
}

std::vector<VecR> load_iterates(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open iterate file '" + path + "'");
    std::vector<VecR> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> values;
        std::istringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ',')) {
            try {
                std::size_t used = 0;
                values.push_back(std::stod(cell, &used));
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw IoError("iterate file '" + path + "': bad value '" + cell + "'");
            }
        }
        if (!out.empty() && Index(values.size()) != out.front().size()) {
            throw IoError("iterate file '" + path + "': rows differ in length");
        }
        out.push_back(Eigen::Map<const VecR>(values.data(), Index(values.size())));
    }
    if (out.empty()) throw IoError("iterate file '" + path + "' is empty");
    return out;
}

}  // namespace dotrom
