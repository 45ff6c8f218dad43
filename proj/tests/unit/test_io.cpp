#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "dotrom/basis_io.hpp"
#include "dotrom/config.hpp"
#include "dotrom/errors.hpp"
#include "dotrom/synth.hpp"
#include "support.hpp"

using namespace dotrom;
using dotrom::test::TempDir;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    out << bytes;
}

GlobalBasis sample_basis(bool two_sided) {
    GlobalBasis b;
    b.v = MatR::Identity(12, 3);
    b.w = two_sided ? MatR(MatR::Identity(12, 3).colwise().reverse()) : b.v;
    b.mode = two_sided ? ProjectionMode::TwoSided : ProjectionMode::OneSided;
    b.tolerance = 1e-8;
    b.singular_values = VecR::LinSpaced(5, 3.0, 1.0);
    b.frequencies = {0.0, 2.5};
    return b;
}

}  // namespace

TEST_CASE("basis container round trip") {
    TempDir dir("basis_io");
    for (bool two : {false, true}) {
        const GlobalBasis b = sample_basis(two);
        const std::string path = dir.file(two ? "two.bin" : "one.bin");
        save_basis(path, b, 4, 5, 0xabcdef);
        const BasisFile f = load_basis(path, 0xabcdef);
        CHECK(f.header.n == 12);
        CHECK(f.header.r == 3);
        CHECK(f.header.n_src == 4);
        CHECK(f.header.n_det == 5);
        CHECK(f.header.two_sided == two);
        CHECK(f.header.frequencies == b.frequencies);
        CHECK((f.basis.v.array() == b.v.array()).all());
        CHECK((f.basis.w.array() == b.w.array()).all());
        CHECK((f.basis.singular_values.array() == b.singular_values.array()).all());
        CHECK(f.basis.mode == b.mode);
        CHECK(read_basis_header(path).grid_hash == 0xabcdef);
        CHECK(slurp(path).substr(0, 8) == "DOTBASIS");
    }
}

TEST_CASE("basis container rejects mismatches and corruption") {
    TempDir dir("basis_bad");
    const std::string path = dir.file("b.bin");
    save_basis(path, sample_basis(false), 4, 5, 17);
    CHECK_THROWS_AS(load_basis(path, 18), ValidationError);
    CHECK_NOTHROW(load_basis_unchecked(path));

    const std::string bytes = slurp(path);
    spit(dir.file("trailing.bin"), bytes + "x");
    CHECK_THROWS_AS(load_basis(dir.file("trailing.bin"), 17), IoError);
    spit(dir.file("short.bin"), bytes.substr(0, bytes.size() - 3));
    CHECK_THROWS_AS(load_basis(dir.file("short.bin"), 17), IoError);
    std::string magic = bytes;
    magic[0] = 'X';
    spit(dir.file("magic.bin"), magic);
    CHECK_THROWS_AS(load_basis(dir.file("magic.bin"), 17), IoError);
    CHECK_THROWS_AS(load_basis(dir.file("missing.bin"), 17), IoError);
}

TEST_CASE("measurement container round trip") {
    TempDir dir("meas");
    MeasurementSet m;
    m.frequencies = {0.0, 1.0};
    m.n_src = 3;
    m.n_det = 2;
    m.noise_level = 1e-3;
    m.data = VecC::Random(m.expected_size());
    const std::string path = dir.file("m.bin");
    save_measurements(path, m, 42, 99);
    const MeasurementFile f = load_measurements(path);
    CHECK(f.seed == 42);
    CHECK(f.grid_hash == 99);
    CHECK(f.data.frequencies == m.frequencies);
    CHECK(f.data.n_src == 3);
    CHECK(f.data.n_det == 2);
    CHECK(f.data.noise_level == m.noise_level);
    CHECK((f.data.data.array() == m.data.array()).all());

    const auto side = nlohmann::json::parse(slurp(path + ".json"));
    CHECK(side.at("n_src").get<int>() == 3);
    CHECK(side.at("entries").get<int>() == 12);

    spit(dir.file("trail.bin"), slurp(path) + std::string(1, '\0'));
    CHECK_THROWS_AS(load_measurements(dir.file("trail.bin")), IoError);
    const std::string bytes = slurp(path);
    spit(dir.file("short.bin"), bytes.substr(0, bytes.size() - 8));
    CHECK_THROWS_AS(load_measurements(dir.file("short.bin")), IoError);
}

TEST_CASE("graymaps in ASCII and binary form") {
    TempDir dir("pgm");
    spit(dir.file("a.pgm"), "P2\n# comment\n3 2\n255\n0 255 0\n255 0 128\n");
    const GrayImage a = read_pgm(dir.file("a.pgm"));
    CHECK(a.width == 3);
    CHECK(a.height == 2);
    CHECK(a.pixels == std::vector<std::uint8_t>{0, 255, 0, 255, 0, 128});

    write_pgm(dir.file("b.pgm"), a);
    CHECK(slurp(dir.file("b.pgm")).substr(0, 2) == "P5");
    const GrayImage b = read_pgm(dir.file("b.pgm"));
    CHECK(b.pixels == a.pixels);

    DomainSpec d = dotrom::test::square_domain(3);
    spit(dir.file("sq.pgm"), "P2 3 3 255 255 0 0 0 0 0 0 0 0");
    const auto mask = mask_from_image(read_pgm(dir.file("sq.pgm")), d);
    // File row 0 is the top surface row.
    CHECK(mask[6] == 1);
    CHECK(mask[0] == 0);
    CHECK(std::count(mask.begin(), mask.end(), 1) == 1);
    CHECK_THROWS_AS(mask_from_image(a, d), ValidationError);

    spit(dir.file("bad.pgm"), "P3\n1 1\n255\n0\n");
    CHECK_THROWS_AS(read_pgm(dir.file("bad.pgm")), IoError);
    spit(dir.file("trunc.pgm"), std::string("P5\n4 4\n255\n") + "abc");
    CHECK_THROWS_AS(read_pgm(dir.file("trunc.pgm")), IoError);
}

TEST_CASE("config round trip") {
    RunConfig cfg;
    cfg.domain = dotrom::test::square_domain(30);
    cfg.layout = {6, 8, 1};
    cfg.frequencies = {0.0, 0.5};
    cfg.pals_grid = {3, 2, 0.7};
    cfg.pals.m0 = 6;
    cfg.phantom.preset = "amoeba";
    cfg.noise = 2e-3;
    cfg.optimizer.max_iter = 31;
    cfg.solver.kind = SolverKind::SparseDirect;
    cfg.rom.mode = RunMode::Full;
    cfg.rom.tolerance = 1e-6;
    cfg.rom.projection = ProjectionMode::TwoSided;
    cfg.seed = 12345678901234ull;
    cfg.output_dir = "somewhere";
    cfg.diagnostics.gap_series = false;
    const RunConfig back = parse_config(serialize_config(cfg));
    CHECK(back == cfg);
    CHECK(serialize_config(back) == serialize_config(cfg));
    CHECK(back.seed == cfg.seed);
    CHECK(back.rom.projection == ProjectionMode::TwoSided);

    TempDir dir("cfg");
    save_config(dir.file("c.json"), cfg);
    CHECK(load_config(dir.file("c.json")) == cfg);
    CHECK(parse_config("{}") == RunConfig{});
}

TEST_CASE("config errors name the field") {
    auto message = [](const std::string& text) {
        try {
            RunConfig c = parse_config(text);
            c.validate();
        } catch (const ValidationError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(message(R"({"domain": {"nx": 40, "nz": 41}})").find("domain.nz") != std::string::npos);
    CHECK(message(R"({"domain": {"bogus": 1}})").find("domain.bogus") != std::string::npos);
    CHECK(message(R"({"rom": {"samples": 9}})").find("rom.samples") != std::string::npos);
    CHECK(message(R"({"rom": {"mode": "rom-recycled"}})").find("rom.basis_path") != std::string::npos);
    CHECK(message(R"({"noise": "loud"})").find("noise") != std::string::npos);
    CHECK(message(R"({"schema_version": 7})").find("schema_version") != std::string::npos);
    CHECK(message(R"({"phantom": {"preset": "teapot"}})").find("phantom.preset") != std::string::npos);
    CHECK(!message("{ not json").empty());
    CHECK(message(R"({"pals": {"grid_cols": 4, "grid_rows": 4}})").empty());
}

TEST_CASE("parameter and iterate files") {
    TempDir dir("params");
    const VecR p = VecR::LinSpaced(9, -1.0, 1.0) * (1.0 / 3.0);
    save_params(dir.file("p.txt"), p);
    CHECK((load_params(dir.file("p.txt")).array() == p.array()).all());
    const std::vector<VecR> its{p, 2 * p, -p};
    save_iterates(dir.file("it.csv"), its);
    const auto back = load_iterates(dir.file("it.csv"));
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK((back[i].array() == its[i].array()).all());
    CHECK_THROWS(load_params(dir.file("nope.txt")));
}
