#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "cli.hpp"
#include "support/oracles.hpp"
#include "thz/io.hpp"
#include "thz/phantoms.hpp"

using namespace thz;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("thz_test_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

struct Run {
    int code;
    std::string out, err;
};

Run run_cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("binary round trip is bitwise for every kind") {
    TempDir dir("roundtrip");
    const ImageGrid grid(7, 1.3);
    const DensityImage f(grid, oracle::uniform_values(grid.pixel_count(), 1, -5.0, 5.0));
    io::write_dataset(dir / "img.json", io::image_dataset(f));
    const auto back = io::image_from(io::read_dataset(dir / "img.json"));
    CHECK(back.values == f.values);
    CHECK(back.grid == grid);
    CHECK(fs::file_size(dir / "img.bin") == 8 * grid.pixel_count());

    const ScanGeometry geo({0.0, 0.3, 2.0}, {-0.7, 0.1, 0.2, 0.9});
    const Sinogram s(geo, oracle::uniform_values(geo.size(), 2, 0.0, 1.0));
    io::write_dataset(dir / "sino.json", io::sinogram_dataset(s, "I", "ratio"));
    const auto ds = io::read_dataset(dir / "sino.json");
    CHECK(ds.header["mode"] == "I");
    CHECK(ds.header["domain"] == "ratio");
    const auto s2 = io::sinogram_from(ds);
    CHECK(s2.values == s.values);
    CHECK(s2.geometry.angles() == geo.angles());
    CHECK(s2.geometry.offsets() == geo.offsets());

    const auto ref = synthetic_reference_pulse(0.0, 0.01, 50, 0.2, 0.03);
    std::vector<PulseTrace> traces;
    for (std::size_t c = 0; c < geo.size(); ++c) {
        traces.emplace_back(ref.t0, ref.dt, oracle::uniform_values(50, 100 + c, -1.0, 1.0));
    }
    io::write_dataset(dir / "tr.json", io::traces_dataset(RawDataSet(geo, traces, ref)));
    const auto raw = io::traces_from(io::read_dataset(dir / "tr.json"));
    CHECK(raw.reference.samples == ref.samples);
    CHECK(raw.traces.back().samples == traces.back().samples);
}

TEST_CASE("csv round trip") {
    TempDir dir("csv");
    const DensityImage f(ImageGrid(5), oracle::uniform_values(25, 4, -1.0, 1.0));
    io::write_dataset(dir / "img.json", io::image_dataset(f), io::Encoding::Csv);
    CHECK_FALSE(fs::exists(dir / "img.bin"));
    CHECK(io::image_from(io::read_dataset(dir / "img.json")).values == f.values);
}

TEST_CASE("malformed datasets raise DataError") {
    TempDir dir("bad");
    const DensityImage f(ImageGrid(4), std::vector<double>(16, 1.0));
    io::write_dataset(dir / "img.json", io::image_dataset(f));
    // truncated sidecar
    fs::resize_file(dir / "img.bin", 8 * 15);
    CHECK_THROWS_AS(io::read_dataset(dir / "img.json"), io::DataError);

    auto ds = io::image_dataset(f);
    ds.payload.pop_back();
    CHECK_THROWS(io::write_dataset(dir / "short.json", ds));

    io::write_dataset(dir / "v.json", io::image_dataset(f), io::Encoding::Csv);
    auto text = slurp(dir / "v.json");
    text.replace(text.find("\"schema_version\": \"1\""), 21, "\"schema_version\": \"9\"");
    std::ofstream(dir / "v.json") << text;
    CHECK_THROWS_AS(io::read_dataset(dir / "v.json"), io::DataError);

    std::ofstream(dir / "junk.json") << "{not json";
    CHECK_THROWS_AS(io::read_dataset(dir / "junk.json"), io::DataError);
}

TEST_CASE("pgm preview") {
    TempDir dir("pgm");
    const DensityImage f(ImageGrid(2), {0.0, 3.0, 3.0, 0.0});
    io::write_pgm(dir / "a.pgm", f);
    const auto bytes = slurp(dir / "a.pgm");
    const std::string head = "P5\n2 2\n255\n";
    REQUIRE(bytes.size() == head.size() + 4);
    CHECK(bytes.substr(0, head.size()) == head);
    CHECK(static_cast<unsigned char>(bytes[head.size()]) == 0);
    CHECK(static_cast<unsigned char>(bytes[head.size() + 1]) == 255);
}

TEST_CASE("phantom and simulate commands") {
    TempDir dir("cli");
    REQUIRE(run_cli({"phantom", "-o", dir / "tri.json"}).code == 0);
    const auto tri = io::image_from(io::read_dataset(dir / "tri.json"));
    CHECK(tri.grid.size() == 81);
    CHECK(fs::exists(dir / "tri.bin"));

    REQUIRE(run_cli({"phantom", "--shape", "disk", "--radius", "0", "--n", "31", "-o", dir / "zero.json"}).code == 0);
    const auto zero = io::image_from(io::read_dataset(dir / "zero.json"));
    CHECK(norm2(zero.values) == 0.0);

    REQUIRE(run_cli({"simulate", "-i", dir / "zero.json", "-o", dir / "ones.json", "--angles", "12", "--offsets", "9"}).code == 0);
    for (double v : io::read_dataset(dir / "ones.json").payload) CHECK(v == 1.0);

    REQUIRE(run_cli({"phantom", "--shape", "disk", "--radius", "0.5", "--n", "41", "-o", dir / "disk.json"}).code == 0);
    REQUIRE(run_cli({"simulate", "-i", dir / "disk.json", "-o", dir / "sr.json", "--model", "single-ray", "--angles", "18",
                 "--offsets", "21"})
                .code == 0);
    const auto sr = io::sinogram_from(io::read_dataset(dir / "sr.json"));
    const auto disk = io::image_from(io::read_dataset(dir / "disk.json"));
    const auto Rf = apply_radon(build_projector(disk.grid, sr.geometry), disk);
    double worst = 0.0;
    for (std::size_t r = 0; r < Rf.values.size(); ++r) worst = std::max(worst, std::abs(-2.0 * std::log(sr.values[r]) - Rf.values[r]));
    CHECK(worst < 1e-12);
    const auto exact = analytic_disk_sinogram(sr.geometry, {0.0, 0.0}, 0.5, 1.0);
    CHECK(std::abs(Rf.at(10, 0) - exact.at(10, 0)) <= 2 * disk.grid.pixel_side());
}

TEST_CASE("preprocess command") {
    TempDir dir("prep");
    const auto geo = ScanGeometry::uniform(6, 5);
    const Sinogram s(geo, oracle::uniform_values(geo.size(), 5, 0.1, 0.9));
    io::write_dataset(dir / "s.json", io::sinogram_dataset(s, "P", "ratio"));
    REQUIRE(run_cli({"preprocess", "-i", dir / "s.json", "-o", dir / "id.json", "--clip", "inf"}).code == 0);
    CHECK(io::read_dataset(dir / "id.json").payload == s.values);

    const Sinogram c(geo, std::vector<double>(geo.size(), std::exp(-1.0)));
    io::write_dataset(dir / "c.json", io::sinogram_dataset(c, "P", "ratio"));
    REQUIRE(run_cli({"preprocess", "-i", dir / "c.json", "-o", dir / "l.json", "--log"}).code == 0);
    const auto l = io::read_dataset(dir / "l.json");
    CHECK(l.header["domain"] == "log");
    for (double v : l.payload) CHECK(v == doctest::Approx(2.0).epsilon(1e-14));

    // traces identical to the reference give a zero sinogram
    REQUIRE(run_cli({"phantom", "--shape", "disk", "--radius", "0", "--n", "21", "-o", dir / "z.json"}).code == 0);
    REQUIRE(run_cli({"simulate", "-i", dir / "z.json", "-o", dir / "t.json", "--model", "time-domain", "--angles", "4",
                 "--offsets", "5", "--samples", "200"})
                .code == 0);
    REQUIRE(run_cli({"preprocess", "-i", dir / "t.json", "-o", dir / "tl.json", "--log"}).code == 0);
    for (double v : io::read_dataset(dir / "tl.json").payload) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("exit codes") {
    TempDir dir("exit");
    CHECK(run_cli({}).code == 1);
    CHECK(run_cli({"bogus"}).code == 1);
    CHECK(run_cli({"phantom"}).code == 1);
    CHECK(run_cli({"phantom", "--shape", "square", "-o", dir / "x.json"}).code == 1);
    CHECK(run_cli({"reconstruct", "-i", dir / "missing.json", "-o", dir / "r.json", "--method", "fbp"}).code == 2);
    CHECK(run_cli({"--help"}).code == 0);

    // a ratio-domain sinogram cannot feed a linear method
    const auto geo = ScanGeometry::uniform(8, 9);
    io::write_dataset(dir / "ratio.json", io::sinogram_dataset(Sinogram(geo, std::vector<double>(geo.size(), 0.5)), "P", "ratio"));
    CHECK(run_cli({"reconstruct", "-i", dir / "ratio.json", "-o", dir / "r.json", "--method", "fbp"}).code == 2);
    // and an image is not a sinogram
    REQUIRE(run_cli({"phantom", "--n", "11", "-o", dir / "img.json"}).code == 0);
    CHECK(run_cli({"preprocess", "-i", dir / "img.json", "-o", dir / "p.json"}).code == 2);

    CHECK(run_cli({"verify", "--only", "nonexistent"}).code == 1);
    const auto v = run_cli({"verify", "--only", "smoothness"});
    CHECK(v.code == 0);
    CHECK(v.out.find("smoothness") != std::string::npos);

    ::setenv("THZ_TOMO_THREADS", "zero", 1);
    CHECK(run_cli({"info"}).code == 1);
    ::setenv("THZ_TOMO_THREADS", "2", 1);
    CHECK(run_cli({"info"}).code == 0);
    ::unsetenv("THZ_TOMO_THREADS");
}

TEST_CASE("runs are deterministic and record provenance") {
    TempDir dir("det");
    REQUIRE(run_cli({"phantom", "--n", "31", "-o", dir / "p.json"}).code == 0);
    const std::vector<std::string> sim = {"simulate", "-i", dir / "p.json", "-o", dir / "s.json", "--angles", "20",
                                          "--offsets", "15", "--noise", "0.05", "--seed", "7"};
    REQUIRE(run_cli(sim).code == 0);
    const auto first_header = slurp(dir / "s.json");
    const auto first_payload = slurp(dir / "s.bin");
    REQUIRE(run_cli(sim).code == 0);
    CHECK(slurp(dir / "s.json") == first_header);
    CHECK(slurp(dir / "s.bin") == first_payload);

    const auto h = io::read_dataset(dir / "s.json").header;
    REQUIRE(h["provenance"].size() == 2);
    CHECK(h["provenance"][0]["command"] == "phantom");
    const auto& step = h["provenance"][1];
    CHECK(step["command"] == "simulate");
    CHECK(step["flags"]["angles"] == "20");
    CHECK(step["flags"]["model"] == "full-beam");
    CHECK(step["inputs"][0]["file"] == "p.json");
    CHECK(step["inputs"][0]["sha256"] == io::sha256_file(dir / "p.json"));
    CHECK(h["noise"]["seed"] == 7);

    const auto info = run_cli({"info", "-i", dir / "s.json"});
    CHECK(info.code == 0);
    CHECK(info.out.find("sinogram") != std::string::npos);
}
