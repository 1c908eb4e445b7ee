#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "qis/io.hpp"
#include "qis/philox.hpp"

using namespace qis;

namespace {

std::filesystem::path temp_dir() {
    const auto dir = std::filesystem::temp_directory_path() / "qis_io_tests";
    std::filesystem::create_directories(dir);
    return dir;
}

std::string path_in_tmp(const std::string& name) { return (temp_dir() / name).string(); }

void write_bytes(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

} // namespace

TEST_SUITE_BEGIN("io");

TEST_CASE("read_scene: 2x2 PGM maps linearly against maxval") {
    const std::string path = path_in_tmp("tiny.pgm");
    std::string data = "P5\n2 2\n255\n";
    data.push_back(static_cast<char>(0));
    data.push_back(static_cast<char>(127));
    data.push_back(static_cast<char>(127));
    data.push_back(static_cast<char>(255));
    write_bytes(path, data);

    const auto scene = io::read_scene(path, 6e6);
    CHECK(scene.width == 2);
    CHECK(scene.height == 2);
    CHECK(scene.flux[0] == 0.0);
    CHECK(scene.flux[1] == 127.0 / 255.0 * 6e6);
    CHECK(scene.flux[2] == 127.0 / 255.0 * 6e6);
    CHECK(scene.flux[3] == 6e6);
}

TEST_CASE("read_scene: comments tolerated, 16-bit big-endian supported") {
    const std::string path = path_in_tmp("comment.pgm");
    std::string data = "P5\n# a comment line\n2 1\n# another\n65535\n";
    data.push_back(static_cast<char>(0x01));
    data.push_back(static_cast<char>(0x00)); // 256
    data.push_back(static_cast<char>(0xFF));
    data.push_back(static_cast<char>(0xFF)); // 65535
    write_bytes(path, data);

    const auto scene = io::read_scene(path, 1.0);
    CHECK(scene.flux[0] == doctest::Approx(256.0 / 65535.0).epsilon(1e-15));
    CHECK(scene.flux[1] == 1.0);
}

TEST_CASE("read_scene: malformed input raises ParseError with a byte offset") {
    const std::string truncated = path_in_tmp("trunc.pgm");
    write_bytes(truncated, "P5\n4 4\n255\nab"); // 14 of 16 raster bytes missing
    CHECK_THROWS_AS(io::read_scene(truncated), io::ParseError);

    const std::string bad_magic = path_in_tmp("bad_magic.pgm");
    write_bytes(bad_magic, "P6\n1 1\n255\nx");
    CHECK_THROWS_AS(io::read_scene(bad_magic), io::ParseError);

    const std::string trailing = path_in_tmp("trailing.pgm");
    write_bytes(trailing, std::string("P5\n1 1\n255\nx") + "junk");
    try {
        io::read_scene(trailing);
        FAIL("expected ParseError");
    } catch (const io::ParseError& e) {
        CHECK(e.byte_offset == 12); // first byte past the expected payload
        CHECK(std::string(e.what()).find("offset") != std::string::npos);
    }

    CHECK_THROWS_AS(io::read_scene(path_in_tmp("missing_file.pgm")), std::runtime_error);
}

TEST_CASE("QISF: 1x1 zero flux is a documented 20-byte file") {
    const std::string path = path_in_tmp("one.qisf");
    RealImage img{1, 1, {0.0}};
    io::write_flux(path, img);

    const std::string bytes = read_bytes(path);
    REQUIRE(bytes.size() == 20);
    const unsigned char expected[20] = {'Q', 'I', 'S', 'F', 1, 0, 0, 0, 1, 0,
                                        0,   0,   0,   0,   0, 0, 0, 0, 0, 0};
    CHECK(std::memcmp(bytes.data(), expected, 20) == 0);
}

TEST_CASE("QISF round-trip is bit exact") {
    // pseudo-random payload incl. subnormals and big magnitudes
    RealImage img{8, 8, std::vector<double>(64)};
    const auto key = rng::key_from_seed(17);
    for (std::uint32_t i = 0; i < 64; ++i) {
        img.values[i] = rng::uniform(i, 0, 0, 0, key) * 6e6;
    }
    img.values[0] = 0.0;
    img.values[1] = 5e-324;
    img.values[2] = 1.7e308;

    const std::string path = path_in_tmp("roundtrip.qisf");
    io::write_flux(path, img);
    const RealImage back = io::read_flux(path);
    REQUIRE(back.width == 8);
    REQUIRE(back.height == 8);
    for (std::size_t i = 0; i < img.values.size(); ++i) CHECK(back.values[i] == img.values[i]);

    // a QISF scene is read verbatim regardless of c_max
    img.values[1] = 1.0;
    img.values[2] = 2.0;
    io::write_flux(path, img);
    const auto scene = io::read_scene(path, 123.0);
    for (std::size_t i = 0; i < img.values.size(); ++i) CHECK(scene.flux[i] == img.values[i]);
}

TEST_CASE("QISF: truncated and trailing payloads are rejected") {
    const std::string path = path_in_tmp("bad.qisf");
    RealImage img{2, 2, {1.0, 2.0, 3.0, 4.0}};
    io::write_flux(path, img);
    std::string bytes = read_bytes(path);

    write_bytes(path, bytes.substr(0, bytes.size() - 1));
    CHECK_THROWS_AS(io::read_flux(path), io::ParseError);

    write_bytes(path, bytes + "x");
    CHECK_THROWS_AS(io::read_flux(path), io::ParseError);
}

TEST_CASE("display image round-trip and writer determinism") {
    DisplayImage img;
    img.width = 3;
    img.height = 2;
    img.pixels = {0, 1, 127, 128, 254, 255};

    const std::string a = path_in_tmp("disp_a.pgm");
    const std::string b = path_in_tmp("disp_b.pgm");
    io::write_display(a, img);
    io::write_display(b, img);
    CHECK(read_bytes(a) == read_bytes(b));

    const DisplayImage back = io::read_display(a);
    CHECK(back.width == 3);
    CHECK(back.height == 2);
    CHECK(back.pixels == img.pixels);
}

TEST_CASE("CSV: layout, significant digits, and sentinels") {
    metrics::SnrCurve curve;
    curve.theta_axis = {0.01, 1.0, 123456.789};
    curve.labels = {"L1_T1"};
    curve.rows = {{-3.1234567891234, std::nan(""), 20.0}};

    const std::string path = path_in_tmp("curve.csv");
    io::write_csv(path, curve);
    const std::string text = read_bytes(path);

    // 4 lines: header + one per axis point
    CHECK(std::count(text.begin(), text.end(), '\n') == 4);
    CHECK(text.find("theta,L1_T1\n") == 0);
    CHECK(text.find("0.01,-3.12345679\n") != std::string::npos);
    CHECK(text.find("1,nan\n") != std::string::npos);
    CHECK(text.find("123456.789,20\n") != std::string::npos);
}

TEST_CASE("exposure sidecar round-trip") {
    sensor::ExposureConfig config{0.25e-6, 1, 4000, 2, 0xDEADBEEFCAFEBABEull};
    const std::string path = path_in_tmp("exp.cfg");
    io::write_exposure_sidecar(path, config);
    const auto back = io::read_exposure_sidecar(path);
    CHECK(back.tau == config.tau);
    CHECK(back.capacity == config.capacity);
    CHECK(back.frames == config.frames);
    CHECK(back.oversample == config.oversample);
    CHECK(back.seed == config.seed);

    write_bytes(path, "tau=1e-3\ncapacity=7\n");
    CHECK_THROWS_AS(io::read_exposure_sidecar(path), io::ParseError);

    // keys the writer would not produce are rejected
    io::write_exposure_sidecar(path, config);
    std::ofstream(path, std::ios::binary | std::ios::app) << "extra=1\n";
    CHECK_THROWS_AS(io::read_exposure_sidecar(path), io::ParseError);
}

TEST_CASE("run config round-trip") {
    io::RunConfig config;
    config.scene_path = "scene.pgm";
    config.c_max = 6e6;
    config.seed = 99;
    config.flux_out = "out.qisf";
    config.display_out = "out.pgm";
    config.tone_gamma = 2.2;
    config.fusion.denoise_sigma = 1.5;
    config.fusion.weighting = hdr::FusionConfig::Weighting::kSnr;
    config.exposures.push_back({1e-3, 4000, 1, 1, 1});
    config.exposures.push_back({0.25e-6, 1, 4000, 2, 2});

    const std::string path = path_in_tmp("run.cfg");
    io::write_run_config(path, config);
    const auto back = io::read_run_config(path);
    CHECK(back.scene_path == config.scene_path);
    CHECK(back.c_max == config.c_max);
    CHECK(back.fusion.denoise_sigma == config.fusion.denoise_sigma);
    CHECK(back.fusion.weighting == config.fusion.weighting);
    REQUIRE(back.exposures.size() == 2);
    CHECK(back.exposures[1].tau == 0.25e-6);
    CHECK(back.exposures[1].oversample == 2);
}

TEST_SUITE_END();
